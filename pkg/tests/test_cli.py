import json

import numpy as np
import pytest

from orthochan.cli import main, matrix_from_json, matrix_to_json


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


class TestMatrixJson:
    def test_round_trip(self):
        m = np.array([[1.0 + 2.0j, 0.0], [0.5, -1.0j]])
        back = matrix_from_json(matrix_to_json(m))
        assert np.array_equal(back, m)

    def test_vector_form(self):
        v = matrix_from_json([[1.0, 0.0], [0.0, 1.0], [0.5, -0.5]])
        assert v.shape == (3,)
        assert v[1] == 1j

    def test_rejects_garbage(self):
        from orthochan.errors import ValidationError

        with pytest.raises(ValidationError):
            matrix_from_json([1, 2, 3])


class TestSubcommands:
    def test_pairings(self, capsys):
        code, out = run_cli(capsys, "pairings", "--m", "2")
        assert code == 0
        payload = json.loads(out)
        assert payload["results"]["count"] == 3
        assert payload["results"]["pairings"][0] == [[0, 1], [2, 3]]
        assert payload["config"]["m"] == 2

    def test_pairings_partial(self, capsys):
        code, out = run_cli(capsys, "pairings", "--m", "3", "--partial")
        assert json.loads(out)["results"]["count"] == 4

    def test_wg_table(self, capsys):
        code, out = run_cli(capsys, "wg", "--m", "2", "--n", "10")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("# config ")
        assert lines[1] == "alpha_index,beta_index,exact,asymptotic,ratio"
        assert len(lines) == 2 + 9
        first = lines[2].split(",")
        assert float(first[2]) == pytest.approx(11 / (10 * 9 * 12))

    def test_moment_trace_preservation(self, capsys):
        code, out = run_cli(
            capsys, "moment", "--p", "1", "--r", "2", "--k", "2", "--n", "4",
            "--t", "0.5", "--input", "bell",
        )
        assert code == 0
        assert json.loads(out)["results"]["value"] == pytest.approx(1.0, abs=1e-10)

    def test_moment_terms_csv(self, capsys):
        code, out = run_cli(
            capsys, "moment", "--p", "2", "--r", "1", "--k", "2", "--n", "3",
            "--t", "0.5", "--input", "mixed", "--report", "terms",
        )
        lines = out.strip().splitlines()
        assert lines[1] == "alpha,beta,n_exp,k_exp,f_beta,wg,value"
        assert len(lines) == 2 + 9
        total = sum(float(line.split(",")[-1]) for line in lines[2:])
        assert total == pytest.approx(0.55, abs=1e-10)

    def test_simulate_deterministic(self, capsys):
        args = (
            "simulate", "--p", "2", "--r", "1", "--k", "2", "--n", "3", "--t", "0.5",
            "--samples", "500", "--seed", "11", "--input", "mixed",
        )
        code1, out1 = run_cli(capsys, *args)
        code2, out2 = run_cli(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2
        payload = json.loads(out1)
        assert payload["results"]["stderr"] > 0

    def test_simulate_thread_invariance(self, capsys, monkeypatch):
        args = (
            "simulate", "--p", "2", "--r", "1", "--k", "2", "--n", "3", "--t", "0.5",
            "--samples", "400", "--seed", "3", "--input", "product", "--format", "csv",
        )
        monkeypatch.setenv("ORTHOCHAN_THREADS", "1")
        _, out1 = run_cli(capsys, *args)
        monkeypatch.setenv("ORTHOCHAN_THREADS", "4")
        _, out2 = run_cli(capsys, *args)
        assert out1 == out2

    def test_body(self, capsys):
        code, out = run_cli(capsys, "body", "--r", "2", "--k", "2", "--t", "0.5")
        payload = json.loads(out)
        vertices = payload["results"]["vertices"]
        assert len(vertices) == 2
        for vertex in vertices:
            assert vertex["entropy"] == pytest.approx(vertex["entropy_closed_form"], abs=1e-10)

    def test_experiment_csv(self, capsys):
        code, out = run_cli(
            capsys, "experiment", "--rule", "bell", "--r", "2", "--k", "2", "--t", "0.5",
            "--n", "8,16", "--samples", "4", "--seed", "7",
        )
        lines = out.strip().splitlines()
        assert lines[1] == "n,sample,dist,entropy"
        assert len(lines) == 2 + 8

    def test_experiment_json_summary(self, capsys):
        code, out = run_cli(
            capsys, "experiment", "--rule", "product", "--r", "2", "--k", "2", "--t", "0.5",
            "--n", "8", "--samples", "4", "--seed", "7", "--format", "json",
        )
        payload = json.loads(out)
        assert payload["results"]["summary"][0]["n"] == 8

    def test_experiment_bytes_stable_across_threads(self, capsys, monkeypatch):
        args = (
            "experiment", "--rule", "bell", "--r", "2", "--k", "2", "--t", "0.5",
            "--n", "8,16", "--samples", "5", "--seed", "9",
        )
        monkeypatch.setenv("ORTHOCHAN_THREADS", "1")
        _, out1 = run_cli(capsys, *args)
        monkeypatch.setenv("ORTHOCHAN_THREADS", "4")
        _, out2 = run_cli(capsys, *args)
        assert out1 == out2

    def test_input_file(self, capsys, tmp_path):
        d = 3
        psi = np.zeros(d, dtype=complex)
        psi[1] = 1.0
        path = tmp_path / "state.json"
        path.write_text(json.dumps([[x.real, x.imag] for x in psi]))
        code, out = run_cli(
            capsys, "moment", "--p", "1", "--r", "1", "--k", "2", "--n", "3", "--t", "0.5",
            "--input", "file", "--input-file", str(path),
        )
        assert code == 0
        assert json.loads(out)["results"]["value"] == pytest.approx(1.0, abs=1e-10)

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "table.csv"
        code, _ = run_cli(capsys, "wg", "--m", "1", "--n", "5", "--out", str(path))
        assert code == 0
        assert path.read_text().splitlines()[1] == "alpha_index,beta_index,exact,asymptotic,ratio"


class TestExitCodes:
    def test_validation_error(self, capsys):
        code, _ = run_cli(capsys, "moment", "--p", "1", "--r", "1", "--k", "1",
                          "--n", "3", "--t", "0.5")
        assert code == 2

    def test_t_out_of_range(self, capsys):
        code, _ = run_cli(capsys, "moment", "--p", "1", "--r", "1", "--k", "2",
                          "--n", "3", "--t", "1.5")
        assert code == 2

    def test_budget_error(self, capsys):
        code, _ = run_cli(capsys, "moment", "--p", "2", "--r", "3", "--k", "2",
                          "--n", "3", "--t", "0.5", "--input", "mixed")
        assert code == 3

    def test_hard_cap_on_flags(self, capsys):
        code, _ = run_cli(capsys, "moment", "--p", "2", "--r", "3", "--k", "2",
                          "--n", "3", "--t", "0.5", "--max-pairing-size", "99")
        assert code == 2

    def test_missing_input_file(self, capsys):
        code, _ = run_cli(capsys, "moment", "--p", "1", "--r", "1", "--k", "2",
                          "--n", "3", "--t", "0.5", "--input", "file")
        assert code == 2

    def test_unreadable_input_file(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _ = run_cli(capsys, "moment", "--p", "1", "--r", "1", "--k", "2",
                          "--n", "3", "--t", "0.5", "--input", "file",
                          "--input-file", str(path))
        assert code == 2

    def test_argparse_usage_error_is_2(self):
        with pytest.raises(SystemExit) as err:
            main(["moment", "--p", "1"])
        assert err.value.code == 2


class TestVerifyGate:
    def test_verify_failure_exits_4(self, capsys, monkeypatch):
        import orthochan.cli as cli
        from orthochan.verify import CriterionResult

        monkeypatch.setattr(cli, "run_all", lambda seed: [CriterionResult(1, "x", False, "boom")])
        code, out = run_cli(capsys, "verify")
        assert code == 4
        assert "FAIL" in out

    def test_verify_success_exits_0(self, capsys, monkeypatch):
        import orthochan.cli as cli
        from orthochan.verify import CriterionResult

        monkeypatch.setattr(cli, "run_all", lambda seed: [CriterionResult(1, "x", True, "ok")])
        code, out = run_cli(capsys, "verify")
        assert code == 0
        assert "1/1 criteria passed" in out

    def test_tampered_mobius_sign_fails_criterion_4(self, monkeypatch):
        import orthochan.weingarten as weingarten
        from orthochan.verify import criterion_4_wg_asymptotics

        real_mobius = weingarten.mobius
        monkeypatch.setattr(weingarten, "mobius", lambda a, b: -real_mobius(a, b))
        result = criterion_4_wg_asymptotics(0)
        assert not result.passed

    def test_report_text_has_no_timestamps(self):
        from orthochan.verify import CriterionResult, report_text

        text = report_text([CriterionResult(1, "x", True, "y")], seed=5)
        assert "seed 5" in text
        assert "criterion 01 PASS x: y" in text
