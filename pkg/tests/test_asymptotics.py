import itertools
import math

import numpy as np
import pytest

from orthochan.asymptotics import (
    basis_product_state,
    bell_input,
    bell_state_vector,
    convergence_experiment,
    convex_body,
    distance_to_body,
    entropy_extremal,
    experiment_input,
    isotropic_entropy,
    isotropic_eta,
    maximally_entangled,
    maximal_block,
    mean_output_asymptotic,
    op_Q_tilde,
    op_R_tilde,
    op_S_tilde,
    op_T,
    op_T_tilde,
    project_to_body,
    von_neumann_entropy,
)
from orthochan.errors import InvalidStateError, ValidationError
from orthochan.pairings import PartialPairing, enumerate_partial_pairings


def sub_blocks(block):
    for m in range(block.n_pairs + 1):
        for sub in itertools.combinations(block.pairs, m):
            yield PartialPairing(block.n_points, sub)


class TestIsotropicState:
    def test_t_zero(self):
        assert np.allclose(isotropic_eta(2, 0.0), np.eye(4) / 4)

    def test_t_one(self):
        assert np.allclose(isotropic_eta(3, 1.0), maximally_entangled(3) / 3)

    def test_eigenvalues_k2_t_half(self):
        eigs = np.sort(np.linalg.eigvalsh(isotropic_eta(2, 0.5)))
        assert np.allclose(eigs, [0.125, 0.125, 0.125, 0.625])

    def test_t_range_validated(self):
        with pytest.raises(ValidationError):
            isotropic_eta(2, 1.5)


class TestOperatorFamily:
    def test_s_empty_is_maximally_mixed(self):
        for r in (1, 2, 3):
            s = op_S_tilde(PartialPairing(r, ()), 2, 0.4)
            assert np.allclose(s, np.eye(2**r) / 2**r)

    def test_s_single_pair_is_eta(self):
        s = op_S_tilde(PartialPairing(2, ((0, 1),)), 2, 0.5)
        assert np.allclose(s, isotropic_eta(2, 0.5))

    def test_s_states_are_density_matrices(self):
        for r in (2, 3, 4):
            for block in enumerate_partial_pairings(r):
                s = op_S_tilde(block, 2, 0.3)
                assert abs(np.trace(s) - 1.0) < 1e-12
                assert np.linalg.eigvalsh(s)[0] >= -1e-12

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_s_is_sum_of_r_over_sub_blocks(self, r):
        for k, t in ((2, 0.3), (3, 0.7)):
            for block in enumerate_partial_pairings(r):
                total = sum(op_R_tilde(sub, k, t) for sub in sub_blocks(block))
                assert np.max(np.abs(op_S_tilde(block, k, t) - total)) < 1e-12

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_mobius_inversion_back(self, r):
        k, t = 2, 0.6
        for block in enumerate_partial_pairings(r):
            total = sum(
                (-1) ** (block.n_pairs - sub.n_pairs) * op_S_tilde(sub, k, t)
                for sub in sub_blocks(block)
            )
            assert np.max(np.abs(op_R_tilde(block, k, t) - total)) < 1e-12

    def test_r_trace_is_empty_indicator(self):
        for block in enumerate_partial_pairings(3):
            tr = float(np.trace(op_R_tilde(block, 2, 0.5)).real)
            assert tr == pytest.approx(1.0 if block.n_pairs == 0 else 0.0, abs=1e-12)

    @pytest.mark.parametrize("r,d", [(1, 8), (2, 8), (3, 6)])
    def test_q_resolves_identity(self, r, d):
        total = sum(op_Q_tilde(block, d) for block in enumerate_partial_pairings(r))
        assert np.max(np.abs(total - np.eye(d**r))) < 1e-12

    def test_q_spectrum_approaches_projector_set(self):
        dists = []
        for d in (4, 8, 12):
            worst = 0.0
            for block in enumerate_partial_pairings(3):
                eigs = np.linalg.eigvalsh(op_Q_tilde(block, d))
                worst = max(worst, float(np.max(np.minimum(np.abs(eigs), np.abs(eigs - 1)))))
            dists.append(worst)
        assert dists[0] > dists[1] > dists[2]

    def test_t_tilde_normalization(self):
        block = PartialPairing(2, ((0, 1),))
        assert np.allclose(op_T_tilde(block, 4), op_T(block, 4) / 4)

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_op_t_scatter_matches_dense_construction(self, r):
        # the scatter fill against the generic tensor-placement route
        from orthochan.asymptotics import _place_factors

        for d in (2, 3):
            for block in enumerate_partial_pairings(r):
                scattered = op_T(block, d)
                dense = _place_factors(maximally_entangled(d), np.eye(d), block, d)
                assert np.array_equal(scattered, dense)


class TestMeanOutputAsymptotic:
    def test_maximally_mixed_input(self):
        d, r, k, t = 16, 2, 2, 0.5
        rho = np.eye(d**r) / d**r
        m = mean_output_asymptotic(rho, r, k, t, d)
        # block weights fall off like d^-2|B|, so the correction is tiny
        assert np.max(np.abs(m - np.eye(k**r) / k**r)) < 2.0 / d**2

    def test_bell_input_gives_eta_exactly(self):
        for d in (2, 4, 8):
            psi = bell_state_vector(PartialPairing(2, ((0, 1),)), d)
            m = mean_output_asymptotic(psi, 2, 2, 0.5, d)
            assert np.max(np.abs(m - isotropic_eta(2, 0.5))) < 1e-12

    @pytest.mark.parametrize("r,d", [(1, 3), (2, 3), (3, 2)])
    def test_two_expansions_agree(self, r, d):
        # expansion through R against the alternating expansion through Q and S
        rng = np.random.default_rng(6)
        g = rng.standard_normal((d**r, d**r)) + 1j * rng.standard_normal((d**r, d**r))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        k, t = 2, 0.45
        via_r = mean_output_asymptotic(rho, r, k, t, d)
        via_qs = np.zeros((k**r, k**r), dtype=complex)
        for block in enumerate_partial_pairings(r):
            weight = float(np.trace(op_Q_tilde(block, d) @ rho).real)
            via_qs += weight * op_S_tilde(block, k, t)
        assert np.max(np.abs(via_r - via_qs)) < 1e-10

    def test_trace_one(self):
        d, r = 3, 2
        rho = np.eye(d**r) / d**r
        m = mean_output_asymptotic(rho, r, 2, 0.3, d)
        assert abs(np.trace(m).real - 1.0) < 1e-12


class TestBellInput:
    def test_r2_rank_one(self):
        g = bell_input(PartialPairing(2, ((0, 1),)), 3)
        eigs = np.linalg.eigvalsh(g)
        assert abs(np.trace(g) - 1.0) < 1e-12
        assert np.sum(eigs > 1e-12) == 1

    def test_r3_has_mixed_factor(self):
        d = 3
        g = bell_input(PartialPairing(3, ((0, 1),)), d)
        omega_hat = maximally_entangled(d, normalized=True)
        assert np.max(np.abs(g - np.kron(omega_hat, np.eye(d) / d))) < 1e-12

    def test_non_maximal_rejected(self):
        with pytest.raises(ValidationError):
            bell_input(PartialPairing(4, ((0, 1),)), 3)

    def test_vector_matches_matrix(self):
        d = 4
        block = PartialPairing(2, ((0, 1),))
        psi = bell_state_vector(block, d)
        assert np.max(np.abs(np.outer(psi, psi.conj()) - bell_input(block, d))) < 1e-12

    def test_maximal_block_shapes(self):
        assert maximal_block(4).pairs == ((0, 1), (2, 3))
        assert maximal_block(3).singles == (2,)


class TestEntropy:
    def test_pure_state(self):
        psi = np.zeros(4)
        psi[0] = 1
        assert von_neumann_entropy(np.outer(psi, psi)) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        for r, k in ((1, 2), (2, 2), (2, 3)):
            assert von_neumann_entropy(np.eye(k**r) / k**r) == pytest.approx(r * math.log(k))

    def test_eta_value(self):
        expected = -0.625 * math.log(0.625) - 3 * 0.125 * math.log(0.125)
        assert von_neumann_entropy(isotropic_eta(2, 0.5)) == pytest.approx(expected)
        assert expected == pytest.approx(1.0735, abs=1e-4)

    def test_base_two(self):
        assert von_neumann_entropy(np.eye(2) / 2, base="2") == pytest.approx(1.0)

    def test_invalid_state_raises(self):
        with pytest.raises(InvalidStateError):
            von_neumann_entropy(np.diag([1.2, -0.2]))

    def test_extremal_closed_form_empty(self):
        assert entropy_extremal(PartialPairing(3, ()), 2, 0.5) == pytest.approx(3 * math.log(2))

    def test_extremal_t1_maximal_even(self):
        assert entropy_extremal(PartialPairing(4, ((0, 1), (2, 3))), 2, 1.0) == pytest.approx(0.0)

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_extremal_matches_eigen_entropy(self, r):
        for k, t in ((2, 0.5), (3, 0.3), (2, 0.7)):
            for block in enumerate_partial_pairings(r):
                closed = entropy_extremal(block, k, t)
                eigen = von_neumann_entropy(op_S_tilde(block, k, t))
                assert closed == pytest.approx(eigen, abs=1e-10)

    def test_entropy_strictly_decreasing_in_pairs(self):
        # the corollary's ordering: more pairs means lower entropy when t > 0
        for k, t in ((2, 0.5), (3, 0.7)):
            values = {}
            for block in enumerate_partial_pairings(4):
                values.setdefault(block.n_pairs, set()).add(round(entropy_extremal(block, k, t), 12))
            levels = [min(values[j]) for j in sorted(values)]
            assert levels[0] > levels[1] > levels[2]
            assert isotropic_entropy(k, t) < 2 * math.log(k)


class TestBodyProjection:
    def test_vertices_at_distance_zero(self):
        body = convex_body(2, 2, 0.5)
        for vertex in body.vertices:
            assert distance_to_body(vertex, body) <= 1e-7

    def test_midpoint_at_distance_zero(self):
        body = convex_body(2, 2, 0.5)
        mid = 0.5 * body.vertices[0] + 0.5 * body.vertices[1]
        assert distance_to_body(mid, body) <= 1e-7

    def test_orthogonal_perturbation_distance(self):
        body = convex_body(2, 2, 0.5)
        anchor = body.vertices[0]  # the maximally mixed vertex
        rng = np.random.default_rng(8)
        g = rng.standard_normal((4, 4))
        perturbation = (g + g.T) / 2
        perturbation -= np.trace(perturbation) / 4 * np.eye(4)
        # orthogonalize against the body's affine hull directions
        for direction in body.vertices[1:] - anchor:
            direction = direction.real
            perturbation -= (
                np.vdot(direction, perturbation).real / np.vdot(direction, direction).real
            ) * direction
        norm = math.sqrt(np.vdot(perturbation, perturbation).real)
        for eps in (1e-3, 1e-2):
            x = anchor + eps * perturbation
            assert distance_to_body(x, body) == pytest.approx(eps * norm, rel=1e-4)

    def test_projection_reports_convergence(self):
        body = convex_body(2, 2, 0.5)
        proj = project_to_body(body.vertices[1], body)
        assert proj.converged
        assert proj.weights.sum() == pytest.approx(1.0)

    def test_vertex_count_matches_partial_pairings(self):
        for r in (1, 2, 3, 4):
            body = convex_body(r, 2, 0.5)
            assert len(body.blocks) == len(enumerate_partial_pairings(r))


class TestConvergenceExperiment:
    def test_structure_and_determinism(self):
        res1 = convergence_experiment("bell", 2, 2, 0.5, (8, 16), samples=8, seed=3)
        res2 = convergence_experiment("bell", 2, 2, 0.5, (8, 16), samples=8, seed=3)
        assert res1.rows == res2.rows
        assert len(res1.rows) == 16
        assert [s["n"] for s in res1.summary] == [8, 16]

    def test_thread_invariance(self, monkeypatch):
        monkeypatch.setenv("ORTHOCHAN_THREADS", "1")
        res1 = convergence_experiment("bell", 2, 2, 0.5, (8, 16), samples=6, seed=4)
        monkeypatch.setenv("ORTHOCHAN_THREADS", "3")
        res2 = convergence_experiment("bell", 2, 2, 0.5, (8, 16), samples=6, seed=4)
        assert res1.rows == res2.rows

    def test_distance_decreases_with_n(self):
        res = convergence_experiment("bell", 2, 2, 0.5, (8, 32), samples=20, seed=5)
        assert res.summary[0]["dist_median"] > res.summary[1]["dist_median"]

    def test_bell_beats_product_entropy(self):
        bell = convergence_experiment("bell", 2, 2, 0.5, (48,), samples=20, seed=6)
        prod = convergence_experiment("product", 2, 2, 0.5, (48,), samples=20, seed=7)
        assert bell.summary[0]["entropy_mean"] < prod.summary[0]["entropy_mean"]

    def test_input_rules(self):
        assert experiment_input("product", 2, 3).shape == (9,)
        assert experiment_input("bell", 2, 3).shape == (9,)
        assert experiment_input("bell", 3, 3).shape == (27, 27)
        with pytest.raises(ValidationError):
            experiment_input("custom", 2, 3)
        with pytest.raises(ValidationError):
            experiment_input("nope", 2, 3)

    def test_odd_r_runs(self):
        res = convergence_experiment("bell", 1, 2, 0.5, (8,), samples=4, seed=8)
        assert len(res.rows) == 4

    def test_product_state_helper(self):
        psi = basis_product_state(3, 2)
        assert psi.shape == (9,)
        assert psi[0] == 1.0 and np.count_nonzero(psi) == 1
