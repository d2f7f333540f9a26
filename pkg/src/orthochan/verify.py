"""Acceptance checks binding the library to its quantitative contract.

Each criterion is a function returning a CriterionResult with a deterministic
detail string (no timestamps, fixed formatting), so a report built twice from
the same seed is byte-identical.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .asymptotics import (
    bell_state_vector,
    convergence_experiment,
    entropy_extremal,
    isotropic_entropy,
    op_Q_tilde,
    op_R_tilde,
    op_S_tilde,
    von_neumann_entropy,
)
from .channels import THREADS_ENV_VAR, RngStream, mc_conjugation_mean, mc_trace_moment
from .moments import exact_trace_moment, term_report
from .pairings import (
    PartialPairing,
    bumps,
    connected_components,
    enumerate_pairings,
    enumerate_partial_pairings,
    min_transverse_distance,
)
from .weingarten import wg_asymptotic, wg_exact


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def criterion_1_components(seed: int) -> CriterionResult:
    """Component count of the two-matching graph equals half the product cycles."""
    checked = 0
    mismatches = 0
    for m in range(1, 5):
        pairings = enumerate_pairings(m)
        for a in pairings:
            for b in pairings:
                checked += 1
                via_graph = connected_components(a, b)
                via_cycles = a.compose(b).cycle_count() // 2
                if via_graph != via_cycles:
                    mismatches += 1
    return CriterionResult(
        1,
        "pairing-graph components equal half the product cycle count",
        mismatches == 0,
        f"checked {checked} pairs up to 2m=8, mismatches {mismatches}",
    )


def _minimizer_structure_ok(beta, tau) -> bool:
    transverse_pairs = [p for p in beta.pairs if p[0] % 2 != p[1] % 2]
    r_bumps = [p for p in beta.pairs if p[0] % 2 == 1 and p[1] % 2 == 1]
    l_bumps = [set(p) for p in beta.pairs if p[0] % 2 == 0 and p[1] % 2 == 0]
    if not all(tau.images[a] == b for a, b in transverse_pairs):
        return False
    return all(
        any({tau.images[x], tau.images[y]} == lb for lb in l_bumps) for x, y in r_bumps
    )


def criterion_2_bumps(seed: int) -> CriterionResult:
    """Brute-forced transverse minimum equals twice the bump count, minimizers included."""
    checked = 0
    bad = 0
    for q in range(1, 5):
        for beta in enumerate_pairings(q):
            checked += 1
            minimum, minimizers = min_transverse_distance(beta, 1, q)
            flats = bumps(beta, 1, q)
            structural = all(_minimizer_structure_ok(beta, tau) for tau in minimizers)
            expected_count = math.factorial(flats) * 2**flats
            if minimum != 2 * flats or not structural or len(minimizers) != expected_count:
                bad += 1
    return CriterionResult(
        2,
        "transverse minimum equals twice the bump count with the matched-bump minimizers",
        bad == 0,
        f"checked {checked} pairings up to q=4, failures {bad}",
    )


def criterion_3_exactness(seed: int) -> CriterionResult:
    """Exact Weingarten sums agree with Monte Carlo at 1e5 samples."""
    samples = 100_000
    runs = []
    for (p, r, k, n, t), tag in (
        ((2, 1, 2, 3, 0.5), "r1"),
        ((2, 2, 2, 4, 0.5), "r2"),
    ):
        d = math.floor(t * k * n)
        inputs = {
            "bell": (np.eye(d) / d if r == 1 else bell_state_vector(PartialPairing(2, ((0, 1),)), d)),
            "product": _product_vector(d, r),
        }
        for rule, state in inputs.items():
            exact = exact_trace_moment(p, r, k, n, t, state)
            est, se = mc_trace_moment(p, r, k, n, t, state, samples, seed)
            runs.append((tag, rule, exact, est, se, abs(exact - est) / se))
    p1 = exact_trace_moment(1, 2, 2, 4, 0.5, bell_state_vector(PartialPairing(2, ((0, 1),)), 4))
    p1_ok = abs(p1 - 1.0) <= 1e-10
    ok = p1_ok and all(z <= 3.0 for *_, z in runs)
    detail = "; ".join(
        f"{tag}/{rule}: exact {_fmt(exact)} mc {_fmt(est)}+-{_fmt(se)} z {_fmt(z)}"
        for tag, rule, exact, est, se, z in runs
    )
    return CriterionResult(
        3,
        "exact trace moments match Monte Carlo within 3 standard errors",
        ok,
        f"p=1 exact {p1!r}; {detail}",
    )


def _product_vector(d: int, r: int) -> np.ndarray:
    psi = np.zeros(d**r)
    psi[0] = 1.0
    return psi


def criterion_4_wg_asymptotics(seed: int) -> CriterionResult:
    """Exact/asymptotic Weingarten ratio near one with O(1/n) decay."""
    n1, n2 = 1000, 2000
    worst_dev = 0.0
    worst_ratio = 0.0
    ok = True
    for m in range(1, 4):
        pairings = enumerate_pairings(m)
        t1 = wg_exact(m, n1)
        t2 = wg_exact(m, n2)
        for i, a in enumerate(pairings):
            for j, b in enumerate(pairings):
                dev1 = abs(t1.values[i, j] / wg_asymptotic(a, b, n1) - 1.0)
                dev2 = abs(t2.values[i, j] / wg_asymptotic(a, b, n2) - 1.0)
                worst_dev = max(worst_dev, dev1)
                if dev1 <= 1e-12:
                    ok = ok and dev2 <= 1e-12
                else:
                    worst_ratio = max(worst_ratio, dev2 / dev1)
                    ok = ok and dev2 <= 0.6 * dev1
                ok = ok and dev1 <= 0.02
    return CriterionResult(
        4,
        "Weingarten asymptotics within 2% at n=1000 and decaying like 1/n",
        ok,
        f"max deviation {_fmt(worst_dev)} (cap 0.02), max decay ratio {_fmt(worst_ratio)} (cap 0.6)",
    )


def criterion_5_showcase(seed: int) -> CriterionResult:
    """Monte Carlo mean of U A U^T equals Tr(A)/n * I entrywise."""
    n = 10
    a = RngStream(seed, 900_000).generator().standard_normal((n, n))
    mean, stderr = mc_conjugation_mean(a, 100_000, seed)
    target = np.trace(a) / n * np.eye(n)
    z = np.abs(mean - target) / stderr
    worst = float(z.max())
    return CriterionResult(
        5,
        "rotation average of a fixed matrix equals Tr(A)/n times the identity",
        worst <= 3.0,
        f"max entrywise z {_fmt(worst)} over {n}x{n} at 1e5 samples",
    )


def criterion_6_mobius_algebra(seed: int) -> CriterionResult:
    """Partial-pairing Moebius inversion identities hold to 1e-12."""
    worst = 0.0
    for r in range(1, 5):
        blocks = enumerate_partial_pairings(r)
        for k in (2, 3):
            for t in (0.3, 0.7):
                for block in blocks:
                    s = op_S_tilde(block, k, t)
                    subsum = np.zeros_like(s)
                    back = np.zeros_like(s)
                    for m in range(block.n_pairs + 1):
                        for sub in itertools.combinations(block.pairs, m):
                            sub_block = PartialPairing(r, sub)
                            subsum += op_R_tilde(sub_block, k, t)
                            back += (-1) ** (block.n_pairs - m) * op_S_tilde(sub_block, k, t)
                    worst = max(worst, float(np.max(np.abs(s - subsum))))
                    worst = max(worst, float(np.max(np.abs(op_R_tilde(block, k, t) - back))))
                    trace_target = 1.0 if block.n_pairs == 0 else 0.0
                    worst = max(worst, abs(float(np.trace(op_R_tilde(block, k, t)).real) - trace_target))
    d = 8
    for r in range(1, 5):
        total = np.zeros((d**r, d**r))
        for block in enumerate_partial_pairings(r):
            total += op_Q_tilde(block, d)
        worst = max(worst, float(np.max(np.abs(total - np.eye(d**r)))))
    return CriterionResult(
        6,
        "Moebius inversion round trips, traces, and the identity resolution at d=8",
        worst <= 1e-12,
        f"max deviation {worst:.3e} over r<=4, k=2,3, t=0.3,0.7",
    )


def criterion_7_extremal_entropy(seed: int) -> CriterionResult:
    """Closed-form entropies of the extremal states match eigen-entropies."""
    worst = 0.0
    for r in range(1, 5):
        for k in (2, 3):
            for t in (0.3, 0.5, 0.7):
                for block in enumerate_partial_pairings(r):
                    eig = von_neumann_entropy(op_S_tilde(block, k, t))
                    closed = entropy_extremal(block, k, t)
                    worst = max(worst, abs(eig - closed))
    maximal = entropy_extremal(PartialPairing(2, ((0, 1),)), 2, 0.5)
    pinned_ok = abs(maximal - 1.0735) <= 1e-3
    return CriterionResult(
        7,
        "extremal-state entropies match the closed form and pin 1.0735 nats",
        worst <= 1e-10 and pinned_ok,
        f"max |eigen - closed| {worst:.3e}; maximal-pair value {_fmt(maximal)} nats",
    )


def criterion_8_body_convergence(seed: int) -> CriterionResult:
    """Median distance to the body strictly decreases along n = 32, 64, 128."""
    result = convergence_experiment("bell", 2, 2, 0.5, (32, 64, 128), 100, seed)
    medians = [row["dist_median"] for row in result.summary]
    ok = medians[0] > medians[1] > medians[2]
    return CriterionResult(
        8,
        "output distance to the convex body shrinks with n on Bell inputs",
        ok,
        "medians " + ", ".join(_fmt(m) for m in medians),
    )


def criterion_9_entropy_ordering(seed: int) -> CriterionResult:
    """At n=128 Bell inputs beat product inputs in mean entropy, near the target."""
    samples = 100
    bell = convergence_experiment("bell", 2, 2, 0.5, (128,), samples, seed)
    prod = convergence_experiment("product", 2, 2, 0.5, (128,), samples, seed + 1)
    h_bell = np.array([row[3] for row in bell.rows])
    h_prod = np.array([row[3] for row in prod.rows])
    gap = float(h_prod.mean() - h_bell.mean())
    pooled = math.sqrt(h_bell.var(ddof=1) / samples + h_prod.var(ddof=1) / samples)
    target = isotropic_entropy(2, 0.5)
    near = abs(float(h_bell.mean()) - target) <= 0.1
    ok = gap > 3.0 * pooled and near
    return CriterionResult(
        9,
        "Bell inputs give lower output entropy than product inputs at n=128",
        ok,
        f"gap {_fmt(gap)} vs 3*stderr {_fmt(3 * pooled)}; mean Bell entropy "
        f"{_fmt(float(h_bell.mean()))} vs target {_fmt(target)}",
    )


def _q_spectrum_distance(r: int, d: int) -> float:
    worst = 0.0
    for block in enumerate_partial_pairings(r):
        eigs = np.linalg.eigvalsh(op_Q_tilde(block, d))
        worst = max(worst, float(np.max(np.minimum(np.abs(eigs), np.abs(eigs - 1.0)))))
    return worst


def criterion_10_q_spectrum(seed: int) -> CriterionResult:
    """Spectra of the identity-resolving family sit on or approach {0, 1}.

    At r=2 the family is exactly projective, so the distance is zero at every
    d (asserted to 1e-12, which subsumes any decrease); the genuine O(1/d)
    decay shows up from r=3 on, where strict decrease is asserted.
    """
    dists_r2 = [_q_spectrum_distance(2, d) for d in (8, 16, 32)]
    dists_r3 = [_q_spectrum_distance(3, d) for d in (4, 8, 12)]
    ok = max(dists_r2) <= 1e-12 and dists_r3[0] > dists_r3[1] > dists_r3[2]
    return CriterionResult(
        10,
        "spectral distance of the Q family to {0, 1}: zero at r=2, shrinking at r=3",
        ok,
        "r=2 (d=8,16,32): " + ", ".join(f"{x:.2e}" for x in dists_r2)
        + "; r=3 (d=4,8,12): " + ", ".join(_fmt(x) for x in dists_r3),
    )


def _with_threads(value: str | None):
    class _Env:
        def __enter__(self):
            self.old = os.environ.get(THREADS_ENV_VAR)
            if value is None:
                os.environ.pop(THREADS_ENV_VAR, None)
            else:
                os.environ[THREADS_ENV_VAR] = value

        def __exit__(self, *exc):
            if self.old is None:
                os.environ.pop(THREADS_ENV_VAR, None)
            else:
                os.environ[THREADS_ENV_VAR] = self.old

    return _Env()


def criterion_11_determinism(seed: int) -> CriterionResult:
    """Same seed gives bitwise-equal numbers; thread count changes nothing."""
    rho = np.eye(3) / 3
    with _with_threads("1"):
        a1 = mc_trace_moment(2, 1, 2, 3, 0.5, rho, 3000, seed)
        e1 = convergence_experiment("bell", 2, 2, 0.5, (16, 24), 20, seed)
    with _with_threads("1"):
        a2 = mc_trace_moment(2, 1, 2, 3, 0.5, rho, 3000, seed)
    with _with_threads("4"):
        a3 = mc_trace_moment(2, 1, 2, 3, 0.5, rho, 3000, seed)
        e3 = convergence_experiment("bell", 2, 2, 0.5, (16, 24), 20, seed)
    terms1 = term_report(2, 1, 2, 3, 0.5, rho)
    terms2 = term_report(2, 1, 2, 3, 0.5, rho)
    repeat_ok = repr(a1) == repr(a2) and terms1 == terms2
    threads_ok = repr(a1) == repr(a3) and repr(e1.rows) == repr(e3.rows)
    return CriterionResult(
        11,
        "repeated runs and thread-count changes leave every number bitwise intact",
        repeat_ok and threads_ok,
        f"repeat bitwise equal {repeat_ok}, thread-count invariant {threads_ok}",
    )


CRITERIA = (
    criterion_1_components,
    criterion_2_bumps,
    criterion_3_exactness,
    criterion_4_wg_asymptotics,
    criterion_5_showcase,
    criterion_6_mobius_algebra,
    criterion_7_extremal_entropy,
    criterion_8_body_convergence,
    criterion_9_entropy_ordering,
    criterion_10_q_spectrum,
    criterion_11_determinism,
)


def run_all(seed: int = 0) -> list[CriterionResult]:
    return [fn(seed) for fn in CRITERIA]


def report_text(results: list[CriterionResult], seed: int) -> str:
    lines = [f"orthochan {__version__} verification report (seed {seed})"]
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"criterion {res.index:02d} {status} {res.name}: {res.detail}")
    failed = sum(1 for r in results if not r.passed)
    lines.append(f"{len(results) - failed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"
