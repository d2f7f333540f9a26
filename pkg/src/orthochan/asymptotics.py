"""Asymptotic output-state theory: operator family, convex body, entropies.

In the large-n limit the mean output of the r-th channel power is a convex
combination of the states S_B = (tensor of isotropic states over the pairs of
B) x (maximally mixed singles), indexed by partial pairings B of the r copies.
The body K = conv{S_B} attracts every output sequence, and its entropy is
minimized at maximal B, i.e. at Bell-product inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import RngStream, make_channel, output_state, validate_density_matrix, worker_count
from .errors import ValidationError
from .moments import _infer_local_dim, f_beta
from .pairings import PartialPairing, enumerate_partial_pairings, pairing_from_partial

ENTROPY_EIGENVALUE_CLIP = 1e-10
PROJECTION_TOL = 1e-8
PROJECTION_MAX_ITER = 10_000


def maximally_entangled(dim: int, normalized: bool = False) -> np.ndarray:
    """The rank-one pair projector Omega Omega^* on dim^2; trace dim (or 1 if normalized)."""
    omega_vec = np.eye(dim).reshape(dim * dim)
    omega = np.outer(omega_vec, omega_vec)
    return omega / dim if normalized else omega


def isotropic_eta(k: int, t: float) -> np.ndarray:
    """Isotropic state t/k * omega + (1-t)/k^2 * I on k^2."""
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"t must lie in [0, 1], got {t}")
    return (t / k) * maximally_entangled(k) + ((1.0 - t) / k**2) * np.eye(k**2)


def _place_factors(pair_op: np.ndarray, single_op: np.ndarray, block: PartialPairing, dim: int) -> np.ndarray:
    """Tensor the two-site pair_op over block pairs and single_op over singles.

    Sites of the dim^r operator follow the block's own point order 0..r-1.
    """
    r = block.n_points
    args = []
    for a, b in block.pairs:
        args.extend((pair_op.reshape(dim, dim, dim, dim), [a, b, r + a, r + b]))
    for s in block.singles:
        args.extend((single_op, [s, r + s]))
    args.append(list(range(2 * r)))
    return np.einsum(*args).reshape(dim**r, dim**r)


def _variable_grid(weights: list[int], dim: int) -> np.ndarray:
    """Flat index offsets of all assignments of len(weights) base-dim variables."""
    if not weights:
        return np.zeros(1, dtype=np.int64)
    grids = np.meshgrid(*([np.arange(dim)] * len(weights)), indexing="ij")
    total = np.zeros(grids[0].shape, dtype=np.int64)
    for weight, grid in zip(weights, grids):
        total += weight * grid
    return total.reshape(-1)


def op_T(block: PartialPairing, k: int) -> np.ndarray:
    """Unnormalized pair projectors over block pairs, identity on singles.

    The entries are the 0/1 delta pattern "both row legs of a pair equal,
    both column legs equal, singles diagonal", so the matrix is filled by
    scattering ones instead of contracting dense factors: row and column
    pair variables are independent, single variables are shared.
    """
    r = block.n_points
    dim = k
    site_weight = [dim ** (r - 1 - s) for s in range(r)]
    pair_weights = [site_weight[a] + site_weight[b] for a, b in block.pairs]
    single_weights = [site_weight[s] for s in block.singles]
    pair_part = _variable_grid(pair_weights, dim)      # one value per pair, per side
    shared_part = _variable_grid(single_weights, dim)  # singles are shared by both sides
    rows = pair_part[:, None] + shared_part[None, :]
    cols = rows
    out = np.zeros((dim**r, dim**r))
    out[rows[:, None, :], cols[None, :, :]] = 1.0
    return out


def op_T_tilde(block: PartialPairing, d: int) -> np.ndarray:
    """d^-|B| times op_T on local dimension d."""
    return op_T(block, d) / d**block.n_pairs


def op_R_tilde(block: PartialPairing, k: int, t: float) -> np.ndarray:
    """Signed expansion factor: t(omega/k - I/k^2) on pairs, I/k on singles.

    Traceless except at the empty block, where the trace is one.
    """
    pair_op = t * (maximally_entangled(k) / k - np.eye(k**2) / k**2)
    return _place_factors(pair_op, np.eye(k) / k, block, k)


def op_S_tilde(block: PartialPairing, k: int, t: float) -> np.ndarray:
    """Extremal output state: isotropic states on pairs, maximally mixed singles."""
    return _place_factors(isotropic_eta(k, t), np.eye(k) / k, block, k)


def _superblocks(block: PartialPairing) -> list[PartialPairing]:
    """All partial pairings containing the given one."""
    out = []
    singles = block.singles
    for extra in enumerate_partial_pairings(len(singles)):
        pairs = block.pairs + tuple((singles[a], singles[b]) for a, b in extra.pairs)
        out.append(PartialPairing(block.n_points, pairs))
    return out


def op_Q_tilde(block: PartialPairing, d: int) -> np.ndarray:
    """Alternating sum of op_T_tilde over blocks containing the given one.

    These resolve the identity, and their spectra concentrate on {0, 1} as the
    local dimension grows.
    """
    out = np.zeros((d**block.n_points,) * 2)
    for sup in _superblocks(block):
        out += (-1) ** (sup.n_pairs - block.n_pairs) * op_T_tilde(sup, d)
    return out


def mean_output_asymptotic(state: np.ndarray, r: int, k: int, t: float, d: int | None = None) -> np.ndarray:
    """Limit shape of the mean output: sum over blocks of <T~_B, rho> R~_B.

    Equals the alternating expansion over <Q~_A, rho> S~_A by Moebius
    inversion; the two agree to float precision for any input.
    """
    state = np.asarray(state)
    if d is None:
        d = _infer_local_dim(state.shape[0], r)
    out = np.zeros((k**r, k**r), dtype=complex)
    for block in enumerate_partial_pairings(r):
        beta = pairing_from_partial(block, 1, r)
        coeff = f_beta(beta, state, 1).real / d**block.n_pairs
        out += coeff * op_R_tilde(block, k, t)
    return out


def bell_input(block: PartialPairing, d: int) -> np.ndarray:
    """Input G_B0: normalized pair projectors over a maximal block, mixed singles."""
    if not block.is_maximal():
        raise ValidationError(
            f"block with {block.n_pairs} pairs on {block.n_points} points is not maximal"
        )
    return _place_factors(maximally_entangled(d, normalized=True), np.eye(d) / d, block, d)


def bell_state_vector(block: PartialPairing, d: int) -> np.ndarray:
    """Pure version of bell_input for even point counts: unit vector on d^r."""
    if not block.is_maximal() or block.singles:
        raise ValidationError("a pure pair-product input needs a perfect pairing of the copies")
    r = block.n_points
    args = []
    for a, b in block.pairs:
        args.extend((np.eye(d) / math.sqrt(d), [a, b]))
    args.append(list(range(r)))
    return np.einsum(*args).reshape(d**r)


def basis_product_state(d: int, r: int) -> np.ndarray:
    """The product input e_0^(tensor r) as a unit vector on d^r."""
    psi = np.zeros(d**r)
    psi[0] = 1.0
    return psi


def von_neumann_entropy(rho: np.ndarray, base: str = "e") -> float:
    """Spectral entropy -sum(lam log lam), clipping eigenvalues in [-1e-10, 0] to 0.

    Eigenvalues below the clip window mean the input is not a state and raise.
    """
    rho = validate_density_matrix(rho, tol=ENTROPY_EIGENVALUE_CLIP)
    eigs = np.linalg.eigvalsh(rho)
    eigs = np.clip(eigs, 0.0, None)
    positive = eigs[eigs > 0]
    value = float(-np.sum(positive * np.log(positive)))
    if base == "e":
        return value
    if base == "2" or base == 2:
        return value / math.log(2.0)
    raise ValidationError(f"unsupported entropy base {base!r}; use 'e' or '2'")


def isotropic_entropy(k: int, t: float) -> float:
    """Closed-form entropy of the isotropic state in nats.

    The spectrum is {t + (1-t)/k^2} once and {(1-t)/k^2} with multiplicity
    k^2 - 1: the pair projector carries eigenvalue k, so the t-part of the
    mixture contributes its full weight to the top eigenvalue.
    """

    def h(x: float) -> float:
        return 0.0 if x <= 0 else -x * math.log(x)

    return h(t + (1.0 - t) / k**2) + (k**2 - 1) * h((1.0 - t) / k**2)


def entropy_extremal(block: PartialPairing, k: int, t: float) -> float:
    """Closed-form entropy of the extremal state S_B, in nats.

    |B| isotropic factors plus r - 2|B| maximally mixed singles.
    """
    r = block.n_points
    return block.n_pairs * isotropic_entropy(k, t) + (r - 2 * block.n_pairs) * math.log(k)


@dataclass(frozen=True)
class ConvexBody:
    """The attractor body: extremal states S_B indexed by partial pairings."""

    r: int
    k: int
    t: float
    blocks: tuple[PartialPairing, ...]
    vertices: np.ndarray  # (n_vertices, k^r, k^r)


def convex_body(r: int, k: int, t: float) -> ConvexBody:
    """Build the body for given (r, k, t); vertex order is the canonical block order."""
    blocks = tuple(enumerate_partial_pairings(r))
    vertices = np.stack([op_S_tilde(b, k, t) for b in blocks]).astype(complex)
    vertices.setflags(write=False)
    return ConvexBody(r=r, k=k, t=t, blocks=blocks, vertices=vertices)


@dataclass(frozen=True)
class BodyProjection:
    distance: float
    weights: np.ndarray
    converged: bool
    iterations: int


def _frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.vdot(a, b)))


def project_to_body(
    x: np.ndarray,
    body: ConvexBody,
    tol: float = PROJECTION_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
) -> BodyProjection:
    """Frobenius projection onto the body by conditional gradient over vertex weights.

    Starts at the nearest vertex; each step moves toward the vertex with the
    most negative gradient score (first in canonical order on ties) with exact
    line search, until the duality gap drops below tol.
    """
    x = np.asarray(x, dtype=complex)
    verts = body.vertices
    if x.shape != verts.shape[1:]:
        raise ValidationError(f"matrix has shape {x.shape}, expected {verts.shape[1:]}")
    dists0 = [_frobenius_inner(v - x, v - x) for v in verts]
    weights = np.zeros(len(verts))
    weights[int(np.argmin(dists0))] = 1.0
    point = verts[int(np.argmin(dists0))].copy()
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        diff = point - x
        scores = np.array([_frobenius_inner(v, diff) for v in verts])
        j = int(np.argmin(scores))
        gap = 2.0 * (_frobenius_inner(point, diff) - scores[j])
        if gap <= tol:
            converged = True
            break
        direction = verts[j] - point
        denom = _frobenius_inner(direction, direction)
        if denom <= 0.0:
            converged = True
            break
        step = min(1.0, max(0.0, -_frobenius_inner(diff, direction) / denom))
        if step == 0.0:
            break
        weights *= 1.0 - step
        weights[j] += step
        point = (1.0 - step) * point + step * verts[j]
    distance = math.sqrt(max(0.0, _frobenius_inner(point - x, point - x)))
    return BodyProjection(distance=distance, weights=weights, converged=converged, iterations=iterations)


def distance_to_body(
    x: np.ndarray,
    body: ConvexBody,
    tol: float = PROJECTION_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
) -> float:
    """Frobenius distance from a Hermitian matrix to the body."""
    return project_to_body(x, body, tol=tol, max_iter=max_iter).distance


def maximal_block(r: int) -> PartialPairing:
    """Canonical maximal partial pairing: (0,1), (2,3), ..., last point single if r is odd."""
    return PartialPairing(r, tuple((2 * j, 2 * j + 1) for j in range(r // 2)))


def experiment_input(rule: str, r: int, d: int, custom_state=None) -> np.ndarray:
    """Input state for a convergence run: Bell-product, basis product, or custom."""
    if rule == "bell":
        block = maximal_block(r)
        if r % 2 == 0:
            return bell_state_vector(block, d)
        return bell_input(block, d)
    if rule == "product":
        return basis_product_state(d, r)
    if rule == "custom":
        if custom_state is None:
            raise ValidationError("custom rule requires a custom_state callable")
        return custom_state(d)
    raise ValidationError(f"unknown input rule {rule!r}; use bell, product, or custom")


@dataclass(frozen=True)
class ExperimentResult:
    """Per-draw distances/entropies plus per-n summary statistics."""

    rule: str
    r: int
    k: int
    t: float
    n_grid: tuple[int, ...]
    samples: int
    seed: int
    rows: tuple[tuple[int, int, float, float], ...]  # (n, sample, dist, entropy)
    summary: tuple[dict, ...]


def convergence_experiment(
    input_rule: str,
    r: int,
    k: int,
    t: float,
    n_grid,
    samples: int,
    seed: int,
    threads: int | None = None,
    custom_state=None,
) -> ExperimentResult:
    """Distances to the body and output entropies over independent channel draws.

    Draw s of grid point index g uses random stream (seed, g*samples + s), so
    the result table is reproducible and thread-count independent.
    """
    n_grid = tuple(int(n) for n in n_grid)
    if not n_grid or samples < 1:
        raise ValidationError("need a nonempty n grid and samples >= 1")
    body = convex_body(r, k, t)
    dists = np.empty((len(n_grid), samples))
    ents = np.empty((len(n_grid), samples))

    workers = worker_count(threads)
    span = max(1, -(-samples // workers))
    jobs = []
    for gi, n in enumerate(n_grid):
        d = math.floor(t * k * n)
        if d < 1:
            raise ValidationError(f"floor(t*k*n) = {d} is degenerate at n = {n}")
        state = experiment_input(input_rule, r, d, custom_state)
        for lo in range(0, samples, span):
            jobs.append((gi, n, state, lo, min(lo + span, samples)))

    def work(job):
        gi, n, state, lo, hi = job
        for s in range(lo, hi):
            spec = make_channel(k, n, t, RngStream(seed, gi * samples + s))
            z = output_state(spec, r, state)
            dists[gi, s] = distance_to_body(z, body)
            ents[gi, s] = von_neumann_entropy(z)

    if workers == 1 or len(jobs) == 1:
        for job in jobs:
            work(job)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, jobs))

    rows = tuple(
        (n, s, float(dists[gi, s]), float(ents[gi, s]))
        for gi, n in enumerate(n_grid)
        for s in range(samples)
    )
    summary = []
    for gi, n in enumerate(n_grid):
        drow, erow = dists[gi], ents[gi]
        summary.append(
            {
                "n": n,
                "dist_mean": float(drow.mean()),
                "dist_median": float(np.median(drow)),
                "dist_q10": float(np.quantile(drow, 0.10)),
                "dist_q90": float(np.quantile(drow, 0.90)),
                "entropy_mean": float(erow.mean()),
                "entropy_median": float(np.median(erow)),
                "entropy_q10": float(np.quantile(erow, 0.10)),
                "entropy_q90": float(np.quantile(erow, 0.90)),
            }
        )
    return ExperimentResult(
        rule=input_rule,
        r=r,
        k=k,
        t=t,
        n_grid=n_grid,
        samples=samples,
        seed=seed,
        rows=rows,
        summary=tuple(summary),
    )
