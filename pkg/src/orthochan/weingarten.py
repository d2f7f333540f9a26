"""Exact and leading-order orthogonal Weingarten functions.

The exact table at half-size m and dimension parameter n is the pseudo-inverse
of the Gram matrix G(a, b) = n^(#components of the two-matching graph); for
n >= 2m the Gram matrix is invertible and the table is its true inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .pairings import (
    PAIRING_ENUMERATION_CAP,
    Pairing,
    connected_components,
    enumerate_pairings,
    length,
    mobius,
)

GRAM_EIGENVALUE_CUTOFF = 1e-12  # relative cutoff for the pseudo-inverse
TABLE_CACHE_SIZE = 32


@dataclass(frozen=True, eq=False)
class WeingartenTable:
    """Exact Weingarten values for all pairing pairs at fixed (m, n)."""

    m: int
    n: float
    pairings: tuple[Pairing, ...]
    values: np.ndarray
    _index: dict[Pairing, int] = field(repr=False)

    def index(self, pairing: Pairing) -> int:
        return self._index[pairing]

    def value(self, alpha: Pairing, beta: Pairing) -> float:
        return float(self.values[self._index[alpha], self._index[beta]])


def gram_matrix(m: int, n: float, cap: int = PAIRING_ENUMERATION_CAP) -> np.ndarray:
    """Loop-counting Gram matrix with entries n^connected_components(a, b)."""
    pairs = enumerate_pairings(m, cap=cap)
    g = np.empty((len(pairs), len(pairs)))
    for i, a in enumerate(pairs):
        g[i, i] = float(n) ** m
        for j in range(i + 1, len(pairs)):
            g[i, j] = g[j, i] = float(n) ** connected_components(a, pairs[j])
    return g


def _pseudo_inverse(g: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(g)
    cut = GRAM_EIGENVALUE_CUTOFF * np.max(np.abs(w))
    inv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0, 1.0, w), 0.0)
    return (v * inv) @ v.T


@lru_cache(maxsize=TABLE_CACHE_SIZE)
def _build_table(m: int, n: float) -> WeingartenTable:
    pairs = tuple(enumerate_pairings(m))
    values = _pseudo_inverse(gram_matrix(m, n))
    values.setflags(write=False)
    return WeingartenTable(
        m=m, n=n, pairings=pairs, values=values, _index={p: i for i, p in enumerate(pairs)}
    )


def wg_exact(m: int, n: float) -> WeingartenTable:
    """Exact Weingarten table, cached per (m, n)."""
    if n <= 0:
        raise ValidationError(f"dimension parameter must be positive, got {n}")
    return _build_table(int(m), float(n))


def wg_asymptotic(alpha: Pairing, beta: Pairing, n: float) -> float:
    """Leading-order value n^(-m - |ab|/2) * mobius(a, b)."""
    if alpha.size != beta.size:
        raise ValidationError(f"size mismatch: {alpha.size} vs {beta.size}")
    m = alpha.size // 2
    dist = length(alpha.compose(beta))
    return float(n) ** (-m - dist / 2) * mobius(alpha, beta)


def integrate_monomial(index_rows, n: float, cap: int = PAIRING_ENUMERATION_CAP) -> float:
    """Haar average of a monomial in orthogonal-matrix entries.

    index_rows lists the (row, column) index of each factor U_{ij}.  Odd
    degrees integrate to zero; even degrees are the double pairing sum of
    row/column delta constraints weighted by the exact Weingarten table.
    """
    rows = [tuple(rc) for rc in index_rows]
    if len(rows) % 2 == 1:
        return 0.0
    if not rows:
        return 1.0
    m = len(rows) // 2
    pairs = enumerate_pairings(m, cap=cap)
    i_ok = np.array(
        [all(rows[s][0] == rows[t][0] for s, t in a.pairs) for a in pairs], dtype=float
    )
    j_ok = np.array(
        [all(rows[s][1] == rows[t][1] for s, t in b.pairs) for b in pairs], dtype=float
    )
    table = wg_exact(m, n)
    return float(i_ok @ table.values @ j_ok)
