"""Constrained Hamiltonian families on the oscillator (x) qubit space.

Complex couplings are split into two real quadrature terms so that every
optimizer-visible coefficient is real. For a pair ``|u>, |v>`` the terms are
``|u><v| + |v><u|`` ("re") and ``i(|u><v| - |v><u|)`` ("im"); a coefficient
pair ``(x, y)`` therefore puts ``x + i y`` on ``<u|H|v>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .hilbert import E, G, basis_index

SECTOR = {G: "g", E: "e"}


@dataclass(frozen=True)
class HamiltonianBasis:
    """Hermitian basis terms with ``labels[j] = (kind, m, n, quadrature)``.

    ``kind`` is ``"gg"``/``"ee"`` for in-sector terms or ``"ge"`` for
    ``|m,g><n,e|`` couplings; diagonal terms use quadrature ``"diag"``.
    """

    terms: np.ndarray
    labels: tuple
    cutoff: int
    distance: int | None = None

    def __len__(self):
        return self.terms.shape[0]

    @property
    def dim(self) -> int:
        return self.terms.shape[1]

    def label_strings(self) -> list[str]:
        return [f"{k}:{m}:{n}:{q}" for k, m, n, q in self.labels]


def _pair_terms(dim, u, v):
    X = np.zeros((dim, dim), dtype=complex)
    X[u, v] = X[v, u] = 1.0
    Y = np.zeros((dim, dim), dtype=complex)
    Y[u, v] = 1j
    Y[v, u] = -1j
    return X, Y


def _build(entries, cutoff, distance=None):
    dim = 2 * (cutoff + 1)
    terms, labels = [], []
    for kind, m, n, u, v in entries:
        if u == v:
            D = np.zeros((dim, dim), dtype=complex)
            D[u, u] = 1.0
            terms.append(D)
            labels.append((kind, m, n, "diag"))
            continue
        X, Y = _pair_terms(dim, u, v)
        terms += [X, Y]
        labels += [(kind, m, n, "re"), (kind, m, n, "im")]
    return HamiltonianBasis(np.array(terms), tuple(labels), cutoff, distance)


def all_to_all_basis(cutoff: int, include_diagonal: bool = True) -> HamiltonianBasis:
    """Couplings between any two states of the same ancilla sector."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    entries = []
    for s in (G, E):
        kind = SECTOR[s] * 2
        for m, n in combinations(range(cutoff + 1), 2):
            entries.append((kind, m, n, basis_index(m, s), basis_index(n, s)))
        if include_diagonal:
            for m in range(cutoff + 1):
                u = basis_index(m, s)
                entries.append((kind, m, m, u, u))
    return _build(entries, cutoff)


def distance_d_basis(cutoff: int, d: int) -> HamiltonianBasis:
    """Couplings ``|n+delta, g><n, e|`` with ``0 < |delta| <= d``."""
    if d < 1:
        raise ValueError("distance must be >= 1")
    if d > cutoff:
        raise ValueError(f"distance {d} exceeds cutoff {cutoff}")
    entries = []
    for delta in [*range(-d, 0), *range(1, d + 1)]:
        for n in range(cutoff + 1):
            m = n + delta
            if 0 <= m <= cutoff:
                entries.append(("ge", m, n, basis_index(m, G), basis_index(n, E)))
    return _build(entries, cutoff, d)


def assemble(basis: HamiltonianBasis, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (len(basis),):
        raise ValueError(f"expected {len(basis)} coefficients, got {alpha.shape}")
    return np.tensordot(alpha, basis.terms, axes=1)


def project_bounds(alpha, bound: float) -> np.ndarray:
    if bound <= 0:
        raise ValueError("bound must be positive")
    return np.clip(alpha, -bound, bound)


def coupling_block(H: np.ndarray) -> np.ndarray:
    """Single-mode coupling ``Ht[m, n] = <m,g|H|n,e>``."""
    return np.asarray(H)[G::2, E::2]


def hamiltonian_distance(H_tilde: np.ndarray, tol: float = 1e-10) -> int:
    """Smallest ``d`` with ``|Ht[m, n]| < tol`` whenever ``|m - n| > d``."""
    H_tilde = np.asarray(H_tilde)
    if H_tilde.ndim != 2 or H_tilde.shape[0] != H_tilde.shape[1]:
        raise ValueError("expected a square single-mode operator")
    m, n = np.nonzero(np.abs(H_tilde) >= tol)
    return int(np.max(np.abs(m - n), initial=0))


def max_out_of_band(H_tilde: np.ndarray, d: int) -> float:
    m, n = np.indices(H_tilde.shape)
    mask = np.abs(m - n) > d
    return float(np.max(np.abs(H_tilde[mask]), initial=0.0))
