"""Dressed spectrum of an oscillator coupled to a three-level qubit, and fluxonium levels.

Coupler Hamiltonian in the frame of the oscillator (qubit levels g, e, f at
0, Delta1, Delta2)::

    H = Delta1 |e><e| + Delta2 |f><f| + g1 (a^dag |g><e| + h.c.) + g2 (a^dag |e><f| + h.c.)

It conserves the excitation number ``k = n + s``, so it splits into blocks
spanned by ``|k,g>, |k-1,e>, |k-2,f>``.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cosm, eigh, sinm
from scipy.optimize import linear_sum_assignment

log = logging.getLogger(__name__)

BRANCHES = ("g", "e", "f")
OVERLAP_MIN = 0.5
DISPERSIVE_FACTOR = 5.0


class BranchCrossingError(RuntimeError):
    pass


@dataclass(frozen=True)
class CouplerParams:
    delta1: float
    delta2: float
    g1: float
    g2: float
    n_max: int = 4

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")

    @property
    def dispersive(self) -> bool:
        g = max(abs(self.g1), abs(self.g2)) * np.sqrt(self.n_max)
        return min(abs(self.delta1), abs(self.delta2)) >= DISPERSIVE_FACTOR * g

    @classmethod
    def from_ratios(cls, delta1, g1, g2sq_over_g1sq, d2_over_d1, n_max=4) -> "CouplerParams":
        return cls(delta1, d2_over_d1 * delta1, g1, np.sqrt(g2sq_over_g1sq) * g1, n_max)


def block_matrix(k: int, p: CouplerParams) -> np.ndarray:
    """Block with excitation ``k`` on the (truncated) basis ``|k,g>, |k-1,e>, |k-2,f>``."""
    size = min(k + 1, 3)
    M = np.zeros((3, 3))
    M[1, 1], M[2, 2] = p.delta1, p.delta2
    M[0, 1] = M[1, 0] = np.sqrt(k) * p.g1
    M[1, 2] = M[2, 1] = np.sqrt(max(k - 1, 0)) * p.g2
    return M[:size, :size]


def cubic_residual(lam, k: int, p: CouplerParams):
    """Characteristic polynomial ``det(M_k - lam)`` of a full 3x3 block."""
    a2, b2 = k * p.g1**2, (k - 1) * p.g2**2
    lam = np.asarray(lam)
    return -lam * (p.delta1 - lam) * (p.delta2 - lam) + lam * (a2 + b2) - a2 * p.delta2


@dataclass
class DressedSpectrum:
    """``energies[n, s]`` is the dressed level continuously connected to ``|n, s>``.

    ``vectors[n, s]`` holds its amplitudes on the block basis
    ``|k,g>, |k-1,e>, |k-2,f>`` with ``k = n + s`` (zero-padded for ``k < 2``).
    """

    params: CouplerParams
    energies: np.ndarray
    overlaps: np.ndarray
    blocks: list
    vectors: np.ndarray | None = None

    @property
    def delta_g(self) -> np.ndarray:
        """Emission frequencies ``E_{n,g} - E_{n-1,g}`` for ``n = 1 .. n_max``."""
        return np.diff(self.energies[:, 0])

    @property
    def bandwidth(self) -> float:
        d = self.delta_g
        return float(d.max() - d.min())

    @property
    def second_difference(self) -> np.ndarray:
        return np.diff(self.energies[:, 0], 2)


def coupler_spectrum(p: CouplerParams) -> DressedSpectrum:
    if not p.dispersive:
        warnings.warn("coupler parameters are outside the dispersive regime; branch labels may be unreliable",
                      RuntimeWarning, stacklevel=2)
    n_max = p.n_max
    E = np.full((n_max + 1, 3), np.nan)
    ov = np.full((n_max + 1, 3), np.nan)
    vec = np.zeros((n_max + 1, 3, 3))
    blocks = []
    for k in range(n_max + 3):
        M = block_matrix(k, p)
        w, v = eigh(M)
        weight = np.abs(v) ** 2  # weight[bare, eigen]
        rows, cols = linear_sum_assignment(-weight)
        blocks.append((w, v))
        for bare, eig in zip(rows, cols):
            n = k - bare
            if n > n_max:
                continue
            if weight[bare, eig] < OVERLAP_MIN:
                raise BranchCrossingError(
                    f"ambiguous dressed label for |{n},{BRANCHES[bare]}> (overlap {weight[bare, eig]:.2f}); "
                    "increase the detunings")
            E[n, bare] = w[eig]
            ov[n, bare] = weight[bare, eig]
            # fix the sign so the dominant bare amplitude is positive
            vec[n, bare, : len(w)] = v[:, eig] * np.sign(v[bare, eig])
    return DressedSpectrum(p, E, ov, blocks, vec)


def bandwidth(p: CouplerParams) -> float:
    return coupler_spectrum(p).bandwidth


def lambda1(n, p: CouplerParams):
    """Leading g-branch shift of the block holding ``|n+2, g>``."""
    return -(np.asarray(n) + 2) * p.g1**2 / p.delta1


def lambda2(n, p: CouplerParams):
    """Next-order g-branch shift of the block holding ``|n+2, g>``."""
    n = np.asarray(n)
    return ((n + 2) * p.g1**2 / p.delta1**2) * ((n + 2) * p.g1**2 / p.delta1 - (n + 1) * p.g2**2 / p.delta2)


def chi_e(p: CouplerParams) -> float:
    """Dispersive shift ``2 g1^2/Delta1 - g2^2/(Delta2 - Delta1)`` of the e level."""
    if abs(p.delta2 - p.delta1) <= 1e-12 * max(abs(p.delta1), 1.0):
        raise ValueError("chi_e has a pole at Delta2 = Delta1")
    return 2 * p.g1**2 / p.delta1 - p.g2**2 / (p.delta2 - p.delta1)


def chi_e_matched(g1: float, delta1: float, r: float) -> float:
    """``chi_e`` on the matched line ``Delta2 = r Delta1``, ``g2^2 = r g1^2``."""
    if r == 1:
        raise ValueError("chi_e has a pole at r = 1")
    return (g1**2 / delta1) * (r - 2) / (r - 1)


def bandwidth_scan(g2sq_over_g1sq, d2_over_d1, delta1: float, g1: float, n_max: int = 4):
    """``log10`` bandwidth on a grid (rows: g2^2/g1^2, columns: Delta2/Delta1).

    Values are floored at ``1e-12 Delta1``; cells where branch labels cross are NaN.
    """
    gr = np.asarray(g2sq_over_g1sq, dtype=float)
    dr = np.asarray(d2_over_d1, dtype=float)
    if np.any(gr <= 0) or np.any(dr <= 0):
        raise ValueError("scan ratios must be positive")
    out = np.full((gr.size, dr.size), np.nan)
    floor = 1e-12 * abs(delta1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i, x in enumerate(gr):
            for j, y in enumerate(dr):
                try:
                    b = bandwidth(CouplerParams.from_ratios(delta1, g1, x, y, n_max))
                except BranchCrossingError:
                    log.warning("label crossing at g2^2/g1^2=%g, D2/D1=%g", x, y)
                    continue
                out[i, j] = np.log10(max(b, floor))
    return out


def write_bandwidth_csv(path, g2sq_over_g1sq, d2_over_d1, log10_b) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["g2sq_over_g1sq", "d2_over_d1", "log10_bandwidth"])
        for i, x in enumerate(g2sq_over_g1sq):
            for j, y in enumerate(d2_over_d1):
                w.writerow([f"{x:.9g}", f"{y:.9g}", f"{log10_b[i, j]:.9g}"])


# ----------------------------------------------------------------------------- fluxonium


class ConvergenceError(RuntimeError):
    pass


@dataclass
class FluxoniumLevels:
    energies: np.ndarray
    n_matrix: np.ndarray
    basis_size: int

    @property
    def omega_ge(self) -> float:
        return float(self.energies[1] - self.energies[0])

    @property
    def omega_ef(self) -> float:
        return float(self.energies[2] - self.energies[1])

    @property
    def r(self) -> float:
        """``|<f|n|e>|^2 / |<e|n|g>|^2``."""
        return float(abs(self.n_matrix[2, 1]) ** 2 / abs(self.n_matrix[1, 0]) ** 2)


def _fluxonium(EC, EJ, EL, phi_ext, N, n_levels):
    a = np.diag(np.sqrt(np.arange(1, N)), 1)
    phi0 = (8 * EC / EL) ** 0.25
    phi = phi0 * (a + a.T) / np.sqrt(2)
    n = 1j * (a.T - a) / (np.sqrt(2) * phi0)
    H = 4 * EC * (n @ n).real - EJ * (np.cos(phi_ext) * cosm(phi) + np.sin(phi_ext) * sinm(phi)) + 0.5 * EL * phi @ phi
    w, v = eigh(H)
    v = v[:, :n_levels]
    return w[:n_levels] - w[0], v.conj().T @ n @ v


def fluxonium_spectrum(EC: float, EJ: float, EL: float, phi_ext: float = 0.0, basis_size: int = 60,
                       n_levels: int = 4, tol: float = 1e-3) -> FluxoniumLevels:
    """Lowest levels of ``4 EC n^2 - EJ cos(phi - phi_ext) + EL phi^2 / 2``.

    Energies share the unit of the inputs (GHz in the usual convention);
    ``tol`` (default 1 MHz in GHz units) bounds the level shift when the
    harmonic basis is doubled.
    """
    if basis_size < 60:
        raise ValueError("basis_size must be >= 60")
    if EC <= 0 or EL <= 0 or EJ < 0:
        raise ValueError("need EC > 0, EL > 0, EJ >= 0")
    w1, n1 = _fluxonium(EC, EJ, EL, phi_ext, basis_size, n_levels)
    w2, _ = _fluxonium(EC, EJ, EL, phi_ext, 2 * basis_size, n_levels)
    shift = float(np.max(np.abs(w1 - w2)))
    if shift > tol:
        raise ConvergenceError(f"levels move by {shift:.3g} on doubling the basis; increase basis_size")
    return FluxoniumLevels(w1, n1, basis_size)
