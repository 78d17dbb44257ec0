"""Fidelity functionals of a two-dimensional logical subspace.

Every functional takes the evolved branches ``(rho00(t), rho11(t), rho10(t))``
of the initial matrices ``|psi0><psi0|``, ``|psi1><psi1|`` and ``|psi1><psi0|``.
``rho01(t)`` is never propagated; it equals ``rho10(t)^dagger``.

The average-type fidelities share one weighted form::

    F = w_same (<0|R00|0> + <1|R11|1>) + w_cross (<1|R00|1> + <0|R11|0>)
        + w_coh * f(<1|R10|0>)

with ``f = Re`` (plain) or ``f = abs`` (modulo a logical Z rotation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ORTHO_TOL = 1e-8
NORM_TOL = 1e-10


class FidelityWeights(NamedTuple):
    same: float
    cross: float
    coherence: float
    modulus: bool


FIDELITY_KINDS = {
    "average": FidelityWeights(1 / 3, 1 / 6, 1 / 3, False),
    "modified": FidelityWeights(1 / 3, 1 / 6, 1 / 3, True),
    "entanglement": FidelityWeights(1 / 4, 0.0, 1 / 2, False),
}


@dataclass(frozen=True)
class LogicalPair:
    psi0: np.ndarray
    psi1: np.ndarray

    def __post_init__(self):
        p0 = np.asarray(self.psi0, dtype=complex).reshape(-1)
        p1 = np.asarray(self.psi1, dtype=complex).reshape(-1)
        if p0.shape != p1.shape:
            raise ValueError(f"logical states differ in dimension: {p0.size} vs {p1.size}")
        object.__setattr__(self, "psi0", p0)
        object.__setattr__(self, "psi1", p1)

    @property
    def dim(self) -> int:
        return self.psi0.size

    @property
    def overlap(self) -> complex:
        return complex(np.vdot(self.psi0, self.psi1))

    def check_orthonormal(self, ortho_tol: float = ORTHO_TOL, norm_tol: float = NORM_TOL) -> None:
        n0, n1 = np.linalg.norm(self.psi0), np.linalg.norm(self.psi1)
        if abs(n0 - 1) > norm_tol or abs(n1 - 1) > norm_tol:
            raise ValueError(f"logical states are not normalized (norms {n0:.12g}, {n1:.12g})")
        if abs(self.overlap) > ortho_tol:
            raise ValueError(f"logical states are not orthogonal (|<psi0|psi1>| = {abs(self.overlap):.3g})")

    def density(self) -> np.ndarray:
        """Maximally mixed code state ``(|psi0><psi0| + |psi1><psi1|) / 2``."""
        return 0.5 * (np.outer(self.psi0, self.psi0.conj()) + np.outer(self.psi1, self.psi1.conj()))

    def embed(self, n_anc: int = 2, s: int = 0) -> "LogicalPair":
        e = np.zeros(n_anc)
        e[s] = 1.0
        return LogicalPair(np.kron(self.psi0, e), np.kron(self.psi1, e))

    @classmethod
    def fock(cls, dim: int, n0: int = 0, n1: int = 1) -> "LogicalPair":
        p0 = np.zeros(dim, dtype=complex)
        p1 = np.zeros(dim, dtype=complex)
        p0[n0] = 1
        p1[n1] = 1
        return cls(p0, p1)

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "LogicalPair":
        from .optimizer import reorthogonalize

        z = rng.standard_normal((2, dim)) + 1j * rng.standard_normal((2, dim))
        return reorthogonalize(cls(z[0], z[1]))


@dataclass
class FidelityCurve:
    tgrid: np.ndarray
    values: np.ndarray
    baseline: np.ndarray | None = None
    branches: np.ndarray | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_us", "fidelity", "break_even"])
            base = self.baseline if self.baseline is not None else [float("nan")] * len(self.tgrid)
            for t, f, b in zip(self.tgrid, self.values, base):
                w.writerow([f"{t:.9g}", f"{f:.12g}", f"{b:.12g}"])


def _split(branches):
    R = np.asarray(branches)
    return R[..., 0, :, :], R[..., 1, :, :], R[..., 2, :, :]


def _expect(psi, R, phi=None):
    phi = psi if phi is None else phi
    return np.einsum("i,...ij,j->...", psi.conj(), R, phi)


def coherence_term(pair: LogicalPair, branches) -> np.ndarray:
    """``z = tr(rho01(0) rho10(t)) = <psi1|rho10(t)|psi0>``."""
    _, _, R10 = _split(branches)
    return _expect(pair.psi1, R10, pair.psi0)


def weighted_fidelity(pair: LogicalPair, branches, kind: str = "average"):
    w = FIDELITY_KINDS[kind]
    R00, R11, R10 = _split(branches)
    p0, p1 = pair.psi0, pair.psi1
    same = _expect(p0, R00).real + _expect(p1, R11).real
    cross = _expect(p1, R00).real + _expect(p0, R11).real
    z = _expect(p1, R10, p0)
    coh = np.abs(z) if w.modulus else z.real
    return w.same * same + w.cross * cross + w.coherence * coh


def average_fidelity(pair, branches):
    return weighted_fidelity(pair, branches, "average")


def modified_average_fidelity(pair, branches):
    return weighted_fidelity(pair, branches, "modified")


def entanglement_fidelity(pair, branches):
    return weighted_fidelity(pair, branches, "entanglement")


def bloch_state(theta: float, phi: float, pair: LogicalPair) -> np.ndarray:
    return np.cos(theta / 2) * pair.psi0 + np.exp(1j * phi) * np.sin(theta / 2) * pair.psi1


def single_state_fidelity(theta, phi, pair: LogicalPair, branches):
    """``<psi_tp| rho_tp(t) |psi_tp>``, with ``rho_tp(t)`` assembled by linearity."""
    R00, R11, R10 = _split(branches)
    V = np.stack([pair.psi0, pair.psi1], axis=1)
    # branches projected on the logical frame: Q[a, b] = <psi_a| R |psi_b>
    Q00, Q11, Q10 = (V.conj().T @ R @ V for R in (R00, R11, R10))
    Q01 = Q10.conj().T
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)
    amp = np.stack([c, s], axis=-1).astype(complex)
    Q = (np.multiply.outer(c * c, Q00) + np.multiply.outer(np.abs(s) ** 2, Q11)
         + np.multiply.outer(c * s, Q10) + np.multiply.outer(c * np.conj(s), Q01))
    return np.real(np.einsum("...a,...ab,...b->...", amp.conj(), Q, amp))


def break_even(t, kappa):
    """Average fidelity of ``{|0>, |1>}`` under bare photon loss at rate ``kappa``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or kappa < 0:
        raise ValueError("t and kappa must be non-negative")
    return (np.exp(-kappa * t) + 2 * np.exp(-kappa * t / 2) + 3) / 6


def bloch_map(pair: LogicalPair, branches, n_theta: int = 64, n_phi: int = 64):
    """Single-state fidelity on a regular grid; returns ``(theta, phi, F)``.

    ``theta`` spans ``[0, pi]`` and ``phi`` spans ``[0, 2 pi)``.
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid needs at least 2 points per axis")
    theta = np.linspace(0, np.pi, n_theta)
    phi = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    return theta, phi, single_state_fidelity(T, P, pair, branches)


def bloch_average(theta, phi, F) -> float:
    """Sphere average of a :func:`bloch_map` grid with ``sin(theta)`` weights."""
    w = np.sin(theta)[:, None] * np.ones_like(phi)[None, :]
    return float(np.sum(w * F) / np.sum(w))


def write_bloch_csv(path, theta, phi, F) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "phi", "fidelity"])
        for i, th in enumerate(theta):
            for j, ph in enumerate(phi):
                w.writerow([f"{th:.9g}", f"{ph:.9g}", f"{F[i, j]:.9g}"])


def subspace_overlap(pair_a: LogicalPair, pair_b: LogicalPair) -> float:
    """``2 tr(rho_a rho_b)`` of the maximally mixed code states; 1 iff the spans coincide."""
    if pair_a.dim != pair_b.dim:
        raise ValueError("pairs live in different dimensions")
    return float(2 * np.real(np.trace(pair_a.density() @ pair_b.density())))
