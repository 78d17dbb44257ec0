"""Fixed-step RK4 integration of the Lindblad master equation.

States may carry leading batch axes (``rho.shape == (..., d, d)``); the three
code branches are propagated as one stacked array, which is bit-identical to
propagating them one by one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hilbert import dag, is_hermitian


class IntegrationDivergedError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"integration produced non-finite values at t = {t:.6g} us; reduce the step size")
        self.t = t


@dataclass(frozen=True)
class LindbladModel:
    """``H(alpha) = sum_j alpha_j H_j`` plus dissipators ``(beta_k, A_k)``."""

    basis: np.ndarray
    alpha: np.ndarray
    dissipators: tuple = ()
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim == 2:
            basis = basis[None]
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError(f"basis must have shape (N, d, d), got {basis.shape}")
        if alpha.shape != (basis.shape[0],):
            raise ValueError(f"alpha has length {alpha.size}, basis has {basis.shape[0]} terms")
        diss = []
        for rate, A in self.dissipators:
            A = np.asarray(A, dtype=complex)
            if rate < 0:
                raise ValueError(f"dissipator rate must be non-negative, got {rate}")
            if A.shape != basis.shape[1:]:
                raise ValueError(f"jump operator shape {A.shape} does not match dim {basis.shape[1]}")
            diss.append((float(rate), A))
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "dissipators", tuple(diss))

    @classmethod
    def from_hamiltonian(cls, H, dissipators=()) -> "LindbladModel":
        return cls(np.asarray(H, dtype=complex)[None], np.ones(1), tuple(dissipators))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.dissipators])

    def hamiltonian(self) -> np.ndarray:
        return np.tensordot(self.alpha, self.basis, axes=1)

    def with_alpha(self, alpha) -> "LindbladModel":
        return LindbladModel(self.basis, alpha, self.dissipators, self.labels)

    def with_rates(self, rates) -> "LindbladModel":
        diss = tuple((float(r), A) for r, (_, A) in zip(rates, self.dissipators))
        return LindbladModel(self.basis, self.alpha, diss, self.labels)


class Generator:
    """Action of the Lindbladian and of its adjoint on (batched) matrices."""

    def __init__(self, H: np.ndarray, dissipators=()):
        H = np.asarray(H, dtype=complex)
        decay = np.zeros_like(H)
        self.jumps = []
        for rate, A in dissipators:
            if rate == 0:
                continue
            A = np.asarray(A, dtype=complex)
            Ad = dag(A)
            decay += rate * (Ad @ A)
            self.jumps.append((rate, A, Ad))
        self.H = H
        self.Heff = H - 0.5j * decay
        self.Heff_dag = dag(self.Heff)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.Heff @ rho - rho @ self.Heff_dag)
        for rate, A, Ad in self.jumps:
            out += rate * (A @ rho @ Ad)
        return out

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        out = 1j * (self.Heff_dag @ x - x @ self.Heff)
        for rate, A, Ad in self.jumps:
            out += rate * (Ad @ x @ A)
        return out


@dataclass
class Trajectory:
    """Stored forward solution.

    ``times`` holds every RK4 step endpoint; ``states[..., k, :, :]`` is the
    state at ``times[k]``. ``grid_index`` locates the requested output grid
    inside ``times``. With ``store_steps=False`` only the grid points are kept.
    """

    times: np.ndarray
    states: np.ndarray
    grid_index: np.ndarray
    steps_per_interval: int

    @property
    def tgrid(self) -> np.ndarray:
        return self.times[self.grid_index]

    def at_grid(self) -> np.ndarray:
        return self.states[..., self.grid_index, :, :]

    @property
    def final(self) -> np.ndarray:
        return self.states[..., -1, :, :]

    @property
    def has_steps(self) -> bool:
        return len(self.times) == (len(self.grid_index) - 1) * self.steps_per_interval + 1


def _check_grid(tgrid, steps_per_interval):
    tgrid = np.asarray(tgrid, dtype=float)
    if tgrid.ndim != 1 or tgrid.size < 1 or tgrid[0] != 0.0:
        raise ValueError("tgrid must be a 1-D time vector starting at 0")
    if np.any(np.diff(tgrid) <= 0):
        raise ValueError("tgrid must be strictly ascending")
    if int(steps_per_interval) < 1:
        raise ValueError("steps_per_interval must be >= 1")
    return tgrid, int(steps_per_interval)


def _integrate(rhs, rho0, tgrid, steps, store_steps, time_dependent):
    rho = np.array(rho0, dtype=complex, copy=True)
    n_int = tgrid.size - 1
    if store_steps:
        times = np.empty(n_int * steps + 1)
        out = np.empty(rho.shape[:-2] + (times.size,) + rho.shape[-2:], dtype=complex)
        grid_index = np.arange(0, times.size, steps)
    else:
        times = tgrid.copy()
        out = np.empty(rho.shape[:-2] + (tgrid.size,) + rho.shape[-2:], dtype=complex)
        grid_index = np.arange(tgrid.size)
    times[0] = 0.0
    out[..., 0, :, :] = rho
    k_store = 0
    for i in range(n_int):
        t0 = tgrid[i]
        h = (tgrid[i + 1] - t0) / steps
        for s in range(steps):
            t = t0 + s * h
            if time_dependent:
                k1 = rhs(t, rho)
                k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1)
                k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2)
                k4 = rhs(t + h, rho + h * k3)
            else:
                k1 = rhs(rho)
                k2 = rhs(rho + (0.5 * h) * k1)
                k3 = rhs(rho + (0.5 * h) * k2)
                k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if store_steps:
                k_store += 1
                times[k_store] = t0 + (s + 1) * h if s + 1 < steps else tgrid[i + 1]
                out[..., k_store, :, :] = rho
        if not np.isfinite(rho).all():
            raise IntegrationDivergedError(tgrid[i + 1])
        if not store_steps:
            out[..., i + 1, :, :] = rho
    return Trajectory(times, out, grid_index, steps)


def propagate(model: LindbladModel, rho0, tgrid, steps_per_interval: int = 20,
              store_steps: bool = True) -> Trajectory:
    """RK4 solution of the master equation on ``tgrid``.

    Every interval of ``tgrid`` is split into ``steps_per_interval`` equal
    steps. ``rho0`` need not be Hermitian; batched inputs are allowed.
    """
    tgrid, steps = _check_grid(tgrid, steps_per_interval)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape[-2:] != (model.dim, model.dim):
        raise ValueError(f"rho0 shape {rho0.shape} does not match model dim {model.dim}")
    gen = Generator(model.hamiltonian(), model.dissipators)
    return _integrate(gen, rho0, tgrid, steps, store_steps, time_dependent=False)


def propagate_time_dependent(H_of_t: Callable[[float], np.ndarray], dissipators: Sequence, rho0, tgrid,
                             steps_per_interval: int = 20, store_steps: bool = False,
                             hermitian_tol: float = 1e-9) -> Trajectory:
    """RK4 with ``H`` (and optionally jump operators) sampled at stage times.

    ``dissipators`` holds ``(rate, A)`` pairs where ``A`` is a matrix or a
    callable ``t -> matrix``.
    """
    tgrid, steps = _check_grid(tgrid, steps_per_interval)
    rho0 = np.asarray(rho0, dtype=complex)
    static = [(r, np.asarray(A, dtype=complex)) for r, A in dissipators if not callable(A) and r != 0]
    dynamic = [(r, A) for r, A in dissipators if callable(A) and r != 0]
    for r, _ in dissipators:
        if r < 0:
            raise ValueError(f"dissipator rate must be non-negative, got {r}")
    static_decay = sum((r * (dag(A) @ A) for r, A in static), np.zeros(rho0.shape[-2:], dtype=complex))
    static_jumps = [(r, A, dag(A)) for r, A in static]
    warned = []

    def rhs(t, rho):
        H = np.asarray(H_of_t(t), dtype=complex)
        if not warned and not is_hermitian(H, hermitian_tol):
            warned.append(t)
            warnings.warn(f"supplied Hamiltonian is not Hermitian at t = {t:.6g} us", RuntimeWarning, stacklevel=2)
        decay = static_decay
        jumps = static_jumps
        if dynamic:
            jumps = list(static_jumps)
            decay = static_decay.copy()
            for r, fn in dynamic:
                A = np.asarray(fn(t), dtype=complex)
                Ad = dag(A)
                decay = decay + r * (Ad @ A)
                jumps.append((r, A, Ad))
        Heff = H - 0.5j * decay
        out = -1j * (Heff @ rho - rho @ dag(Heff))
        for r, A, Ad in jumps:
            out += r * (A @ rho @ Ad)
        return out

    return _integrate(rhs, rho0, tgrid, steps, store_steps, time_dependent=True)


def code_initial_states(pair) -> np.ndarray:
    """Stacked ``rho00(0), rho11(0), rho10(0)`` for a logical pair."""
    p0, p1 = pair.psi0, pair.psi1
    return np.stack([np.outer(p0, p0.conj()), np.outer(p1, p1.conj()), np.outer(p1, p0.conj())])


def propagate_code(model: LindbladModel, pair, tgrid, steps_per_interval: int = 20,
                   store_steps: bool = True) -> Trajectory:
    """Propagate the three branches ``rho00, rho11, rho10`` (leading axis of ``states``)."""
    pair.check_orthonormal()
    return propagate(model, code_initial_states(pair), tgrid, steps_per_interval, store_steps)
