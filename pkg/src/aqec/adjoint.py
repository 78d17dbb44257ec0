"""Adjoint gradients of the fidelity objectives through the master equation.

The backward pass is the exact reverse of the forward RK4 map: for each step
the adjoint is carried through the four stages with the adjoint generator
``L^dagger(x) = i[H, x] + sum_k beta_k (A_k^dagger x A_k - {A_k^dagger A_k, x}/2)``,
which is RK4 of ``da/dt = -L^dagger(a)`` run backwards on the same grid.
Parameter gradients accumulate ``Re tr(Delta_theta(y) kbar^dagger)`` over the
stage inputs ``y`` with

* ``Delta_alpha_j(y) = -i[H_j, y]``
* ``Delta_beta_k(y) = A_k y A_k^dagger - {A_k^dagger A_k, y}/2``

Gradients therefore agree with finite differences of the discretized forward
map up to round-off, independent of the step size.

Inner-product convention: ``dF = Re sum_ij conj(a_ij) d rho_ij``, so a
complex gradient ``g`` packs ``dF/dRe + i dF/dIm``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import dag
from .lindblad import Generator, LindbladModel, Trajectory, propagate_code
from .objective import FIDELITY_KINDS, LogicalPair, weighted_fidelity

Z_FLOOR = 1e-14


@dataclass
class AdjointBundle:
    terminal: np.ndarray
    initial: np.ndarray
    grad_alpha: np.ndarray
    grad_beta: np.ndarray | None
    finals: np.ndarray | None = None
    grad_psi0: np.ndarray | None = None
    grad_psi1: np.ndarray | None = None


def _coherence_phase(pair: LogicalPair, R10: np.ndarray, modulus: bool) -> complex:
    if not modulus:
        return 1.0
    z = np.vdot(pair.psi1, R10 @ pair.psi0)
    # measure-zero kink at z = 0: fall back to the real-part derivative
    return 1.0 if abs(z) < Z_FLOOR else z / abs(z)


def terminal_adjoints(pair: LogicalPair, finals, kind: str = "modified") -> np.ndarray:
    """``dF/d rho_b(T)`` for the branches ``rho00, rho11, rho10``."""
    w = FIDELITY_KINDS[kind]
    P0 = np.outer(pair.psi0, pair.psi0.conj())
    P1 = np.outer(pair.psi1, pair.psi1.conj())
    C = np.outer(pair.psi1, pair.psi0.conj())
    phase = _coherence_phase(pair, np.asarray(finals)[2], w.modulus)
    return np.stack([w.same * P0 + w.cross * P1, w.cross * P0 + w.same * P1, w.coherence * phase * C])


def backpropagate(model: LindbladModel, traj: Trajectory, terminal, beta_grad: bool = True) -> AdjointBundle:
    """Reverse the stored RK4 trajectory from ``T`` to 0.

    Returns the adjoint of each branch at ``t = 0`` and the parameter gradients
    summed over branches.
    """
    if not traj.has_steps:
        raise ValueError("backpropagate needs a trajectory stored at every RK4 step (store_steps=True)")
    terminal = np.asarray(terminal, dtype=complex)
    if terminal.shape != traj.final.shape:
        raise ValueError(f"terminal adjoint shape {terminal.shape} does not match states {traj.final.shape}")
    gen = Generator(model.hamiltonian(), model.dissipators)
    diss = [(A, dag(A), dag(A) @ A) for _, A in model.dissipators]
    steps = traj.steps_per_interval
    tgrid = traj.tgrid
    n_steps = traj.times.size - 1
    a = terminal.copy()
    G = np.zeros((model.dim, model.dim), dtype=complex)
    gb = np.zeros(len(diss))

    def accumulate(kbar, y, G):
        kd = dag(kbar)
        G += np.sum(y @ kd - kd @ y, axis=tuple(range(y.ndim - 2)))
        if beta_grad:
            for k, (A, Ad, AdA) in enumerate(diss):
                D = A @ y @ Ad - 0.5 * (AdA @ y + y @ AdA)
                gb[k] += np.sum(np.real(np.conj(kbar) * D))

    for n in range(n_steps - 1, -1, -1):
        i = n // steps
        h = (tgrid[i + 1] - tgrid[i]) / steps
        rho = traj.states[..., n, :, :]
        y1 = rho
        k1 = gen(y1)
        y2 = rho + (0.5 * h) * k1
        k2 = gen(y2)
        y3 = rho + (0.5 * h) * k2
        k3 = gen(y3)
        y4 = rho + h * k3

        kb4 = (h / 6.0) * a
        yb4 = gen.adjoint(kb4)
        kb3 = (h / 3.0) * a + h * yb4
        yb3 = gen.adjoint(kb3)
        kb2 = (h / 3.0) * a + (0.5 * h) * yb3
        yb2 = gen.adjoint(kb2)
        kb1 = (h / 6.0) * a + (0.5 * h) * yb2
        yb1 = gen.adjoint(kb1)

        for kb, y in ((kb1, y1), (kb2, y2), (kb3, y3), (kb4, y4)):
            accumulate(kb, y, G)
        a = a + yb1 + yb2 + yb3 + yb4

    grad_alpha = np.einsum("jab,ba->j", model.basis, G).imag
    return AdjointBundle(terminal, a, grad_alpha, gb if beta_grad else None, traj.final)


def grad_logical_states(bundle: AdjointBundle, pair: LogicalPair, kind: str = "modified"):
    """Chain ``dF/d rho_b(0)`` and the explicit state dependence of ``F`` to ``(g0, g1)``.

    ``F`` is treated as a function of the raw amplitudes (no renormalization).
    """
    w = FIDELITY_KINDS[kind]
    A00, A11, A10 = bundle.initial
    R00, R11, R10 = bundle.finals
    p0, p1 = pair.psi0, pair.psi1
    # through the initial conditions rho00 = p0 p0^+, rho11 = p1 p1^+, rho10 = p1 p0^+
    g0 = (A00 + dag(A00)) @ p0 + dag(A10) @ p1
    g1 = (A11 + dag(A11)) @ p1 + A10 @ p0
    # explicit dependence of the overlap weights on the states
    S00, S11 = R00 + dag(R00), R11 + dag(R11)
    g0 = g0 + w.same * (S00 @ p0) + w.cross * (S11 @ p0)
    g1 = g1 + w.cross * (S00 @ p1) + w.same * (S11 @ p1)
    u = np.conj(_coherence_phase(pair, R10, w.modulus))
    g1 = g1 + w.coherence * u * (R10 @ p0)
    g0 = g0 + w.coherence * np.conj(u) * (dag(R10) @ p1)
    return g0, g1


def value_and_grad(model: LindbladModel, pair: LogicalPair, T: float, n_steps: int,
                   kind: str = "modified", beta_grad: bool = False):
    """Objective at time ``T`` and its gradients w.r.t. alpha, (beta), psi0, psi1."""
    traj = propagate_code(model, pair, [0.0, T], n_steps, store_steps=True)
    finals = traj.final
    F = float(weighted_fidelity(pair, finals, kind))
    bundle = backpropagate(model, traj, terminal_adjoints(pair, finals, kind), beta_grad=beta_grad)
    bundle.grad_psi0, bundle.grad_psi1 = grad_logical_states(bundle, pair, kind)
    return F, bundle


def fidelity_at(model: LindbladModel, pair: LogicalPair, T: float, n_steps: int, kind: str = "modified") -> float:
    traj = propagate_code(model, pair, [0.0, T], n_steps, store_steps=False)
    return float(weighted_fidelity(pair, traj.final, kind))


@dataclass
class GradcheckReport:
    names: list
    adjoint: np.ndarray
    finite_difference: np.ndarray
    rtol: float
    atol: float
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.adjoint - self.finite_difference)

    @property
    def rel_err(self) -> np.ndarray:
        return self.abs_err / np.maximum(np.abs(self.finite_difference), self.atol)

    @property
    def passed_mask(self) -> np.ndarray:
        return self.abs_err <= np.maximum(self.rtol * np.abs(self.finite_difference), self.atol)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed_mask)) and not self.degenerate

    @property
    def max_rel_err(self) -> float:
        return float(np.max(self.rel_err, initial=0.0))

    def table(self) -> str:
        lines = [f"{'parameter':<16}{'adjoint':>16}{'finite diff':>16}{'rel err':>11}  ok"]
        for name, ga, gf, re_, ok in zip(self.names, self.adjoint, self.finite_difference, self.rel_err,
                                         self.passed_mask):
            lines.append(f"{name:<16}{ga:>16.9g}{gf:>16.9g}{re_:>11.2e}  {'yes' if ok else 'NO'}")
        status = "degenerate; increase T" if self.degenerate else ("PASS" if self.ok else "FAIL")
        lines.append(f"max rel err {self.max_rel_err:.3e}  ->  {status}")
        return "\n".join(lines + self.notes)


def gradcheck(model: LindbladModel, pair: LogicalPair, T: float, n_steps: int = 200, kind: str = "modified",
              eps: float = 1e-6, rtol: float = 1e-5, atol: float = 1e-9, beta: bool = True) -> GradcheckReport:
    """Compare every adjoint gradient with central finite differences."""
    _, bundle = value_and_grad(model, pair, T, n_steps, kind, beta_grad=beta)

    def f(m=model, p=pair):
        return fidelity_at(m, p, T, n_steps, kind)

    names, adj, fd = [], [], []
    for j in range(len(model.alpha)):
        d = np.zeros_like(model.alpha)
        d[j] = eps
        names.append(f"alpha[{j}]")
        adj.append(bundle.grad_alpha[j])
        fd.append((f(model.with_alpha(model.alpha + d)) - f(model.with_alpha(model.alpha - d))) / (2 * eps))
    if beta:
        rates = model.rates
        for k in range(rates.size):
            d = np.zeros_like(rates)
            d[k] = eps
            names.append(f"beta[{k}]")
            adj.append(bundle.grad_beta[k])
            fd.append((f(model.with_rates(rates + d)) - f(model.with_rates(rates - d))) / (2 * eps))
    for which, g in ((0, bundle.grad_psi0), (1, bundle.grad_psi1)):
        for n in range(pair.dim):
            for part, step in (("re", eps), ("im", 1j * eps)):
                v = np.zeros(pair.dim, dtype=complex)
                v[n] = step
                if which == 0:
                    plus, minus = LogicalPair(pair.psi0 + v, pair.psi1), LogicalPair(pair.psi0 - v, pair.psi1)
                else:
                    plus, minus = LogicalPair(pair.psi0, pair.psi1 + v), LogicalPair(pair.psi0, pair.psi1 - v)
                names.append(f"{part}(psi{which}[{n}])")
                adj.append(g[n].real if part == "re" else g[n].imag)
                fd.append((_raw_fidelity(model, plus, T, n_steps, kind)
                           - _raw_fidelity(model, minus, T, n_steps, kind)) / (2 * eps))
    adj = np.array(adj)
    fd = np.array(fd)
    # state gradients always carry the trivial norm direction, so only alpha/beta decide degeneracy
    n_par = len(model.alpha) + (model.rates.size if beta else 0)
    degenerate = bool(np.all(np.abs(adj[:n_par]) < 1e-12))
    return GradcheckReport(names, adj, fd, rtol, atol, degenerate)


def _raw_fidelity(model, pair, T, n_steps, kind):
    # propagate without the orthonormality check: FD probes leave the constraint surface
    from .lindblad import code_initial_states, propagate

    traj = propagate(model, code_initial_states(pair), [0.0, T], n_steps, store_steps=False)
    return float(weighted_fidelity(pair, traj.final, kind))
