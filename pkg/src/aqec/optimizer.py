"""Gradient search over Hamiltonian coefficients and logical states.

The optimizer works on one flat real vector::

    [alpha / bound, Re psi0, Im psi0, Re psi1, Im psi1]

so that every coordinate is O(1). ``psi`` lives on the oscillator alone and
is embedded with the ancilla in ``|g>``.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .adjoint import value_and_grad
from .ansatz import HamiltonianBasis, all_to_all_basis, distance_d_basis, project_bounds
from .hilbert import joint_operators, mhz
from .lindblad import IntegrationDivergedError, LindbladModel
from .objective import LogicalPair, weighted_fidelity

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLLAPSE_TOL = 1e-10


class StateCollapseError(ValueError):
    """Raised when the two logical states become parallel."""


def adam_step(params, grads, state=None, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update that *decreases* the loss whose gradient is ``grads``.

    ``state`` is ``None`` on the first call; returns ``(params, state)``.
    """
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if grads.shape != params.shape:
        raise ValueError(f"gradient shape {grads.shape} does not match parameters {params.shape}")
    bad = ~np.isfinite(grads)
    if bad.any():
        raise FloatingPointError(f"non-finite gradient at indices {np.flatnonzero(bad)[:10].tolist()}")
    if state is None:
        state = {"m": np.zeros_like(params), "v": np.zeros_like(params), "t": 0}
    t = state["t"] + 1
    m = beta1 * state["m"] + (1 - beta1) * grads
    v = beta2 * state["v"] + (1 - beta2) * grads**2
    mhat = m / (1 - beta1**t)
    vhat = v / (1 - beta2**t)
    return params - lr * mhat / (np.sqrt(vhat) + eps), {"m": m, "v": v, "t": t}


def reorthogonalize(pair: LogicalPair) -> LogicalPair:
    """Project ``psi0`` out of ``psi1``, then normalize both."""
    p0, p1 = pair.psi0, pair.psi1
    n00 = np.vdot(p0, p0).real
    if n00 == 0:
        raise StateCollapseError("psi0 is the zero vector")
    p1 = p1 - (np.vdot(p0, p1) / n00) * p0
    n1 = np.linalg.norm(p1)
    if n1 < COLLAPSE_TOL:
        raise StateCollapseError(f"logical states became parallel (residual norm {n1:.2e})")
    p0 = p0 / np.sqrt(n00)
    p1 = p1 / n1
    # second pass removes the O(eps) overlap left by round-off
    p1 = p1 - np.vdot(p0, p1) * p0
    return LogicalPair(p0, p1 / np.linalg.norm(p1))


def tangent_gradients(pair: LogicalPair, g0, g1):
    """Drop the gradient components that ``reorthogonalize`` undoes.

    These are the norm directions of both states and the ``psi0`` direction of
    ``psi1``; left in, they dominate Adam's second moments and shrink the
    useful steps.
    """
    p0, p1 = pair.psi0, pair.psi1
    g0 = g0 - np.real(np.vdot(p0, g0)) * p0
    g1 = g1 - np.vdot(p0, g1) * p0
    g1 = g1 - np.real(np.vdot(p1, g1)) * p1
    return g0, g1


@dataclass
class SearchConfig:
    cutoff: int = 20
    distance: int | None = None
    kappa: float = 0.1
    kappa_q: float = 20.0
    T: float = 0.5
    bound: float = 10.0
    lr: float = 1e-3
    lr_final: float = 3e-4
    iters: int = 1000
    seed: int = 0
    steps_per_unit: int = 2000
    kind: str = "modified"
    checkpoint_every: int = 100
    checkpoint_path: str | None = None
    tangent: bool = True

    def validate(self) -> "SearchConfig":
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if self.distance is not None and not 1 <= self.distance <= self.cutoff:
            raise ValueError(f"distance must lie in [1, cutoff], got {self.distance}")
        if self.kappa < 0 or self.kappa_q < 0:
            raise ValueError("rates must be non-negative")
        if self.T <= 0 or self.bound <= 0:
            raise ValueError("T and bound must be positive")
        if not 0 < self.lr_final <= self.lr:
            raise ValueError("need 0 < lr_final <= lr")
        if self.iters < 0 or self.steps_per_unit < 1:
            raise ValueError("iters must be >= 0 and steps_per_unit >= 1")
        return self

    @property
    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.T * self.steps_per_unit)))

    def basis(self) -> HamiltonianBasis:
        if self.distance is None:
            return all_to_all_basis(self.cutoff)
        return distance_d_basis(self.cutoff, self.distance)

    def dissipators(self):
        a, b = joint_operators(self.cutoff)
        return ((mhz(self.kappa), a), (mhz(self.kappa_q), b))


@dataclass
class SearchResult:
    pair: LogicalPair
    alpha: np.ndarray
    fidelity_history: np.ndarray
    fidelity: float
    average_fidelity: float
    wall_time: float
    config: SearchConfig
    labels: list = field(default_factory=list)
    best_iteration: int = 0

    @property
    def seed(self) -> int:
        return self.config.seed

    def model(self) -> LindbladModel:
        return LindbladModel(self.config.basis().terms, self.alpha, self.config.dissipators())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.config.seed,
            "config": asdict(self.config),
            "basis_labels": self.labels,
            "alpha": self.alpha.tolist(),
            "alpha_units": "rad/us",
            "psi0": _pack(self.pair.psi0),
            "psi1": _pack(self.pair.psi1),
            "fidelity": self.fidelity,
            "average_fidelity": self.average_fidelity,
            "best_iteration": self.best_iteration,
            "fidelity_history": self.fidelity_history.tolist(),
            "wall_time_s": self.wall_time,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "SearchResult":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema_version {d.get('schema_version')!r}")
        cfg = SearchConfig(**d["config"])
        return cls(LogicalPair(_unpack(d["psi0"]), _unpack(d["psi1"])), np.asarray(d["alpha"], dtype=float),
                   np.asarray(d.get("fidelity_history", []), dtype=float), float(d["fidelity"]),
                   float(d.get("average_fidelity", float("nan"))), float(d.get("wall_time_s", 0.0)), cfg,
                   list(d.get("basis_labels", [])), int(d.get("best_iteration", 0)))

    @classmethod
    def load(cls, path) -> "SearchResult":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _pack(psi):
    return [[float(z.real), float(z.imag)] for z in psi]


def _unpack(pairs):
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def _flatten(u, pair):
    return np.concatenate([u, pair.psi0.real, pair.psi0.imag, pair.psi1.real, pair.psi1.imag])


def _unflatten(x, n_alpha, dim):
    u = x[:n_alpha]
    r = x[n_alpha:].reshape(4, dim)
    return u, LogicalPair(r[0] + 1j * r[1], r[2] + 1j * r[3])


def initialize(config: SearchConfig, n_alpha: int):
    """Seeded ``(alpha / bound, pair)``: complex Gaussian states, small uniform alpha."""
    rng = np.random.default_rng(config.seed)
    u = rng.uniform(-0.1, 0.1, n_alpha)
    pair = LogicalPair.random(config.cutoff + 1, rng)
    return u, pair


def train(config: SearchConfig, callback=None) -> SearchResult:
    """Maximize the configured fidelity at time ``T`` with Adam.

    ``callback(iteration, fidelity)`` is called after every evaluation.
    Returns the best iterate seen (including the last one).
    """
    config.validate()
    basis = config.basis()
    bound = float(mhz(config.bound))
    model0 = LindbladModel(basis.terms, np.zeros(len(basis)), config.dissipators())
    dim = config.cutoff + 1
    u, pair = initialize(config, len(basis))
    x = _flatten(u, pair)
    state = None
    history = []
    best = (-np.inf, u.copy(), pair, 0)
    t0 = time.perf_counter()
    labels = basis.label_strings()

    def snapshot(F, u_, pair_, it):
        model = model0.with_alpha(bound * u_)
        fa = _evaluate(model, pair_, config, "average")
        return SearchResult(pair_, bound * u_, np.array(history), F, fa, time.perf_counter() - t0, config, labels,
                            it)

    for it in range(config.iters + 1):
        u, pair = _unflatten(x, len(basis), dim)
        model = model0.with_alpha(bound * u)
        embedded = pair.embed()
        try:
            F, bundle = value_and_grad(model, embedded, config.T, config.n_steps, config.kind)
        except IntegrationDivergedError:
            if config.checkpoint_path and np.isfinite(best[0]):
                snapshot(*best).save(config.checkpoint_path)
            raise
        history.append(F)
        if callback is not None:
            callback(it, F)
        if F > best[0]:
            best = (F, u.copy(), pair, it)
        if config.checkpoint_path and config.checkpoint_every and it % config.checkpoint_every == 0:
            snapshot(*best).save(config.checkpoint_path)
        if it == config.iters:
            break
        # gradient of the loss 1 - F in the flat coordinates
        gmode0, gmode1 = bundle.grad_psi0[0::2], bundle.grad_psi1[0::2]
        if config.tangent:
            gmode0, gmode1 = tangent_gradients(pair, gmode0, gmode1)
        grad = -_flatten(bound * bundle.grad_alpha, LogicalPair(gmode0, gmode1))
        frac = it / max(config.iters - 1, 1)
        lr = config.lr + (config.lr_final - config.lr) * frac
        x, state = adam_step(x, grad, state, lr)
        u, pair = _unflatten(x, len(basis), dim)
        u = project_bounds(u, 1.0)
        pair = reorthogonalize(pair)
        x = _flatten(u, pair)
        if it % 100 == 0:
            log.info("iter %d  F=%.6f  lr=%.2e", it, F, lr)

    result = snapshot(*best)
    if config.checkpoint_path:
        result.save(config.checkpoint_path)
    return result


def _evaluate(model, pair, config, kind):
    from .lindblad import propagate_code

    traj = propagate_code(model, pair.embed(), [0.0, config.T], config.n_steps, store_steps=False)
    return float(weighted_fidelity(pair.embed(), traj.final, kind))
