"""Drive synthesis and rotating-frame simulation of the circuit-level implementation.

Modes: storage oscillator ``a``, the dispersively coupled qubit ``b`` (its f
level only enters through the dressed spectrum) and a lossy qubit ``c`` that
carries entropy away. The simulated Hamiltonian is::

    H_ab + (f1 a^dag + f2 a + f3 a^2) b^dag + f4 b^dag c + h.c.

with ``b^dag = |e><g|``. The simulation runs in the interaction picture of
``H_ab``, on the dressed states ``|~n,g>, |~n,e>`` times ``{g2, e2}`` of ``c``.
Every operator becomes a sum of matrix elements rotating at ``E_i - E_j``; the
drives supply tones ``exp(-i w t)``. Drive components whose net frequency
exceeds ``rwa_window`` (default: half the smallest spacing between qubit
tones) are dropped, which is the rotating-wave approximation for drives much
weaker than that spacing.

Jump operators are split into frequency groups of width ``rwa_window``; each
group becomes its own time-dependent jump operator, which keeps the residual
which-way phases inside a group and treats distinct emission lines as
distinguishable.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .codes import sqrt3_hamiltonian
from .dressed import CouplerParams, DressedSpectrum, chi_e_matched, coupler_spectrum
from .hilbert import G, E, mhz
from .lindblad import propagate_time_dependent
from .objective import FidelityCurve, LogicalPair, break_even, weighted_fidelity

log = logging.getLogger(__name__)

TYPES = {1: -1, 2: 1, 3: 2}  # coupling type -> distance d_l: |n+d, g> <-> |n, e>
ELEMENT_MIN = 1e-6
PAPER_ALPHA = mhz(10.0)
PAPER_KAPPA = mhz(0.1)
PAPER_KAPPA_EFF = mhz(20.0)
PAPER_KAPPA_C = mhz(100.0)


def coefficients_from_h_tilde(H_tilde: np.ndarray, tol: float = 1e-12) -> dict:
    """Split ``Ht[m, n] = <m,g|H|n,e>`` into ``alpha[l][n]`` multiplying ``|n,e><n+d_l,g|``.

    Entries outside the three implementable bands raise ``ValueError``.
    """
    H_tilde = np.asarray(H_tilde, dtype=complex)
    dim = H_tilde.shape[0]
    coeffs = {}
    used = np.zeros(H_tilde.shape, bool)
    for l, d in TYPES.items():
        alpha = np.zeros(dim, dtype=complex)
        for n in range(dim):
            m = n + d
            if 0 <= m < dim:
                alpha[n] = np.conj(H_tilde[m, n])
                used[m, n] = True
        coeffs[l] = alpha
    leftover = np.abs(H_tilde[~used])
    if leftover.size and leftover.max() > tol:
        raise ValueError(f"Ht has couplings outside the implementable bands (max {leftover.max():.3g})")
    return coeffs


@dataclass
class CircuitConfig:
    coupler: CouplerParams
    coefficients: dict
    omega: float
    kappa: float
    kappa_c: float
    kappa_b: float | None = None
    a_cutoff: int = 8
    rwa_window: float | None = None  # None: half the smallest tone spacing
    kappa_eff: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        for name in ("omega", "kappa", "kappa_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.kappa_b is None:
            self.kappa_b = self.kappa
        if self.kappa_b < 0:
            raise ValueError("kappa_b must be non-negative")
        if self.a_cutoff < 2:
            raise ValueError("a_cutoff must be >= 2")
        if self.coupler.n_max < self.a_cutoff + 1:
            self.coupler = replace(self.coupler, n_max=self.a_cutoff + 1)
        if self.kappa_eff is not None and self.kappa_c > 0:
            achieved = 4 * self.omega**2 / self.kappa_c
            if abs(achieved - self.kappa_eff) > 0.01 * self.kappa_eff:
                raise ValueError(f"4 Omega^2 / kappa_c = {achieved:.4g} differs from kappa_eff = {self.kappa_eff:.4g}")

    @classmethod
    def desk(cls, scale: float = 0.02, a_cutoff: int = 8, chi: float = mhz(10.0), delta1: float = mhz(5000.0),
             r: float = 1.2, coefficients: dict | None = None, variant: int = 1) -> "CircuitConfig":
        """Matched coupler whose qubit frequency shifts by ``|chi|`` per photon; rates scaled by ``scale``.

        ``scale = 1`` gives the discovery-scale rates (alpha 10 MHz, kappa 0.1 MHz,
        effective b decay 20 MHz, kappa_c 100 MHz). ``g1`` starts from the
        second-order estimate and is rescaled until the mean dressed spacing
        matches ``chi``.
        """
        g1 = np.sqrt(abs(chi) * delta1 * abs(r - 1) / abs(r - 2))
        for _ in range(20):
            coupler = CouplerParams(delta1, r * delta1, g1, np.sqrt(r) * g1, a_cutoff + 1)
            got = abs(effective_chi(coupler_spectrum(coupler), a_cutoff))
            if abs(got - abs(chi)) < 1e-6 * abs(chi):
                break
            g1 *= np.sqrt(abs(chi) / got)
        if coefficients is None:
            H, con = sqrt3_hamiltonian(variant, PAPER_ALPHA * scale, True, a_cutoff)
            coefficients = coefficients_from_h_tilde(H[G::2, E::2])
        k_eff = PAPER_KAPPA_EFF * scale
        k_c = PAPER_KAPPA_C * scale
        omega = np.sqrt(k_eff * k_c) / 2
        return cls(coupler, coefficients, omega, PAPER_KAPPA * scale, k_c, None, a_cutoff, None, k_eff, scale)


# ----------------------------------------------------------------------------- dressed operators


class DressedFrame:
    """Dressed basis ``|~n,s>`` (``n <= a_cutoff``, ``s in {g,e}``) and bare operators projected onto it."""

    def __init__(self, spectrum: DressedSpectrum, a_cutoff: int):
        if spectrum.params.n_max < a_cutoff + 1:
            raise ValueError("spectrum must extend one photon beyond a_cutoff")
        self.spectrum = spectrum
        self.a_cutoff = a_cutoff
        nb = a_cutoff + 3  # bare photon levels 0 .. a_cutoff + 2 cover every block used
        self.n_bare = nb
        labels = [(n, s) for n in range(a_cutoff + 1) for s in (G, E)]
        U = np.zeros((3 * nb, len(labels)))
        for col, (n, s) in enumerate(labels):
            k = n + s
            for j, lvl in enumerate((0, 1, 2)):
                m = k - lvl
                if 0 <= m < nb:
                    U[3 * m + lvl, col] = spectrum.vectors[n, s, j]
        self.U = U
        self.labels = labels
        self.energies = np.array([spectrum.energies[n, s] for n, s in labels])
        a = np.diag(np.sqrt(np.arange(1, nb)), 1)
        self.a_bare = np.kron(a, np.eye(3))
        bd = np.zeros((3, 3))
        bd[1, 0] = 1.0  # |e><g|
        self.bdag_bare = np.kron(np.eye(nb), bd)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, n: int, s: int) -> int:
        return 2 * n + s

    def project(self, O_bare: np.ndarray) -> np.ndarray:
        return self.U.T @ O_bare @ self.U

    def element(self, O_bare, bra, ket) -> float:
        return float(self.U[:, self.index(*bra)] @ O_bare @ self.U[:, self.index(*ket)])


@dataclass
class Tone:
    drive: int
    n: int
    frequency: float
    amplitude: complex


@dataclass
class DriveSet:
    """Tones ``f_i(t) = sum_k amplitude_k exp(-i frequency_k t)`` for ``i = 1..4``."""

    tones: list = field(default_factory=list)

    def of(self, drive: int) -> list:
        return [t for t in self.tones if t.drive == drive]

    def sample(self, t) -> np.ndarray:
        """Complex envelopes, shape ``(4,) + t.shape``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros((4,) + t.shape, dtype=complex)
        for tone in self.tones:
            out[tone.drive - 1] += tone.amplitude * np.exp(-1j * tone.frequency * t)
        return out


DRIVE_OPERATORS = {1: "adag_bdag", 2: "a_bdag", 3: "a2_bdag"}


def _bare_operator(frame: DressedFrame, name: str) -> np.ndarray:
    a, bd = frame.a_bare, frame.bdag_bare
    return {"adag_bdag": a.T @ bd, "a_bdag": a @ bd, "a2_bdag": a @ a @ bd, "bdag": bd}[name]


def synthesize_drives(frame, coefficients: dict, omega: float, a_cutoff: int | None = None) -> DriveSet:
    """Tone lists for f1..f4 from a ``DressedFrame`` or ``DressedSpectrum``.

    Type-l tones sit at ``E_{n,e} - E_{n+d_l,g}`` with amplitude ``alpha^(l)_n``
    over the dressed matrix element of its operator; the swap drive f4 has one
    tone ``Omega / <~n,e|b^dag|~n,g>`` per photon number.
    """
    if isinstance(frame, DressedSpectrum):
        frame = DressedFrame(frame, frame.params.n_max - 1 if a_cutoff is None else a_cutoff)
    E_ = frame.spectrum.energies
    N = frame.a_cutoff
    tones = []
    for l, d in TYPES.items():
        O = _bare_operator(frame, DRIVE_OPERATORS[l])
        alpha = np.asarray(coefficients.get(l, ()), dtype=complex)
        for n, amp in enumerate(alpha):
            if amp == 0:
                continue
            m = n + d
            if not (0 <= m <= N and n <= N):
                raise ValueError(f"type-{l} coupling at n={n} leaves the simulated space (a_cutoff={N})")
            elem = frame.element(O, (n, E), (m, G))
            if abs(elem) < ELEMENT_MIN:
                raise ValueError(f"vanishing dressed matrix element for type {l} at n={n}")
            tones.append(Tone(l, n, E_[n, E] - E_[m, G], amp / elem))
    if omega:
        O = _bare_operator(frame, "bdag")
        for n in range(N + 1):
            elem = frame.element(O, (n, E), (n, G))
            if abs(elem) < ELEMENT_MIN:
                raise ValueError(f"vanishing dressed matrix element for the swap drive at n={n}")
            tones.append(Tone(4, n, E_[n, E] - E_[n, G], omega / elem))
    return DriveSet(tones)


def synthesize_flux_waveforms(drives: DriveSet, t, omega_a: float = mhz(3500.0), omega_c: float = mhz(2500.0),
                              phi_a: float = 0.1, phi_b: float = 0.1, phi_c: float = 0.1, g_ab1: float = 1.0,
                              g_ab2: float = 1.0, g_bc1: float = 1.0):
    """Flux-pump waveforms ``(eps1, eps2)`` sampled at ``t`` (us); units of ``f / g``."""
    for v in (phi_a, phi_b, phi_c, g_ab1, g_ab2, g_bc1):
        if v == 0:
            raise ValueError("phi and g coefficients must be nonzero")
    t = np.asarray(t, dtype=float)
    f1, f2, f3, f4 = drives.sample(t)
    z1 = (np.exp(-2j * omega_a * t) * f1 + f2) / (phi_a * phi_b * g_ab1) \
        + np.exp(1j * (omega_c - omega_a) * t) * f4 / (phi_b * phi_c * g_bc1)
    z2 = 2 * np.exp(1j * omega_a * t) * f3 / (phi_a**2 * phi_b * g_ab2)
    return -2 * z1.real, -2 * z2.real


def write_waveform_csv(path, t, eps1, eps2) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_us", "eps1", "eps2"])
        for row in zip(t, eps1, eps2):
            w.writerow([f"{x:.12g}" for x in row])


# ----------------------------------------------------------------------------- time-dependent model


class OscillatingOperator:
    """``X(t) = sum_k coef_k exp(i nu_k t) |row_k><col_k|``."""

    def __init__(self, dim, rows, cols, coef, nu):
        self.dim = dim
        self.flat = np.asarray(rows, dtype=np.intp) * dim + np.asarray(cols, dtype=np.intp)
        self.coef = np.asarray(coef, dtype=complex)
        self.nu = np.asarray(nu, dtype=float)

    def __len__(self):
        return self.coef.size

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.nu), initial=0.0))

    def __call__(self, t: float) -> np.ndarray:
        v = self.coef * np.exp(1j * self.nu * t)
        n2 = self.dim * self.dim
        out = np.bincount(self.flat, v.real, n2) + 1j * np.bincount(self.flat, v.imag, n2)
        return out.reshape(self.dim, self.dim)


def _terms(O_dressed, energies, freq, window, tol=1e-12):
    rows, cols = np.nonzero(np.abs(O_dressed) > tol)
    nu = energies[rows] - energies[cols] - freq
    keep = np.abs(nu) < window
    return rows[keep], cols[keep], O_dressed[rows[keep], cols[keep]], nu[keep]


def _lift_c(rows, cols, c_op):
    """Tensor dressed-space index pairs with a 2x2 operator on ``c``."""
    r2, c2 = np.nonzero(c_op)
    R = (2 * rows[:, None] + r2[None, :]).ravel()
    C = (2 * cols[:, None] + c2[None, :]).ravel()
    return R, C, np.tile(c_op[r2, c2], rows.size)


@dataclass
class CircuitModel:
    frame: DressedFrame
    drives: DriveSet
    drive_term: OscillatingOperator
    jumps: list
    config: CircuitConfig

    @property
    def dim(self) -> int:
        return 2 * self.frame.dim

    def hamiltonian(self, t: float) -> np.ndarray:
        X = self.drive_term(t)
        return X + X.conj().T

    @property
    def max_frequency(self) -> float:
        return max([self.drive_term.max_frequency] + [j.max_frequency for _, j in self.jumps])

    def embed(self, psi_mode, s: int = G, c: int = 0) -> np.ndarray:
        """Oscillator amplitudes -> ``sum_n psi_n |~n, s> (x) |c>``."""
        psi_mode = np.asarray(psi_mode, dtype=complex)
        if psi_mode.size > self.frame.a_cutoff + 1:
            extra = psi_mode[self.frame.a_cutoff + 1:]
            if np.max(np.abs(extra), initial=0) > 1e-12:
                raise ValueError("state has support above a_cutoff")
            psi_mode = psi_mode[: self.frame.a_cutoff + 1]
        out = np.zeros(self.dim, dtype=complex)
        for n, amp in enumerate(psi_mode):
            out[2 * self.frame.index(n, s) + c] = amp
        return out

    def dissipators(self):
        return [(rate, op) for rate, op in self.jumps]


def build_circuit_model(config: CircuitConfig, drives_on: bool = True, swap_on: bool = True) -> CircuitModel:
    spectrum = coupler_spectrum(config.coupler)
    frame = DressedFrame(spectrum, config.a_cutoff)
    coeffs = config.coefficients if drives_on else {}
    omega = config.omega if swap_on else 0.0
    drives = synthesize_drives(frame, coeffs, omega)
    chi = min_tone_spacing(spectrum, config.a_cutoff)
    amax = max((np.max(np.abs(v), initial=0.0) for v in config.coefficients.values()), default=0.0)
    if amax > chi / 10:
        warnings.warn(f"drive strength {amax:.3g} exceeds chi/10 = {chi / 10:.3g}; RWA may fail", RuntimeWarning,
                      stacklevel=2)
    W = config.rwa_window if config.rwa_window is not None else 0.5 * min_tone_spacing(spectrum, config.a_cutoff)
    En = frame.energies
    ops = {}
    R, C, V, NU = [], [], [], []
    lower_c = np.array([[0, 1], [0, 0]], dtype=complex)  # |g2><e2|
    eye_c = np.eye(2, dtype=complex)
    for tone in drives.tones:
        name = DRIVE_OPERATORS.get(tone.drive, "bdag")
        if name not in ops:
            ops[name] = frame.project(_bare_operator(frame, name))
        rows, cols, coef, nu = _terms(ops[name], En, tone.frequency, W)
        c_op = lower_c if tone.drive == 4 else eye_c
        r2, c2, cv = _lift_c(rows, cols, c_op)
        R.append(r2)
        C.append(c2)
        V.append(np.repeat(coef * tone.amplitude, int(np.count_nonzero(c_op))) * cv)
        NU.append(np.repeat(nu, int(np.count_nonzero(c_op))))
    dim = 2 * frame.dim
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
    drive_term = OscillatingOperator(dim, cat(R, np.intp), cat(C, np.intp), cat(V, complex), cat(NU, float))

    jumps = []
    a_d = frame.project(frame.a_bare)
    b_d = frame.project(frame.bdag_bare.T)
    for rate, O in ((config.kappa, a_d), (config.kappa_b, b_d)):
        if rate == 0:
            continue
        for rows, cols, coef, nu in _frequency_clusters(O, En, W):
            r2, c2, cv = _lift_c(rows, cols, eye_c)
            jumps.append((rate, OscillatingOperator(dim, r2, c2, np.repeat(coef, 2) * cv, np.repeat(nu, 2))))
    if config.kappa_c:
        idx = np.arange(frame.dim)
        r2, c2, cv = _lift_c(idx, idx, lower_c)
        jumps.append((config.kappa_c, OscillatingOperator(dim, r2, c2, cv, np.zeros(r2.size))))
    return CircuitModel(frame, drives, drive_term, jumps, config)


def _frequency_clusters(O, energies, window, rel_tol=1e-3):
    """Split ``O`` into groups of components whose Bohr frequencies lie within ``window``.

    Each group is returned relative to its strongest component's frequency.
    Cross terms between groups rotate faster than ``window`` and are dropped,
    so every group acts as an independent jump operator. Elements below
    ``rel_tol`` times the largest one (rate share below ``rel_tol**2``) are dropped.
    """
    rows, cols = np.nonzero(np.abs(O) > rel_tol * np.abs(O).max())
    nu = energies[rows] - energies[cols]
    weight = np.abs(O[rows, cols])
    free = np.ones(rows.size, bool)
    out = []
    while free.any():
        idx = np.flatnonzero(free)
        centre = nu[idx[np.argmax(weight[idx])]]
        sel = idx[np.abs(nu[idx] - centre) < window]
        free[sel] = False
        out.append((rows[sel], cols[sel], O[rows[sel], cols[sel]], nu[sel] - centre))
    return out


def min_tone_spacing(spectrum: DressedSpectrum, a_cutoff: int) -> float:
    """Smallest gap between qubit transition frequencies ``E_{n,e} - E_{n,g}``."""
    q = np.sort(spectrum.energies[: a_cutoff + 1, E] - spectrum.energies[: a_cutoff + 1, G])
    return float(np.min(np.diff(q)))


def effective_chi(spectrum: DressedSpectrum, a_cutoff: int) -> float:
    """Mean spacing in ``n`` of the qubit transition ``E_{n,e} - E_{n,g}``."""
    q = spectrum.energies[: a_cutoff + 1, E] - spectrum.energies[: a_cutoff + 1, G]
    return float(np.mean(np.diff(q)))


def _steps(model: CircuitModel, tgrid, safety: float = 0.3):
    rates = [model.config.kappa_c, model.config.omega, model.config.kappa]
    rates += [np.max(np.abs(v), initial=0.0) for v in model.config.coefficients.values()]
    fast = max(model.max_frequency, max(rates), 1e-9)
    dt = np.max(np.diff(tgrid))
    return max(1, int(np.ceil(dt * fast / safety)))


def simulate_circuit(config: CircuitConfig, pair: LogicalPair, tgrid, drives_on: bool = True, swap_on: bool = True,
                     steps_per_interval: int | None = None, kind: str = "average") -> FidelityCurve:
    """Average fidelity of a single-mode code mapped onto dressed states ``|~n,g> (x) |g2>``."""
    tgrid = np.asarray(tgrid, dtype=float)
    model = build_circuit_model(config, drives_on, swap_on)
    joint = LogicalPair(model.embed(pair.psi0), model.embed(pair.psi1))
    joint.check_orthonormal()
    steps = steps_per_interval or _steps(model, tgrid)
    from .lindblad import code_initial_states

    traj = propagate_time_dependent(model.hamiltonian, model.dissipators(), code_initial_states(joint), tgrid, steps)
    R = np.moveaxis(traj.at_grid(), 1, 0)
    F = weighted_fidelity(joint, R, kind)
    return FidelityCurve(tgrid, F, break_even(tgrid, config.kappa), R)


def desk_horizon(config: CircuitConfig, kappa_t: float = 0.3) -> float:
    return kappa_t / config.kappa


__all__ = [
    "CircuitConfig", "CircuitModel", "DressedFrame", "DriveSet", "Tone", "build_circuit_model", "chi_e_matched",
    "coefficients_from_h_tilde", "desk_horizon", "effective_chi", "min_tone_spacing", "simulate_circuit", "synthesize_drives",
    "synthesize_flux_waveforms", "write_waveform_csv",
]
