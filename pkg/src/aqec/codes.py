"""Analytic sqrt(3) codes, their distance-2 correcting Hamiltonians, and phase-space tools.

Variant 1 has ``psi0`` on Fock states {0, 3} and ``psi1`` on {1, 4, 6};
variant 2 moves the top component of ``psi1`` to |7>. Both have mean photon
number sqrt(3) in each codeword. All coefficients are chosen real.

The correcting Hamiltonian is specified on the oscillator by ``Ht`` and lifted
to the oscillator (x) qubit space as ``Ht^dagger (x) |e><g| + Ht (x) |g><e|``,
so ``<m,g|H|n,e> = Ht[m, n]``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import E, G, fock_annihilation, joint_operators, mhz, number_operator, tensor
from .ansatz import hamiltonian_distance, max_out_of_band
from .lindblad import LindbladModel, propagate_code
from .objective import FidelityCurve, LogicalPair, break_even, weighted_fidelity

SQRT3 = np.sqrt(3.0)
BAND_TOL = 1e-10
MIN_CUTOFF = 7


def _fock(dim, amps: dict) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    for n, c in amps.items():
        v[n] = c
    return v


@dataclass
class Sqrt3Construction:
    variant: int
    cutoff: int
    pair: LogicalPair
    error_pair: tuple
    orthogonal_basis: tuple
    coefficients: dict
    beta: float
    beta_prime: float
    beta1: float
    beta2: float
    norms: tuple
    H_tilde: np.ndarray
    stabilization_terms: list = field(default_factory=list)

    @property
    def top(self) -> int:
        """Highest Fock state of ``psi1`` (6 or 7)."""
        return 6 if self.variant == 1 else 7

    @property
    def constraint_entries(self) -> tuple:
        """The out-of-band entries of ``Ht`` that the beta terms must cancel."""
        k = self.top
        return ((0, 4), (0, k), (3, k), (k - 1, 1))

    def constraint_residuals(self) -> dict:
        """Residuals of the scalar conditions fixing the coefficients."""
        c = self.coefficients
        a0, a3, a1, a4, ak = c["a0"], c["a3"], c["a1"], c["a4"], c["a_top"]
        k = self.top
        # the beta-free combination follows from the last two equations
        return {
            "norm0": a0**2 + a3**2 - 1,
            "norm1": a1**2 + a4**2 + ak**2 - 1,
            "orthogonal_errors": a0 * a1 + 2 * a3 * a4,
            "equal_photon_number": 3 * a3**2 - (a1**2 + 4 * a4**2 + k * ak**2),
            "locality": -(a1**2 + 4 * a4**2) * (1 - a1**2) + k * ak**2 * a1**2,
            "beta_orthogonality": a1**2 + 4 * a4**2 + np.sqrt(k) * self.beta * ak,
            "beta_locality": self.beta * (1 - a1**2) + np.sqrt(k) * ak * a1**2,
        }


def sqrt3_coefficients(variant: int = 1) -> dict:
    """Closed-form real amplitudes ``a0, a3`` (of psi0) and ``a1, a4, a_top`` (of psi1)."""
    a0 = np.sqrt(1 - 1 / SQRT3)
    a3 = 3 ** -0.25
    if variant == 1:
        a1 = np.sqrt(2 * (6 - SQRT3) / (SQRT3 + 9))
        a4 = -np.sqrt((SQRT3 - 1) * (6 - SQRT3) / (2 * (SQRT3 + 9)))
        ak = np.sqrt((3 - SQRT3) / (2 * (SQRT3 + 9)))
    elif variant == 2:
        a1 = np.sqrt(4 * (7 - SQRT3) / (3 * (7 + SQRT3)))
        a4 = -np.sqrt((SQRT3 - 1) * (7 - SQRT3) / (3 * (7 + SQRT3)))
        ak = np.sqrt((3 - SQRT3) / (3 * (7 + SQRT3)))
    else:
        raise ValueError(f"variant must be 1 or 2, got {variant}")
    return {"a0": a0, "a3": a3, "a1": a1, "a4": a4, "a_top": ak}


def sqrt3_code(variant: int = 1, cutoff: int = 20) -> LogicalPair:
    if cutoff < MIN_CUTOFF:
        raise ValueError(f"the sqrt(3) code needs cutoff >= {MIN_CUTOFF}, got {cutoff}")
    c = sqrt3_coefficients(variant)
    k = 6 if variant == 1 else 7
    dim = cutoff + 1
    return LogicalPair(_fock(dim, {0: c["a0"], 3: c["a3"]}), _fock(dim, {1: c["a1"], 4: c["a4"], k: c["a_top"]}))


def sqrt3_construction(variant: int = 1, cutoff: int = 20, include_stabilization: bool = True) -> Sqrt3Construction:
    """Error states, complementary basis and the unscaled correcting operator ``Ht``.

    ``beta1, beta2`` are obtained by solving the four locality conditions in
    least squares; a nonzero residual means the coefficients are inconsistent.
    """
    pair = sqrt3_code(variant, cutoff)
    c = sqrt3_coefficients(variant)
    a1, a4, ak = c["a1"], c["a4"], c["a_top"]
    k = 6 if variant == 1 else 7
    dim = cutoff + 1
    beta = -(a1**2 + 4 * a4**2) / (np.sqrt(k) * ak)
    beta_p = -(a1**2 + a4**2) / ak
    raw3 = _fock(dim, {0: a1, 3: 2 * a4, k - 1: np.sqrt(k) * ak})
    raw6 = _fock(dim, {0: a1, 3: 2 * a4, k - 1: beta})
    raw4 = _fock(dim, {1: a4, 4: -a1})
    raw5 = _fock(dim, {1: a1, 4: a4, k: beta_p})
    norms = tuple(1 / np.linalg.norm(v) for v in (raw3, raw6, raw4, raw5))
    psi2 = _fock(dim, {2: 1.0})
    psi3, psi6, psi4, psi5 = (n * v for n, v in zip(norms, (raw3, raw6, raw4, raw5)))

    def proj(u, v):
        return np.outer(u, v.conj())

    base = proj(psi2, pair.psi0) + proj(psi3, pair.psi1)
    T4, T5 = proj(psi6, psi4), proj(psi6, psi5)
    entries = ((0, 4), (0, k), (3, k), (k - 1, 1))
    A = np.array([[T4[m, n].real, T5[m, n].real] for m, n in entries])
    b = -np.array([base[m, n].real for m, n in entries])
    (beta1, beta2), *_ = np.linalg.lstsq(A, b, rcond=None)
    Ht = base + beta1 * T4 + beta2 * T5
    stab = []
    if include_stabilization:
        stab = [proj(psi4, psi2), np.outer(_fock(dim, {4: ak, k: -a4}), _fock(dim, {k - 1: 1.0}))]
        Ht = Ht + sum(stab)
    con = Sqrt3Construction(variant, cutoff, pair, (psi2, psi3), (psi4, psi5, psi6), c, beta, beta_p, float(beta1),
                            float(beta2), norms, Ht, stab)
    leak = max_out_of_band(Ht, 2)
    if leak > BAND_TOL:
        raise RuntimeError(f"internal error: constructed Ht has out-of-band entry {leak:.3g}")
    return con


def sqrt3_closed_form_betas(con: Sqrt3Construction) -> tuple[float, float]:
    """Closed-form ``(beta1, beta2)``; same algebra for both variants with a6 -> a_top."""
    c = con.coefficients
    N1, N2, N3, N4 = con.norms
    bp = con.beta_prime
    beta2 = -N1 * c["a_top"] / (N2 * N4 * bp)
    beta1 = N1 * c["a4"] * (1 - c["a_top"] / bp) / (N2 * N3 * c["a1"])
    return beta1, beta2


def lift_coupling(H_tilde: np.ndarray) -> np.ndarray:
    """``Ht^dagger (x) |e><g| + Ht (x) |g><e|`` on the oscillator (x) qubit space."""
    eg = np.zeros((2, 2), dtype=complex)
    eg[E, G] = 1.0
    return tensor(H_tilde.conj().T, eg) + tensor(H_tilde, eg.conj().T)


def sqrt3_hamiltonian(variant: int = 1, scale: float = mhz(10.0), include_stabilization: bool = True,
                      cutoff: int = 20):
    """Joint Hamiltonian (rad/us) whose largest coupling equals ``scale``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    con = sqrt3_construction(variant, cutoff, include_stabilization)
    Ht = con.H_tilde * (scale / np.max(np.abs(con.H_tilde)))
    if hamiltonian_distance(Ht, BAND_TOL * scale) > 2:
        raise RuntimeError("internal error: scaled Hamiltonian is not distance 2")
    return lift_coupling(Ht), con


def loss_model(H: np.ndarray, cutoff: int, kappa: float = mhz(0.1), kappa_q: float = mhz(20.0)) -> LindbladModel:
    """Joint model with photon loss ``sqrt(kappa) a`` and qubit decay ``sqrt(kappa_q) b``."""
    a, b = joint_operators(cutoff)
    return LindbladModel.from_hamiltonian(H, ((kappa, a), (kappa_q, b)))


def simulate_code(H: np.ndarray, pair: LogicalPair, cutoff: int, tgrid, kappa: float = mhz(0.1),
                  kappa_q: float = mhz(20.0), steps_per_unit: int = 1000, kind: str = "average") -> FidelityCurve:
    """Joint-space fidelity curve of a single-mode code held with the qubit in ``|g>``."""
    tgrid = np.asarray(tgrid, dtype=float)
    model = loss_model(H, cutoff, kappa, kappa_q)
    steps = _steps_for(tgrid, steps_per_unit)
    joint = pair.embed()
    traj = propagate_code(model, joint, tgrid, steps, store_steps=False)
    R = traj.at_grid()
    F = weighted_fidelity(joint, np.moveaxis(R, 1, 0), kind)
    return FidelityCurve(tgrid, F, break_even(tgrid, kappa), np.moveaxis(R, 1, 0))


def _steps_for(tgrid, steps_per_unit):
    dt = np.max(np.diff(tgrid)) if tgrid.size > 1 else 1.0
    return max(1, int(np.ceil(dt * steps_per_unit)))


@dataclass
class KLReport:
    labels: list
    matrices: dict
    lambdas: dict
    max_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_residual < self.tol


def kl_check(pair: LogicalPair, error_ops=None, labels=None, tol: float = 1e-10) -> KLReport:
    """Knill-Laflamme test of ``<psi_i|E^dagger E'|psi_j> = lambda delta_ij``.

    Defaults to ``{I, a}`` on the single mode of ``pair``.
    """
    pair.check_orthonormal()
    if error_ops is None:
        error_ops = [np.eye(pair.dim), fock_annihilation(pair.dim - 1)]
        labels = ["I", "a"]
    labels = labels or [f"E{i}" for i in range(len(error_ops))]
    V = np.stack([pair.psi0, pair.psi1], axis=1)
    mats, lams, worst = {}, {}, 0.0
    for i, Ei in enumerate(error_ops):
        for j, Ej in enumerate(error_ops):
            M = V.conj().T @ (np.conj(Ei).T @ Ej) @ V
            lam = np.trace(M) / 2
            key = (labels[i], labels[j])
            mats[key] = M
            lams[key] = lam
            worst = max(worst, float(np.max(np.abs(M - lam * np.eye(2)))))
    return KLReport(labels, mats, lams, worst, tol)


def effective_dissipator_model(pair: LogicalPair, error_pair, rate: float, kappa: float = mhz(0.1)) -> LindbladModel:
    """Single-mode model with jump ``|psi0><psi2| + |psi1><psi3|`` and photon loss.

    This is what the joint dynamics reduces to once the fast-decaying qubit is
    eliminated; ``rate`` is the resulting correction rate (``4 g^2 / kappa_q``
    for a coupling ``g``).
    """
    psi2, psi3 = (np.asarray(v, dtype=complex) for v in error_pair)
    for v in (pair.psi0, pair.psi1, psi2, psi3):
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("states must be normalized")
    J = np.outer(pair.psi0, psi2.conj()) + np.outer(pair.psi1, psi3.conj())
    dim = pair.dim
    return LindbladModel.from_hamiltonian(np.zeros((dim, dim)), ((rate, J), (kappa, fock_annihilation(dim - 1))))


def fock_stabilization_hamiltonian(cutoff: int = 4, g: float = mhz(10.0), detuning: float = 0.0) -> np.ndarray:
    """``g (|2,e><1,g| + h.c.)`` plus an optional ``detuning |2,g><2,g|``."""
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    Ht = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    Ht[1, 2] = g  # <1,g|H|2,e>
    H = lift_coupling(Ht)
    if detuning:
        H[2 * 2 + G, 2 * 2 + G] += detuning
    return H


def fock_stabilization_example(t_final: float = 100.0, n_points: int = 51, cutoff: int = 4, g: float = mhz(10.0),
                               kappa: float = mhz(0.01), kappa_q: float = mhz(20.0), detuning: float = 0.0,
                               steps_per_unit: int = 200) -> FidelityCurve:
    """Average fidelity of the code ``{|0>, |2>}`` held by a distance-1 correction.

    Losses from the transient |1> population slowly drain |2> into |0> at a rate
    of order ``2 kappa^2 / Gamma`` (``Gamma <~ kappa_q / 2`` the correction rate), so
    the poles stay pinned only while ``kappa_q / kappa`` is large; the default
    photon loss is chosen 10x below the discovery setting for that reason.
    """
    H = fock_stabilization_hamiltonian(cutoff, g, detuning)
    pair = LogicalPair.fock(cutoff + 1, 0, 2)
    return simulate_code(H, pair, cutoff, np.linspace(0, t_final, n_points), kappa, kappa_q, steps_per_unit)


# ----------------------------------------------------------------------------- Wigner


def displacement_elements(alpha: np.ndarray, K: int, N: int) -> np.ndarray:
    """``<m|D(alpha)|n>`` for ``m < K``, ``n < N`` (exact, not truncated), shape ``alpha.shape + (K, N)``."""
    alpha = np.asarray(alpha, dtype=complex)[..., None, None]
    m = np.arange(K)[:, None]
    n = np.arange(N)[None, :]
    lo = np.minimum(m, n)
    k = np.abs(m - n)
    x = np.abs(alpha) ** 2
    pref = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1)) - 0.5 * x)
    power = np.where(m >= n, alpha ** k, (-np.conj(alpha)) ** k)
    return pref * power * eval_genlaguerre(lo, k, x)


@dataclass
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    w: np.ndarray
    max_leakage: float

    def to_csv(self, path) -> None:
        write_wigner_csv(path, self.x, self.p, self.w)


def wigner(rho, xgrid, pgrid, pad: int | None = None, leak_tol: float = 0.01, chunk: int = 1024) -> WignerGrid:
    """``W(x, p) = tr[D(a)^dagger rho D(a) Pi] / pi`` with ``a = (x + i p)/sqrt(2)``.

    Normalized so that ``int W dx dp = 1``. The displaced state is resolved on
    ``dim + pad`` Fock levels (by default enough for the largest ``|a|`` on the
    grid); if more than ``leak_tol`` of its weight falls outside, a warning is
    issued.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho must be a square single-mode density matrix")
    x = np.asarray(xgrid, dtype=float)
    p = np.asarray(pgrid, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise ValueError("grids must be finite")
    N = rho.shape[0]
    X, P = np.meshgrid(x, p, indexing="ij")
    alphas = ((X + 1j * P) / np.sqrt(2)).ravel()
    if pad is None:
        r = float(np.max(np.abs(alphas), initial=0.0))
        pad = int(np.ceil(r * r + 2 * r * (np.sqrt(N) + 4) + 16))
    K = N + pad
    parity = (-1.0) ** np.arange(K)
    tr = np.trace(rho).real
    W = np.empty(alphas.size)
    leak = 0.0
    for s in range(0, alphas.size, chunk):
        D = displacement_elements(-alphas[s:s + chunk], K, N)  # D(-a) = D(a)^dagger
        diag = np.einsum("zmn,nk,zmk->zm", D, rho, D.conj()).real
        W[s:s + chunk] = diag @ parity / np.pi
        leak = max(leak, float(np.max(np.abs(tr - diag.sum(axis=1)), initial=0.0)))
    if leak > leak_tol:
        warnings.warn(f"Wigner grid exceeds the Fock cutoff: displaced-state leakage {leak:.3g}", RuntimeWarning,
                      stacklevel=2)
    return WignerGrid(x, p, W.reshape(X.shape), leak)


def write_wigner_csv(path, x, p, w) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "p", "w"])
        for i, xi in enumerate(x):
            for j, pj in enumerate(p):
                wr.writerow([f"{xi:.9g}", f"{pj:.9g}", f"{w[i, j]:.9g}"])


def reduced_mode_state(rho_joint: np.ndarray, n_anc: int = 2) -> np.ndarray:
    """Partial trace over the ancilla."""
    d = rho_joint.shape[0] // n_anc
    return np.einsum("asbs->ab", rho_joint.reshape(d, n_anc, d, n_anc))


def mean_photon_number(psi: np.ndarray) -> float:
    return float(np.vdot(psi, number_operator(psi.size - 1) @ psi).real)
