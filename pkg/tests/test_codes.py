import numpy as np
import pytest

from aqec.ansatz import hamiltonian_distance, max_out_of_band
from aqec.codes import (
    MIN_CUTOFF, displacement_elements, effective_dissipator_model, fock_stabilization_example,
    fock_stabilization_hamiltonian, kl_check, lift_coupling, mean_photon_number, reduced_mode_state,
    simulate_code, sqrt3_closed_form_betas, sqrt3_code, sqrt3_coefficients, sqrt3_construction,
    sqrt3_hamiltonian, wigner, write_wigner_csv,
)
from aqec.hilbert import embed_mode_state, mhz
from aqec.lindblad import propagate
from aqec.objective import LogicalPair, break_even, single_state_fidelity

import oracles

# closed-form radicals evaluated independently
S3 = np.sqrt(3)
VARIANT1 = {
    "a0": np.sqrt(1 - 1 / S3), "a3": 3 ** -0.25, "a1": np.sqrt(2 * (6 - S3) / (S3 + 9)),
    "a4": -np.sqrt((S3 - 1) * (6 - S3) / (2 * (S3 + 9))), "a_top": np.sqrt((3 - S3) / (2 * (S3 + 9))),
}
VARIANT1_DECIMALS = {"a0": 0.650115, "a3": 0.759836, "a1": 0.891832, "a4": -0.381526, "a_top": 0.243049}


def test_variant1_coefficients():
    c = sqrt3_coefficients(1)
    for k, v in VARIANT1.items():
        assert c[k] == pytest.approx(v, abs=1e-15)
        assert c[k] == pytest.approx(VARIANT1_DECIMALS[k], abs=1e-6)
    with pytest.raises(ValueError):
        sqrt3_coefficients(3)


@pytest.mark.parametrize("variant", [1, 2])
def test_constraint_system(variant):
    con = sqrt3_construction(variant, cutoff=10)
    for name, r in con.constraint_residuals().items():
        assert abs(r) < 1e-12, name
    assert hamiltonian_distance(con.H_tilde) == 2
    assert max_out_of_band(con.H_tilde, 2) < 1e-12
    for m, n in con.constraint_entries:
        assert abs(con.H_tilde[m, n]) < 1e-12
    b1, b2 = sqrt3_closed_form_betas(con)
    assert b1 == pytest.approx(con.beta1, abs=1e-12) and b2 == pytest.approx(con.beta2, abs=1e-12)


@pytest.mark.parametrize("variant", [1, 2])
def test_photon_number_and_orthogonality(variant):
    pair = sqrt3_code(variant, 12)
    assert mean_photon_number(pair.psi0) == pytest.approx(S3, abs=1e-12)
    assert mean_photon_number(pair.psi1) == pytest.approx(S3, abs=1e-12)
    assert pair.overlap == 0
    rep = kl_check(pair)
    assert rep.ok and rep.max_residual < 1e-12
    np.testing.assert_allclose(rep.matrices[("a", "a")], S3 * np.eye(2), atol=1e-12)


def test_trivial_encoding_fails_kl():
    rep = kl_check(LogicalPair.fock(4))
    assert not rep.ok
    # <0|a|1> = 1 off the diagonal and 0 != 1 on it
    assert rep.max_residual == pytest.approx(1.0)
    np.testing.assert_allclose(np.diag(rep.matrices[("a", "a")]).real, [0, 1])


def test_error_states_orthogonal():
    con = sqrt3_construction(1, 10)
    psi2, psi3 = con.error_pair
    assert abs(np.vdot(psi2, psi3)) < 1e-15
    # the error states are the normalized images of the codewords under a
    a = oracles.annihilation(10)
    np.testing.assert_allclose(a @ con.pair.psi0 / np.linalg.norm(a @ con.pair.psi0), psi2, atol=1e-12)
    np.testing.assert_allclose(a @ con.pair.psi1 / np.linalg.norm(a @ con.pair.psi1), psi3, atol=1e-12)


def test_cutoff_guard_and_scale():
    with pytest.raises(ValueError):
        sqrt3_code(1, MIN_CUTOFF - 1)
    with pytest.raises(ValueError):
        sqrt3_hamiltonian(scale=0.0, cutoff=8)
    H, con = sqrt3_hamiltonian(1, scale=2.5, cutoff=8)
    assert np.max(np.abs(H)) == pytest.approx(2.5)
    np.testing.assert_allclose(H, H.conj().T)


def test_lift_coupling_structure(rng):
    Ht = oracles.random_matrix(3, rng)
    H = lift_coupling(Ht)
    np.testing.assert_allclose(H[0::2, 1::2], Ht)
    np.testing.assert_allclose(H[1::2, 0::2], Ht.conj().T)
    assert not np.any(H[0::2, 0::2]) and not np.any(H[1::2, 1::2])


def test_stabilization_beats_unstabilized():
    t = np.linspace(0, 4, 3)
    f = {}
    for stab in (True, False):
        H, _ = sqrt3_hamiltonian(1, include_stabilization=stab, cutoff=10)
        f[stab] = simulate_code(H, sqrt3_code(1, 10), 10, t, steps_per_unit=500).values
    assert f[True][-1] > f[False][-1] + 0.1
    assert np.all(f[True][1:] > break_even(t[1:], mhz(0.1)))


def _effective_run(rho0, rate, kappa, t):
    pair = sqrt3_code(1, 10)
    con = sqrt3_construction(1, 10)
    m = effective_dissipator_model(pair, con.error_pair, rate, kappa)
    return pair, con, propagate(m, rho0, t, 400, store_steps=False).at_grid()


def test_effective_dissipator_fixed_point_and_coherence():
    con = sqrt3_construction(1, 10)
    psi2, psi3 = con.error_pair
    pair = con.pair
    out = _effective_run(np.outer(psi2, psi2.conj()), 1.0, 0.0, [0, 20.0])[2]
    assert oracles.single_state_fidelity(pair.psi0, out[-1]) == pytest.approx(1.0, abs=1e-6)
    v = (psi2 + psi3) / np.sqrt(2)
    out = _effective_run(np.outer(v, v.conj()), 1.0, 0.0, [0, 20.0])[2]
    target = (pair.psi0 + pair.psi1) / np.sqrt(2)
    assert oracles.single_state_fidelity(target, out[-1]) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        effective_dissipator_model(pair, (2 * psi2, psi3), 1.0)


def test_effective_dissipator_beats_break_even():
    kappa = mhz(0.1)
    rate = 4 * mhz(10.0) ** 2 / mhz(20.0)
    con = sqrt3_construction(1, 10)
    m = effective_dissipator_model(con.pair, con.error_pair, rate, kappa)
    from aqec.lindblad import propagate_code
    from aqec.objective import average_fidelity

    t = np.linspace(0, 10, 6)
    br = np.swapaxes(propagate_code(m, con.pair, t, 200).at_grid(), 0, 1)
    F = average_fidelity(con.pair, br)
    assert np.all(F[1:] > break_even(t[1:], kappa))


def test_fock_stabilization_example():
    cur = fock_stabilization_example()
    assert abs(cur.values[-1] - 2 / 3) < 0.02
    pair = LogicalPair.fock(5, 0, 2).embed()
    final = cur.branches[-1]
    assert single_state_fidelity(0.0, 0.0, pair, final) >= 0.98
    assert single_state_fidelity(np.pi, 0.0, pair, final) >= 0.98
    assert abs(single_state_fidelity(np.pi / 2, 0.3, pair, final) - 0.5) < 0.03
    with pytest.raises(ValueError):
        fock_stabilization_hamiltonian(cutoff=1)
    Hd = fock_stabilization_hamiltonian(detuning=1.5)
    assert Hd[4, 4] == 1.5


def test_displacement_elements_unitary_columns():
    D = displacement_elements(np.array(0.7 - 0.4j), 60, 5)
    np.testing.assert_allclose(D.conj().T @ D, np.eye(5), atol=1e-12)
    # coherent state column
    alpha = 0.7 - 0.4j
    n = np.arange(60)
    from scipy.special import gammaln

    coh = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) + 1j * n * np.angle(alpha) - 0.5 * gammaln(n + 1))
    np.testing.assert_allclose(D[:, 0], coh, atol=1e-12)


def test_wigner_vacuum_and_one():
    vac = np.diag([1.0, 0, 0]).astype(complex)
    one = np.diag([0, 1.0, 0]).astype(complex)
    assert wigner(vac, [0.0], [0.0]).w[0, 0] == pytest.approx(1 / np.pi, abs=1e-12)
    assert wigner(one, [0.0], [0.0]).w[0, 0] == pytest.approx(-1 / np.pi, abs=1e-12)


def test_wigner_fock_oracle():
    x = np.linspace(-3, 3, 7)
    p = np.linspace(-2.5, 2.5, 5)
    X, P = np.meshgrid(x, p, indexing="ij")
    for n in (2, 3, 5):
        rho = np.zeros((7, 7), dtype=complex)
        rho[n, n] = 1
        np.testing.assert_allclose(wigner(rho, x, p).w, oracles.fock_wigner(n, X, P), atol=1e-10)
    alpha = 0.8 + 0.3j
    from scipy.special import gammaln

    k = np.arange(30)
    c = np.exp(-abs(alpha) ** 2 / 2 + k * np.log(abs(alpha)) + 1j * k * np.angle(alpha) - 0.5 * gammaln(k + 1))
    np.testing.assert_allclose(wigner(np.outer(c, c.conj()), x, p).w, oracles.coherent_wigner(alpha, X, P),
                               atol=1e-8)


def test_wigner_normalization_of_code(tmp_path):
    pair = sqrt3_code(1, 8)
    x = np.linspace(-6, 6, 49)
    g = wigner(pair.density(), x, x)
    dx = x[1] - x[0]
    assert abs(g.w.sum() * dx * dx - 1) < 1e-3
    assert g.max_leakage < 1e-6
    g.to_csv(tmp_path / "w.csv")
    assert len((tmp_path / "w.csv").read_text().splitlines()) == 1 + 49 * 49


def test_wigner_phase_invariance_of_fock_mixture():
    rho = np.diag([0.2, 0.5, 0.3]).astype(complex)
    th = np.linspace(0, 2 * np.pi, 9)
    r = 1.1
    g = wigner(rho, r * np.cos(th), r * np.sin(th))
    assert np.ptp(np.diag(g.w)) < 1e-12


def test_wigner_errors_and_leak_warning(tmp_path):
    with pytest.raises(ValueError):
        wigner(np.ones((2, 3)), [0], [0])
    with pytest.raises(ValueError):
        wigner(np.eye(2), [np.inf], [0])
    with pytest.warns(RuntimeWarning):
        wigner(np.diag([0, 0, 1.0]), [6.0], [0.0], pad=0)
    write_wigner_csv(tmp_path / "x.csv", [0.0], [0.0], np.zeros((1, 1)))


def test_reduced_mode_state(rng):
    psi = rng.standard_normal(4) + 0j
    psi /= np.linalg.norm(psi)
    v = embed_mode_state(psi, s=1)
    np.testing.assert_allclose(reduced_mode_state(np.outer(v, v.conj())), np.outer(psi, psi.conj()), atol=1e-15)
