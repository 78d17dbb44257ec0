import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqec.adjoint import (
    backpropagate, fidelity_at, gradcheck, grad_logical_states, terminal_adjoints, value_and_grad,
)
from aqec.ansatz import distance_d_basis
from aqec.hilbert import joint_operators, liouvillian, mhz
from aqec.lindblad import LindbladModel, code_initial_states, propagate, propagate_code
from aqec.objective import LogicalPair, weighted_fidelity

import oracles


def random_model(d, rng, n_terms=3, scale=1.0):
    basis = np.stack([oracles.random_hermitian(d, rng) for _ in range(n_terms)])
    diss = ((0.4, oracles.random_matrix(d, rng) / np.sqrt(d)), (0.2, oracles.random_matrix(d, rng) / np.sqrt(d)))
    return LindbladModel(basis, scale * rng.uniform(-1, 1, n_terms), diss)


def distance2_model(cutoff, rng, scale=3.0):
    b = distance_d_basis(cutoff, 2)
    a, q = joint_operators(cutoff)
    return LindbladModel(b.terms, scale * rng.uniform(-1, 1, len(b)), ((mhz(0.1), a), (mhz(2.0), q)))


@pytest.mark.parametrize("kind", ["average", "modified", "entanglement"])
def test_terminal_adjoints_finite_difference(rng, kind):
    d = 4
    pair, br = LogicalPair.random(d, rng), np.stack([oracles.random_matrix(d, rng) for _ in range(3)])
    A = terminal_adjoints(pair, br, kind)
    eps = 1e-6
    for b in range(3):
        for i in range(d):
            for j in range(d):
                for step, part in ((eps, np.real), (1j * eps, np.imag)):
                    P, M = br.copy(), br.copy()
                    P[b, i, j] += step
                    M[b, i, j] -= step
                    fd = (weighted_fidelity(pair, P, kind) - weighted_fidelity(pair, M, kind)) / (2 * eps)
                    assert abs(part(A[b, i, j]) - fd) <= max(1e-7 * abs(fd), 1e-9)


def test_terminal_weights_at_identity(rng):
    pair = LogicalPair.random(3, rng)
    A = terminal_adjoints(pair, code_initial_states(pair), "average")
    P0, P1 = np.outer(pair.psi0, pair.psi0.conj()), np.outer(pair.psi1, pair.psi1.conj())
    np.testing.assert_allclose(A[0], P0 / 3 + P1 / 6)
    np.testing.assert_allclose(A[1], P0 / 6 + P1 / 3)
    np.testing.assert_allclose(A[2], np.outer(pair.psi1, pair.psi0.conj()) / 3)
    # z is real and positive here, so the modulus changes nothing
    np.testing.assert_allclose(terminal_adjoints(pair, code_initial_states(pair), "modified"), A)


def test_zero_terminal_gives_zero_gradients(rng):
    m = random_model(3, rng)
    traj = propagate_code(m, LogicalPair.random(3, rng), [0, 0.3], 10)
    bundle = backpropagate(m, traj, np.zeros((3, 3, 3)))
    assert not np.any(bundle.grad_alpha) and not np.any(bundle.grad_beta) and not np.any(bundle.initial)


def test_backpropagate_contract_errors(rng):
    m = random_model(3, rng)
    traj = propagate_code(m, LogicalPair.random(3, rng), [0, 0.3], 10, store_steps=False)
    with pytest.raises(ValueError):
        backpropagate(m, traj, np.zeros((3, 3, 3)))
    traj = propagate_code(m, LogicalPair.random(3, rng), [0, 0.3], 10)
    with pytest.raises(ValueError):
        backpropagate(m, traj, np.zeros((2, 3, 3)))


def test_dual_consistency_with_matexp(rng):
    d, T = 5, 0.6
    m = random_model(d, rng)
    aT = oracles.random_matrix(d, rng)
    drho = oracles.random_matrix(d, rng)
    traj = propagate(m, drho, [0, T], 400)
    a0 = backpropagate(m, traj, aT).initial
    M = liouvillian(m)
    from scipy.linalg import expm

    lhs = np.vdot(aT.reshape(-1), expm(M * T) @ drho.reshape(-1))
    rhs = np.vdot(a0.reshape(-1), drho.reshape(-1))
    assert abs(lhs - rhs) < 1e-8


def test_backpropagate_linear(rng):
    m = random_model(3, rng)
    traj = propagate_code(m, LogicalPair.random(3, rng), [0, 0.4], 15)
    X, Y = (np.stack([oracles.random_matrix(3, rng) for _ in range(3)]) for _ in range(2))
    bx, by, bs = (backpropagate(m, traj, Z) for Z in (X, Y, X - 2.5 * Y))
    np.testing.assert_allclose(bs.initial, bx.initial - 2.5 * by.initial, atol=1e-10)
    np.testing.assert_allclose(bs.grad_alpha, bx.grad_alpha - 2.5 * by.grad_alpha, atol=1e-10)


def test_alpha_gradient_hamiltonian_only(rng):
    d = 6
    basis = np.stack([oracles.random_hermitian(d, rng) for _ in range(4)])
    m = LindbladModel(basis, rng.uniform(-1, 1, 4))
    pair = LogicalPair.random(d, rng)
    _, bundle = value_and_grad(m, pair, 0.5, 100, "average")
    eps = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = eps
        fd = (fidelity_at(m.with_alpha(m.alpha + e), pair, 0.5, 100, "average")
              - fidelity_at(m.with_alpha(m.alpha - e), pair, 0.5, 100, "average")) / (2 * eps)
        assert abs(bundle.grad_alpha[j] - fd) <= max(1e-5 * abs(fd), 1e-9)


def test_beta_gradient_reproduces_break_even_slope():
    kappa, T = mhz(0.1), 0.5
    a, _ = joint_operators(1)
    m = LindbladModel.from_hamiltonian(np.zeros((4, 4)), [(kappa, a)])
    pair = LogicalPair.fock(2).embed()
    _, bundle = value_and_grad(m, pair, T, 200, "average", beta_grad=True)
    assert abs(bundle.grad_beta[0] - oracles.d_break_even_d_kappa(T, kappa)) < 1e-6


def test_state_gradients_dim8(rng):
    m = distance2_model(3, rng)
    pair = LogicalPair.random(4, rng).embed()
    rep = gradcheck(m, pair, 0.1, n_steps=60, beta=False)
    psi_rows = [i for i, n in enumerate(rep.names) if "psi" in n]
    assert len(psi_rows) == 32
    assert np.all(rep.passed_mask[psi_rows])


def test_gradient_stationary_along_code_rotations(rng):
    # identity channel: F = 1 for any basis of the span, so the tangent directions are flat
    d = 5
    m = LindbladModel.from_hamiltonian(np.zeros((d, d)))
    pair = LogicalPair.random(d, rng)
    _, bundle = value_and_grad(m, pair, 1e-3, 1, "average")
    g0, g1 = bundle.grad_psi0, bundle.grad_psi1
    for X in (np.array([[0, 1], [-1, 0]]), np.array([[0, 1j], [1j, 0]]), np.diag([1j, -1j])):
        dpsi0 = X[0, 0] * pair.psi0 + X[1, 0] * pair.psi1
        dpsi1 = X[0, 1] * pair.psi0 + X[1, 1] * pair.psi1
        slope = np.real(np.vdot(g0, dpsi0) + np.vdot(g1, dpsi1))
        assert abs(slope) < 1e-10


def test_non_orthogonal_direction_matches_raw_extension(rng):
    # moving psi1 along psi0 leaves the constraint surface; the gradient is that of the raw formula
    m = random_model(4, rng)
    pair = LogicalPair.random(4, rng)
    _, bundle = value_and_grad(m, pair, 0.3, 50, "modified")
    eps = 1e-6

    def raw(p):
        traj = propagate(m, code_initial_states(p), [0, 0.3], 50, store_steps=False)
        return weighted_fidelity(p, traj.final, "modified")

    fd = (raw(LogicalPair(pair.psi0, pair.psi1 + eps * pair.psi0))
          - raw(LogicalPair(pair.psi0, pair.psi1 - eps * pair.psi0))) / (2 * eps)
    assert np.real(np.vdot(bundle.grad_psi1, pair.psi0)) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_gradcheck_distance2_dim6(rng):
    m = distance2_model(2, rng)
    pair = LogicalPair.random(3, rng).embed()
    rep = gradcheck(m, pair, 0.2, n_steps=80)
    assert rep.ok and rep.max_rel_err < 1e-5
    assert "PASS" in rep.table()


def test_gradcheck_degenerate():
    m = LindbladModel.from_hamiltonian(np.zeros((2, 2)))
    rep = gradcheck(m, LogicalPair.fock(2), 0.1, n_steps=2, beta=False)
    assert rep.degenerate and not rep.ok
    assert "degenerate; increase T" in rep.table()


def test_adjoint_is_exact_for_any_step_count(rng):
    # the adjoint reverses the discrete map, so the mismatch does not grow with coarser steps
    m = random_model(3, rng, scale=2.0)
    pair = LogicalPair.random(3, rng)
    errs = [gradcheck(m, pair, 0.5, n_steps=n, beta=False).max_rel_err for n in (10, 20)]
    assert max(errs) < 1e-5


def test_grad_logical_states_shapes(rng):
    m = random_model(3, rng)
    pair = LogicalPair.random(3, rng)
    F, bundle = value_and_grad(m, pair, 0.2, 10)
    g0, g1 = grad_logical_states(bundle, pair)
    assert g0.shape == g1.shape == (3,)
    assert 0 < F <= 1


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.sampled_from(["average", "modified"]))
def test_gradients_match_finite_differences(seed, kind):
    r = np.random.default_rng(seed)
    m = random_model(3, r)
    rep = gradcheck(m, LogicalPair.random(3, r), 0.3, n_steps=20, kind=kind)
    assert rep.ok
