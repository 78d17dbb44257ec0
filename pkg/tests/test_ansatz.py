import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqec.ansatz import (
    all_to_all_basis, assemble, coupling_block, distance_d_basis, hamiltonian_distance, max_out_of_band,
    project_bounds,
)
from aqec.hilbert import is_hermitian


def test_all_to_all_count_cutoff1():
    b = all_to_all_basis(1)
    assert len(b) == 8 and b.dim == 4
    assert len(all_to_all_basis(1, include_diagonal=False)) == 4
    assert all(is_hermitian(T) for T in b.terms)


def test_distance_one_count_cutoff2():
    b = distance_d_basis(2, 1)
    assert len(b) == 8
    assert {lab[0] for lab in b.labels} == {"ge"}
    assert b.label_strings()[0].startswith("ge:")


def test_distance_basis_errors():
    with pytest.raises(ValueError):
        distance_d_basis(3, 0)
    with pytest.raises(ValueError):
        distance_d_basis(2, 3)
    with pytest.raises(ValueError):
        all_to_all_basis(0)


def test_distance_basis_band_and_subset():
    cutoff = 6
    b1 = {lab for lab in distance_d_basis(cutoff, 1).labels}
    b2 = distance_d_basis(cutoff, 2)
    assert b1 < set(b2.labels)
    rng = np.random.default_rng(3)
    H = assemble(b2, rng.uniform(-1, 1, len(b2)))
    Ht = coupling_block(H)
    assert hamiltonian_distance(Ht) == 2
    assert max_out_of_band(Ht, 2) == 0.0
    assert max_out_of_band(Ht, 1) > 0
    # no in-sector terms in the distance ansatz
    assert np.all(H[0::2, 0::2] == 0) and np.all(H[1::2, 1::2] == 0)


def test_hamiltonian_distance_input():
    with pytest.raises(ValueError):
        hamiltonian_distance(np.ones((2, 3)))
    assert hamiltonian_distance(np.eye(4)) == 0


def test_project_bounds():
    np.testing.assert_array_equal(project_bounds([-3.0, 0.5, 2.0], 1.0), [-1.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        project_bounds([1.0], 0.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=4), st.floats(0.1, 3.0))
def test_projection_idempotent(vals, bound):
    once = project_bounds(vals, bound)
    np.testing.assert_array_equal(project_bounds(once, bound), once)
    assert np.all(np.abs(once) <= bound)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_assemble_linear_and_hermitian(seed):
    rng = np.random.default_rng(seed)
    b = distance_d_basis(4, 2)
    x, y = rng.standard_normal((2, len(b)))
    c = rng.standard_normal()
    lhs = assemble(b, x + c * y)
    assert np.max(np.abs(lhs - assemble(b, x) - c * assemble(b, y))) < 1e-13
    assert is_hermitian(lhs)


def test_assemble_wrong_length():
    with pytest.raises(ValueError):
        assemble(distance_d_basis(2, 1), np.ones(3))
