import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcsim.kernel import CNOT, SWAP, X, Y, bell_state
from ctcsim.linalg import (
    ContractViolation,
    dagger,
    equal_up_to_phase,
    haar_unitary,
    is_unitary,
    partial_trace,
    permutation_operator,
    tensor_product,
)

from oracles import kron_loops, ptrace_loops

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rand_matrix(rng, r, c):
    return rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))


def test_tensor_identity():
    assert np.array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_basis_projectors():
    p0 = np.diag([1, 0])
    p1 = np.diag([0, 1])
    out = tensor_product(p0, p1)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.array_equal(out, expected)


def test_xx_fixes_psi00():
    psi = bell_state((0, 0))
    assert equal_up_to_phase(tensor_product(X, X) @ psi, psi, 1e-12)


@given(seeds)
def test_tensor_matches_loops(seed):
    rng = np.random.default_rng(seed)
    a, b = rand_matrix(rng, 2, 3), rand_matrix(rng, 3, 2)
    assert np.allclose(tensor_product(a, b), kron_loops(a, b), atol=1e-12)


@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rand_matrix(rng, 2, 2) for _ in range(3))
    left = tensor_product(tensor_product(a, b), c)
    right = tensor_product(a, tensor_product(b, c))
    assert np.max(np.abs(left - right)) <= 1e-12


def test_partial_trace_cnot_and_swap():
    assert np.allclose(partial_trace(CNOT, 2, "last"), 2 * np.diag([1, 0]), atol=1e-12)
    assert np.allclose(partial_trace(SWAP, 2, "last"), np.eye(2), atol=1e-12)
    assert np.allclose(partial_trace(SWAP, 2, "first"), np.eye(2), atol=1e-12)


@pytest.mark.parametrize("position", ["first", "last"])
@given(seed=seeds)
def test_partial_trace_of_product(position, seed):
    rng = np.random.default_rng(seed)
    a, b = rand_matrix(rng, 4, 4), rand_matrix(rng, 2, 2)
    if position == "last":
        u = tensor_product(a, b)
    else:
        u = tensor_product(b, a)
    out = partial_trace(u, 2, position)
    assert np.max(np.abs(out - np.trace(b) * a)) <= 1e-10
    assert np.allclose(out, ptrace_loops(u, 2, position), atol=1e-12)


@given(seeds, st.sampled_from([2, 4]), st.sampled_from(["first", "last"]))
def test_partial_trace_preserves_trace(seed, d, position):
    rng = np.random.default_rng(seed)
    u = rand_matrix(rng, 8, 8)
    assert abs(np.trace(partial_trace(u, d, position)) - np.trace(u)) <= 1e-10


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(ContractViolation):
        partial_trace(np.eye(6), 4)
    with pytest.raises(ContractViolation):
        partial_trace(np.ones((2, 4)), 2)
    with pytest.raises(ContractViolation):
        partial_trace(np.eye(4), 2, "middle")


def test_equal_up_to_phase_examples():
    p00, p10 = bell_state((0, 0)), bell_state((1, 0))
    assert equal_up_to_phase(p00, -p00, 1e-10)
    assert not equal_up_to_phase(p00, p10, 1e-10)
    y0 = Y @ np.array([1, 0])
    for theta in (0.0, 0.3, 2.0, -1.1):
        assert equal_up_to_phase(y0, np.exp(1j * theta) * 1j * np.array([0, 1]), 1e-10)


def test_equal_up_to_phase_zero_inputs():
    z = np.zeros(4)
    assert not equal_up_to_phase(z, bell_state((0, 0)))
    assert not equal_up_to_phase(bell_state((0, 0)), z)
    assert equal_up_to_phase(z, z)


def test_equal_up_to_phase_rejects_scaling():
    psi = bell_state((0, 0))
    assert not equal_up_to_phase(psi, 2 * psi)


@given(seeds, st.floats(min_value=-np.pi, max_value=np.pi))
def test_equal_up_to_phase_reflexive_symmetric(seed, theta):
    rng = np.random.default_rng(seed)
    v = rand_matrix(rng, 4, 1).ravel()
    v /= np.linalg.norm(v)
    w = np.exp(1j * theta) * v
    assert equal_up_to_phase(v, v)
    assert equal_up_to_phase(v, w) and equal_up_to_phase(w, v)
    u = rand_matrix(rng, 4, 1).ravel()
    u /= np.linalg.norm(u)
    assert equal_up_to_phase(u, v) == equal_up_to_phase(v, u)


def test_dagger():
    assert np.array_equal(dagger(np.eye(2)), np.eye(2))
    assert np.array_equal(dagger(Y), Y)


@given(seeds)
def test_dagger_involution(seed):
    a = rand_matrix(np.random.default_rng(seed), 3, 5)
    assert np.array_equal(dagger(dagger(a)), a)


@settings(max_examples=25)
@given(seeds, st.sampled_from([2, 4, 8]))
def test_haar_unitary_is_unitary(seed, dim):
    assert is_unitary(haar_unitary(dim, np.random.default_rng(seed)))


def test_permutation_operator_moves_qubits():
    # |a b c> -> qubit 0 to slot 2, qubit 1 to slot 0, qubit 2 to slot 1
    p = permutation_operator([2, 0, 1])
    src = np.zeros(8)
    src[0b100] = 1  # qubit 0 set
    assert (p @ src)[0b001] == 1
    assert np.array_equal(permutation_operator([1, 0]), SWAP)
    with pytest.raises(ContractViolation):
        permutation_operator([0, 0])
