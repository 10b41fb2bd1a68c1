import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcsim.kernel import BELL_LABELS, CNOT, PSI00, SWAP, RngStream, sigma
from ctcsim.linalg import ContractViolation, equal_up_to_phase, haar_unitary, partial_trace, random_state
from ctcsim.loop import (
    LoopCircuit,
    cnot_demo,
    cnot_loop,
    consistent_loop_states,
    effective_operator,
    loop_outcome_distribution,
    postselection_report,
    run_loop,
    simulate_loop,
    swap_loop,
    time_travel_channel,
    verify_loop_identity,
)
from ctcsim.stats import Histogram, within_binomial

from oracles import BELL, LABELS, R, ptrace_loops

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _insert_bit(value, bit, pos, n_open):
    """Index of a full register where qubit ``pos`` holds ``bit`` and the rest hold ``value``."""
    hi = value >> (n_open - pos)
    lo = value & ((1 << (n_open - pos)) - 1)
    return (((hi << 1) | bit) << (n_open - pos)) | lo


def brute_effective(u, loop_qubit, label):
    """sum_{i,q,j} u[(b,i),(a,q)] conj(Psi_l[i,j]) Psi_00[q,j] by explicit loops."""
    n = int(np.log2(u.shape[0]))
    n_open = n - 1
    d = 1 << n_open
    bra = BELL[label].reshape(2, 2).conj()
    pair = BELL[(0, 0)].reshape(2, 2)
    out = np.zeros((d, d), complex)
    for b in range(d):
        for a in range(d):
            for i in range(2):
                for q in range(2):
                    for j in range(2):
                        out[b, a] += (
                            u[_insert_bit(b, i, loop_qubit, n_open), _insert_bit(a, q, loop_qubit, n_open)]
                            * bra[i, j] * pair[q, j]
                        )
    return out


def test_cnot_effective_operators():
    c = cnot_loop()
    assert np.allclose(effective_operator(c, (0, 0)), np.diag([1, 0]), atol=1e-12)
    assert np.allclose(effective_operator(c, (1, 0)), np.diag([0, 1]), atol=1e-12)
    assert np.allclose(effective_operator(c, (0, 1)), 0, atol=1e-12)
    assert np.allclose(effective_operator(c, (1, 1)), 0, atol=1e-12)


@pytest.mark.parametrize("label", BELL_LABELS)
def test_swap_loop_is_teleportation_channel(label):
    e = effective_operator(swap_loop(), label)
    assert np.allclose(e, time_travel_channel(label), atol=1e-12)
    assert equal_up_to_phase(e, 0.5 * sigma(label), 1e-12)
    if label == PSI00:
        assert np.allclose(e, 0.5 * np.eye(2), atol=1e-12)


@settings(max_examples=30)
@given(seeds, st.sampled_from([2, 3]), st.data())
def test_effective_operator_matches_brute_force(seed, n, data):
    rng = np.random.default_rng(seed)
    u = haar_unitary(1 << n, rng)
    loop = data.draw(st.integers(0, n - 1))
    label = data.draw(st.sampled_from(LABELS))
    got = effective_operator(LoopCircuit(u, loop), label)
    assert np.allclose(got, brute_effective(u, loop, label), atol=1e-12)


@settings(max_examples=20)
@given(seeds)
def test_psi00_branch_is_half_partial_trace(seed):
    u = haar_unitary(4, np.random.default_rng(seed))
    c = LoopCircuit(u, 1)
    assert np.max(np.abs(effective_operator(c) - 0.5 * partial_trace(u, 2, "last"))) <= 1e-10
    assert np.allclose(effective_operator(c), 0.5 * ptrace_loops(u, 2, "last"), atol=1e-12)
    assert verify_loop_identity(c)


def test_verify_loop_identity_examples():
    assert verify_loop_identity(cnot_loop())
    assert verify_loop_identity(swap_loop())
    rng = np.random.default_rng(99)
    for loop in range(3):
        assert verify_loop_identity(LoopCircuit(haar_unitary(8, rng), loop))


def test_time_travel_channel_examples():
    assert np.allclose(time_travel_channel((0, 0)), 0.5 * np.eye(2), atol=1e-12)
    shift = time_travel_channel((1, 0))
    assert np.allclose(shift @ [1, 0], [0, 0.5]) and np.allclose(shift @ [0, 1], [0.5, 0])
    assert equal_up_to_phase(time_travel_channel((1, 1)), 0.5 * np.diag([1, -1]), 1e-12)


@pytest.mark.parametrize("label", BELL_LABELS)
def test_time_travel_channel_literal(label):
    # F_{Psi00} G_{Psi_l*}[c, a] = sum_b Psi00[b, c] conj(Psi_l[a, b])
    p00 = BELL[(0, 0)].reshape(2, 2)
    pl = BELL[tuple(label)].reshape(2, 2)
    expected = np.array([[sum(p00[b, c] * pl[a, b].conjugate() for b in range(2)) for a in range(2)]
                         for c in range(2)])
    assert np.allclose(time_travel_channel(label), expected, atol=1e-15)


def test_postselection_report():
    rep = postselection_report(cnot_loop(), (0, 0))
    assert rep.scalar_factor == pytest.approx(0.5)
    assert rep.outcome_probability([0.6, 0.8]) == pytest.approx(0.36)
    for label in BELL_LABELS:
        r = postselection_report(swap_loop(), label)
        assert abs(abs(r.scalar_factor) - 0.5) < 1e-12
        assert np.allclose(r.scalar_factor * sigma(label), time_travel_channel(label), atol=1e-12)


@settings(max_examples=20)
@given(seeds)
def test_effective_operator_linear(seed):
    rng = np.random.default_rng(seed)
    c = LoopCircuit(haar_unitary(8, rng), int(rng.integers(3)))
    e = effective_operator(c)
    psi, phi = random_state(2, rng), random_state(2, rng)
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    assert np.allclose(e @ (a * psi + b * phi), a * (e @ psi) + b * (e @ phi), atol=1e-12)


@settings(max_examples=20)
@given(seeds)
def test_outcome_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    c = LoopCircuit(haar_unitary(8, rng), int(rng.integers(3)))
    psi = random_state(2, rng)
    total = sum(np.linalg.norm(effective_operator(c, l) @ psi) ** 2 for l in BELL_LABELS)
    assert abs(total - 1) <= 1e-10
    assert abs(loop_outcome_distribution(c, psi).probabilities.sum() - 1) <= 1e-10


def test_swap_teleports_input():
    psi = random_state(1, np.random.default_rng(5))
    seen = set()
    for t in range(200):
        label, residual = simulate_loop(swap_loop(), psi, RngStream(8, t))
        seen.add(label)
        assert equal_up_to_phase(residual, sigma(label) @ psi, 1e-10)
        if label == PSI00:
            assert equal_up_to_phase(residual, psi, 1e-10)
    assert seen == set(BELL_LABELS)


def test_cnot_loop_on_zero():
    for t in range(100):
        label, residual = simulate_loop(cnot_loop(), [1, 0], RngStream(1, t))
        assert label == PSI00
        assert np.allclose(residual, [1, 0])


def test_cnot_loop_on_plus():
    dist = loop_outcome_distribution(cnot_loop(), np.array([1, 1]) * R)
    assert np.allclose(dist.probabilities, [0.5, 0, 0.5, 0], atol=1e-12)
    for t in range(100):
        label, residual = simulate_loop(cnot_loop(), np.array([1, 1]) * R, RngStream(2, t))
        assert label in {(0, 0), (1, 0)}
        assert equal_up_to_phase(residual, [1, 0] if label == (0, 0) else [0, 1], 1e-12)


def test_paradox_resolution_bookkeeping():
    run = cnot_demo(0.6, 0.8, 5_000, seed=3)
    for label, residual in zip(run.outcomes, run.residuals):
        if equal_up_to_phase(residual, [0, 1], 1e-12):
            assert label == (1, 0)
        else:
            assert equal_up_to_phase(residual, [1, 0], 1e-12)
            assert label == (0, 0)


def test_sampling_matches_effective_operators():
    rng = np.random.default_rng(17)
    c = LoopCircuit(haar_unitary(8, rng), 0)
    psi = random_state(2, rng)
    expected = np.array([np.linalg.norm(effective_operator(c, l) @ psi) ** 2 for l in BELL_LABELS])
    run = run_loop(c, psi, 100_000, seed=17)
    assert within_binomial(run.histogram, expected)


def test_run_loop_matches_single_shots():
    psi = random_state(1, np.random.default_rng(0))
    run = run_loop(swap_loop(), psi, 50, seed=4)
    for t in range(50):
        label, residual = simulate_loop(swap_loop(), psi, RngStream(4, t))
        assert run.outcomes[t] == label
        assert np.allclose(run.residuals[t], residual)


def test_consistent_loop_state_of_cnot():
    basis = consistent_loop_states(cnot_loop())
    assert basis.shape == (2, 1)
    plus = np.array([1, 1]) * R
    assert equal_up_to_phase(basis[:, 0], plus, 1e-12)
    # |1> - |0> returns only up to a sign when the control is |1>
    minus = np.array([-1, 1]) * R
    assert abs(np.vdot(basis[:, 0], minus)) < 1e-12
    assert np.allclose(CNOT @ np.kron([0, 1], minus), -np.kron([0, 1], minus))


def test_swap_has_no_consistent_loop_state():
    assert consistent_loop_states(swap_loop()).shape[1] == 0


def test_loop_circuit_validation():
    with pytest.raises(ContractViolation):
        LoopCircuit(np.ones((4, 4)), 1)
    with pytest.raises(ContractViolation):
        LoopCircuit(CNOT, 2)
    with pytest.raises(ContractViolation):
        simulate_loop(cnot_loop(), [1, 0, 0, 0], RngStream(0))


def test_loop_qubit_position_equivalence():
    # CNOT looped on its target equals CNOT conjugated by SWAP looped on its first qubit
    flipped = SWAP @ CNOT @ SWAP
    a = effective_operator(LoopCircuit(CNOT, 1))
    b = effective_operator(LoopCircuit(flipped, 0))
    assert np.allclose(a, b, atol=1e-12)
