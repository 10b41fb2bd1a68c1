"""Backward-in-time wires realized by post-selected teleportation.

A :class:`LoopCircuit` is a unitary ``u`` on ``n_open + 1`` qubits where one
qubit (the loop wire) is fed from ``u``'s output back to its own input. The
ideal semantics of that loop is the partial trace of ``u`` over the loop wire.
The physical realization replaces the feedback with an entangled pair:

* prepare ``input (x) Psi_00`` on ``(open..., q, j)``;
* apply ``u`` to ``(open..., q)`` so half ``q`` of the pair enters the loop
  input and leaves as the loop output;
* Bell-measure ``(q, j)``.

Conditioned on outcome ``Psi_l`` the open wires carry
``Tr_loop[u (I (x) T_l)] input`` where ``T_l = F_{Psi_00} G_{Psi_l*}`` is the
single-qubit teleportation channel. For ``l = 00`` this is half the partial
trace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ctcsim.kernel import (
    BELL_BASIS,
    BELL_LABELS,
    CNOT,
    PSI00,
    SWAP,
    BellLabel,
    RngStream,
    apply_gate,
    bell_state,
    f_map,
    g_map,
    project,
    sample_index,
    sigma,
)
from ctcsim.linalg import (
    DEFAULT_TOL,
    ContractViolation,
    as_matrix,
    as_state,
    frobenius,
    is_unitary,
    num_qubits,
    partial_trace,
    permutation_operator,
    tensor_product,
)
from ctcsim.stats import Histogram


@dataclass(frozen=True)
class LoopCircuit:
    """Unitary with one qubit wire fed back from its output to its input."""

    u: np.ndarray
    loop_qubit: int = -1
    u_loop_last: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = as_matrix(self.u)
        n = num_qubits(u)
        if u.shape[0] != u.shape[1] or n < 1:
            raise ContractViolation(f"loop unitary must be square on >= 1 qubit, got {u.shape}")
        if not is_unitary(u):
            raise ContractViolation("loop operator is not unitary within 1e-10")
        loop = self.loop_qubit % n if -n <= self.loop_qubit < n else None
        if loop is None:
            raise ContractViolation(f"loop_qubit {self.loop_qubit} out of range for {n} qubits")
        perm = [k if k < loop else k - 1 for k in range(n)]
        perm[loop] = n - 1
        p = permutation_operator(perm)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "loop_qubit", loop)
        object.__setattr__(self, "u_loop_last", p @ u @ p.conj().T)

    @property
    def n_open(self) -> int:
        return num_qubits(self.u) - 1

    @property
    def open_dims(self) -> int:
        return 1 << self.n_open


def cnot_loop() -> LoopCircuit:
    """CNOT with the target looped back; the control is the open wire."""
    return LoopCircuit(CNOT, loop_qubit=1)


def swap_loop() -> LoopCircuit:
    return LoopCircuit(SWAP, loop_qubit=1)


def time_travel_channel(outcome: BellLabel | tuple[int, int]) -> np.ndarray:
    """``F_{Psi_00} . G_{Psi_outcome*}``: what the wire does under a given outcome.

    Equals ``sigma(outcome) / 2`` up to a global phase.
    """
    return f_map(bell_state(PSI00)) @ g_map(bell_state(outcome))


def effective_operator(circuit: LoopCircuit, outcome: BellLabel | tuple[int, int] = PSI00) -> np.ndarray:
    """Unnormalized map on the open wires conditioned on one Bell outcome.

    Built by contracting ``u`` (loop wire last, indices ``u[b, i, a, q]``)
    with the measured bra ``<Psi_l|_{ij}`` and the resource ket
    ``|Psi_00>_{qj}``; no sampling involved.
    """
    d = circuit.open_dims
    u4 = circuit.u_loop_last.reshape(d, 2, d, 2)
    bra = np.conj(bell_state(outcome)).reshape(2, 2)
    pair = bell_state(PSI00).reshape(2, 2)
    return np.einsum("biaq,ij,qj->ba", u4, bra, pair)


def verify_loop_identity(circuit: LoopCircuit, tol: float = DEFAULT_TOL) -> bool:
    """Does the ``Psi_00`` branch equal half the partial trace over the loop?"""
    expected = 0.5 * partial_trace(circuit.u_loop_last, 2, "last")
    return frobenius(effective_operator(circuit, PSI00) - expected) <= tol


def consistent_loop_states(circuit: LoopCircuit, tol: float = 1e-10) -> np.ndarray:
    """Loop-wire vectors that come back unchanged for every open-wire basis input.

    For open input ``|a>`` the loop wire sees the block
    ``B_a = (<a| (x) I) u (|a> (x) I)``; a consistent state satisfies
    ``B_a t = t`` for all ``a`` (as vectors, not merely as rays). Returns an
    orthonormal basis of that space as columns, possibly with zero columns.
    """
    d = circuit.open_dims
    u4 = circuit.u_loop_last.reshape(d, 2, d, 2)
    stacked = np.vstack([u4[a, :, a, :] - np.eye(2) for a in range(d)])
    _, s, vh = np.linalg.svd(stacked)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


@dataclass(frozen=True)
class PostselectionReport:
    outcome_label: BellLabel
    effective_operator: np.ndarray
    scalar_factor: complex

    def outcome_probability(self, psi) -> float:
        v = self.effective_operator @ as_state(psi)
        return float(np.vdot(v, v).real)


def postselection_report(circuit: LoopCircuit, outcome: BellLabel | tuple[int, int]) -> PostselectionReport:
    """Effective operator plus the scalar ``c`` with ``T_outcome = c * sigma(outcome)``."""
    label = BellLabel.of(*outcome)
    chan = time_travel_channel(label)
    s = sigma(label)
    idx = np.unravel_index(np.argmax(np.abs(s)), s.shape)
    return PostselectionReport(label, effective_operator(circuit, label), complex(chan[idx] / s[idx]))


def _loop_branches(circuit: LoopCircuit, input_state) -> tuple[np.ndarray, np.ndarray]:
    psi = as_state(input_state)
    if psi.shape[0] != circuit.open_dims:
        raise ContractViolation(
            f"input has dimension {psi.shape[0]}, open wires need {circuit.open_dims}"
        )
    n = circuit.n_open
    state = tensor_product(psi, bell_state(PSI00))
    state = apply_gate(state, circuit.u_loop_last, list(range(n + 1)))
    return project(state, BELL_BASIS, [n, n + 1])


def simulate_loop(circuit: LoopCircuit, input_state, rng: RngStream) -> tuple[BellLabel, np.ndarray]:
    """One shot of the teleportation-loop circuit.

    Returns the Bell outcome and the renormalized state left on the open wires.
    """
    probs, residuals = _loop_branches(circuit, input_state)
    k = sample_index(probs, rng)
    return BELL_LABELS[k], residuals[k] / np.sqrt(probs[k])


def loop_outcome_distribution(circuit: LoopCircuit, input_state) -> Histogram:
    probs, _ = _loop_branches(circuit, input_state)
    return Histogram.exact([str(l) for l in BELL_LABELS], probs)


@dataclass
class LoopRun:
    outcomes: list[BellLabel]
    residuals: list[np.ndarray]

    @property
    def histogram(self) -> Histogram:
        return Histogram.from_samples([str(l) for l in BELL_LABELS], map(str, self.outcomes))


def run_loop(circuit: LoopCircuit, input_state, n_shots: int, seed: int) -> LoopRun:
    """``n_shots`` independent shots, shot ``t`` drawing from stream ``(seed, t)``.

    The pre-measurement state is the same for every shot, so it is built once.
    """
    if n_shots < 1:
        raise ContractViolation("n_shots must be positive")
    probs, residuals = _loop_branches(circuit, input_state)
    posts = [r / np.sqrt(p) if p > 0 else r for p, r in zip(probs, residuals)]
    outcomes, states = [], []
    for t in range(n_shots):
        k = sample_index(probs, RngStream(seed, t))
        outcomes.append(BELL_LABELS[k])
        states.append(posts[k])
    return LoopRun(outcomes, states)


def cnot_demo(alpha: complex, beta: complex, n_shots: int, seed: int) -> LoopRun:
    """CNOT-loop shots with control state ``alpha|0> + beta|1>`` (normalized here)."""
    phi = np.array([alpha, beta], dtype=np.complex128)
    norm = np.linalg.norm(phi)
    if norm == 0:
        raise ContractViolation("alpha and beta cannot both be zero")
    return run_loop(cnot_loop(), phi / norm, n_shots, seed)
