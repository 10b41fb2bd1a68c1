"""Encrypted joint measurement of a future state, and multistage pipelining.

Encrypted measurement register (all measurements in the Bell basis)::

    pair 1: (o1, i1) in Psi_00       pair 2: (i2, o2) in Psi_00
    today:    M0 on (i1, i2)                      -> ciphertext label
    tomorrow: phi_ab on (a, b); M1 on (a, o1), M2 on (b, o2) -> key labels

Today's measurement sees ``(T_ka (x) T_kb) phi_ab`` with ``T_k`` proportional
to ``sigma(k)``, so the ciphertext label ``w`` decodes to the label of
``sigma(ka) (x) sigma(kb) Psi_w``.

Measured pairs end in a known Bell state and are dropped from the register
after each measurement, so at most 4 qubits are live at once. The full
6-qubit contraction is kept separately as an oracle
(:func:`exact_joint_distribution`).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ctcsim.kernel import (
    BELL_BASIS,
    BELL_LABELS,
    PSI00,
    BellLabel,
    RngStream,
    SigmaFn,
    apply_gate,
    bell_state,
    project,
    sample_index,
    sigma,
)
from ctcsim.linalg import (
    ContractViolation,
    as_matrix,
    as_state,
    equal_up_to_phase,
    is_normalized,
    is_unitary,
    normalize,
    tensor_all,
)
from ctcsim.stats import Histogram, binomial_bounds, tv_distance, within_binomial

LABEL_STRS = tuple(str(l) for l in BELL_LABELS)
UNIFORM4 = np.full(4, 0.25)


class RelabelInvariantError(RuntimeError):
    """A Pauli-transformed Bell state failed to match any Bell state."""


@dataclass(frozen=True)
class RelabelTable:
    entries: dict[tuple[BellLabel, BellLabel, BellLabel], BellLabel]

    def lookup(self, key_a: BellLabel, key_b: BellLabel, today: BellLabel) -> BellLabel:
        return self.entries[(key_a, key_b, today)]

    def __len__(self) -> int:
        return len(self.entries)


def build_relabel_table(sigma_fn: SigmaFn = sigma, tol: float = 1e-12) -> RelabelTable:
    """All 64 ``(key_a, key_b, today) -> decoded`` entries, found by matching
    ``sigma(key_a) (x) sigma(key_b) Psi_today`` against the Bell basis."""
    bells = {l: bell_state(l) for l in BELL_LABELS}
    entries = {}
    for ka in BELL_LABELS:
        for kb in BELL_LABELS:
            op = np.kron(sigma_fn(ka), sigma_fn(kb))
            for w in BELL_LABELS:
                v = op @ bells[w]
                hits = [l for l in BELL_LABELS if equal_up_to_phase(v, bells[l], tol)]
                if len(hits) != 1:
                    raise RelabelInvariantError(
                        f"sigma({ka}) x sigma({kb}) Psi_{w} matches {len(hits)} Bell states"
                    )
                entries[(ka, kb, w)] = hits[0]
            if len({entries[(ka, kb, w)] for w in BELL_LABELS}) != 4:
                raise RelabelInvariantError(f"keys ({ka}, {kb}) do not give a bijection")
    return RelabelTable(entries)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    today: BellLabel
    key_a: BellLabel
    key_b: BellLabel
    decoded: BellLabel | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "trial_id": self.trial_id,
                "today": list(self.today),
                "key_a": list(self.key_a),
                "key_b": list(self.key_b),
                "decoded": None if self.decoded is None else list(self.decoded),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        d = json.loads(line)
        return cls(
            int(d["trial_id"]),
            BellLabel.of(*d["today"]),
            BellLabel.of(*d["key_a"]),
            BellLabel.of(*d["key_b"]),
            None if d.get("decoded") is None else BellLabel.of(*d["decoded"]),
        )


def write_records(records: Iterable[TrialRecord], path: str | Path) -> None:
    ordered = sorted(records, key=lambda r: r.trial_id)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in ordered:
            fh.write(r.to_json() + "\n")


def read_records(path: str | Path) -> list[TrialRecord]:
    with open(path, encoding="utf-8") as fh:
        return [TrialRecord.from_json(line) for line in fh if line.strip()]


def _bell_projection(state, targets) -> tuple[np.ndarray, np.ndarray]:
    return project(state, BELL_BASIS, targets)


class _EncryptedBranches:
    """Outcome tree of one encrypted-measurement trial for a fixed phi_ab.

    Every trial runs the same circuit, so branch probabilities and post-states
    are computed once per reachable outcome prefix and reused.
    """

    def __init__(self, phi_ab: np.ndarray):
        self.phi = phi_ab
        # today: register (o1, i1, i2, o2), M0 on (i1, i2)
        pairs = np.kron(bell_state(PSI00), bell_state(PSI00))
        self.p_today, res = _bell_projection(pairs, [1, 2])
        self._after_today = res  # unnormalized states on (o1, o2)
        self._m1: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._m2: dict[tuple[int, int], np.ndarray] = {}

    def p_key_a(self, w: int) -> np.ndarray:
        if w not in self._m1:
            rest = self._after_today[w] / np.sqrt(self.p_today[w])
            state = np.kron(self.phi, rest)  # (a, b, o1, o2)
            self._m1[w] = _bell_projection(state, [0, 2])
        return self._m1[w][0]

    def p_key_b(self, w: int, ka: int) -> np.ndarray:
        if (w, ka) not in self._m2:
            probs, res = self._m1[w]
            rest = res[ka] / np.sqrt(probs[ka])  # (b, o2)
            self._m2[(w, ka)] = _bell_projection(rest, [0, 1])[0]
        return self._m2[(w, ka)]

    def sample(self, rng: RngStream) -> tuple[int, int, int]:
        w = sample_index(self.p_today, rng)
        ka = sample_index(self.p_key_a(w), rng)
        kb = sample_index(self.p_key_b(w, ka), rng)
        return w, ka, kb


def _check_pair_state(phi) -> np.ndarray:
    phi = as_state(phi)
    if phi.shape != (4,):
        raise ContractViolation(f"phi_ab must be a 2-qubit state, got {phi.shape[0]} amplitudes")
    if not is_normalized(phi):
        raise ContractViolation("phi_ab must be normalized")
    return phi


def run_encrypted_measurement(
    phi_ab,
    n_trials: int,
    seed: int,
    substitute_after: tuple[int, np.ndarray] | None = None,
) -> list[TrialRecord]:
    """Simulate ``n_trials`` runs; trial ``t`` samples from stream ``(seed, t)``.

    ``substitute_after=(t0, replacement)`` creates ``replacement`` instead of
    ``phi_ab`` tomorrow for every trial with index ``>= t0``.
    """
    if n_trials < 1:
        raise ContractViolation("n_trials must be positive")
    trees = [_EncryptedBranches(_check_pair_state(phi_ab))]
    cut = n_trials
    if substitute_after is not None:
        cut, replacement = substitute_after
        if not 0 <= cut < n_trials:
            raise ContractViolation(f"substitution index {cut} outside [0, {n_trials})")
        trees.append(_EncryptedBranches(_check_pair_state(replacement)))
    records = []
    for t in range(n_trials):
        tree = trees[0] if t < cut else trees[1]
        w, ka, kb = tree.sample(RngStream(seed, t))
        records.append(TrialRecord(t, BELL_LABELS[w], BELL_LABELS[ka], BELL_LABELS[kb]))
    return records


def exact_joint_distribution(phi_ab, order: str = "today_first") -> np.ndarray:
    """Exact ``P[today, key_a, key_b]`` (shape 4x4x4) from sequential projections.

    ``order="today_first"`` measures M0 on the pairs alone before phi_ab
    exists; ``"tomorrow_first"`` builds the full 6-qubit register
    ``(a, o1, i1, i2, o2, b)``, measures M1 and M2 and then M0.
    """
    phi = _check_pair_state(phi_ab)
    out = np.zeros((4, 4, 4))
    if order == "today_first":
        tree = _EncryptedBranches(phi)
        for w in range(4):
            if tree.p_today[w] <= 0:
                continue
            pa = tree.p_key_a(w)
            for ka in range(4):
                if pa[ka] <= 0:
                    continue
                out[w, ka] = tree.p_today[w] * pa[ka] * tree.p_key_b(w, ka)
        return out
    if order != "tomorrow_first":
        raise ValueError(f"unknown order {order!r}")
    pair = bell_state(PSI00)
    # (a, b) (o1, i1) (i2, o2) -> (a, o1, i1, i2, o2, b)
    full = tensor_all(phi, pair, pair).reshape((2,) * 6)
    full = np.transpose(full, (0, 2, 3, 4, 5, 1)).reshape(-1)
    p1, r1 = _bell_projection(full, [0, 1])  # remaining (i1, i2, o2, b)
    for ka in range(4):
        if p1[ka] <= 1e-300:
            continue
        p2, r2 = _bell_projection(r1[ka], [3, 2])  # M2 on (b, o2); remaining (i1, i2)
        for kb in range(4):
            if p2[kb] <= 1e-300:
                continue
            p0, _ = _bell_projection(r2[kb], [0, 1])
            out[:, ka, kb] = p0
    return out


def decode_trials(records: Sequence[TrialRecord], table: RelabelTable | None = None) -> tuple[list[TrialRecord], Histogram]:
    """Fill in decoded labels from the keys alone; the simulated state is never consulted."""
    table = table or build_relabel_table()
    decoded = [replace(r, decoded=table.lookup(r.key_a, r.key_b, r.today)) for r in records]
    return decoded, Histogram.from_samples(LABEL_STRS, (str(r.decoded) for r in decoded))


def decoded_exact_distribution(phi_ab, table: RelabelTable | None = None) -> np.ndarray:
    """Distribution of decoded labels implied by the exact joint distribution."""
    table = table or build_relabel_table()
    joint = exact_joint_distribution(phi_ab)
    out = np.zeros(4)
    for w in range(4):
        for ka in range(4):
            for kb in range(4):
                d = table.lookup(BELL_LABELS[ka], BELL_LABELS[kb], BELL_LABELS[w])
                out[d.index] += joint[w, ka, kb]
    return out


def histogram_of(records: Iterable[TrialRecord], field_name: str) -> Histogram:
    return Histogram.from_samples(LABEL_STRS, (str(getattr(r, field_name)) for r in records))


@dataclass(frozen=True)
class CiphertextReport:
    today: Histogram
    key_a: Histogram
    key_b: Histogram
    tv_to_uniform: float
    today_uniform: bool
    keys_uniform: bool

    @property
    def useless_alone(self) -> bool:
        return self.today_uniform and self.keys_uniform


def ciphertext_uselessness_check(records: Sequence[TrialRecord]) -> CiphertextReport:
    """Are the ciphertext and each key stream, taken alone, uniform (per-bin 5 sigma)?"""
    today = histogram_of(records, "today")
    ka = histogram_of(records, "key_a")
    kb = histogram_of(records, "key_b")
    return CiphertextReport(
        today=today,
        key_a=ka,
        key_b=kb,
        tv_to_uniform=tv_distance(today, UNIFORM4),
        today_uniform=within_binomial(today, UNIFORM4),
        keys_uniform=within_binomial(ka, UNIFORM4) and within_binomial(kb, UNIFORM4),
    )


def postselected_today(records: Sequence[TrialRecord]) -> Histogram:
    """Raw ciphertext restricted to trials where both keys came out ``Psi_00``."""
    return histogram_of((r for r in records if r.key_a == PSI00 and r.key_b == PSI00), "today")


# --- multistage pipelining -------------------------------------------------


@dataclass
class MultistageReport:
    n_trials: int
    n_stages: int
    success_count: int
    outcomes: list[tuple[BellLabel, ...]]
    conditional_final_states: dict[int, np.ndarray] = field(repr=False)

    @property
    def success_rate(self) -> float:
        return self.success_count / self.n_trials


class _StageBranches:
    """Carrier state after each outcome prefix of a stage chain."""

    def __init__(self, unitaries: Sequence[np.ndarray], psi: np.ndarray):
        self.unitaries = unitaries
        self._states: dict[tuple[int, ...], np.ndarray] = {(): psi}
        self._probs: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}

    def stage(self, prefix: tuple[int, ...]) -> np.ndarray:
        if prefix not in self._probs:
            u = self.unitaries[len(prefix)]
            # register (carrier, a, b): fresh pair on (a, b), gate on b, Bell-measure (carrier, a)
            state = np.kron(self._states[prefix], bell_state(PSI00))
            state = apply_gate(state, u, [2])
            self._probs[prefix] = _bell_projection(state, [0, 1])
        return self._probs[prefix][0]

    def state_after(self, prefix: tuple[int, ...]) -> np.ndarray:
        if prefix not in self._states:
            head, k = prefix[:-1], prefix[-1]
            probs, res = self._probs[head]
            self._states[prefix] = res[k] / np.sqrt(probs[k])
        return self._states[prefix]


def run_multistage(unitaries: Sequence, input_state, n_trials: int, seed: int) -> MultistageReport:
    """Chain ``len(unitaries)`` post-selected teleport stages on one qubit.

    A trial succeeds when every stage's Bell outcome is ``Psi_00``; the final
    carrier state is then ``U_k ... U_1 input`` up to phase. Other outcomes are
    recorded but not corrected.
    """
    mats = [as_matrix(u) for u in unitaries]
    for i, u in enumerate(mats):
        if u.shape != (2, 2) or not is_unitary(u):
            raise ContractViolation(f"stage {i} is not a single-qubit unitary")
    psi = as_state(input_state)
    if psi.shape != (2,):
        raise ContractViolation("multistage input must be a single-qubit state")
    psi = normalize(psi)
    if n_trials < 1:
        raise ContractViolation("n_trials must be positive")
    tree = _StageBranches(mats, psi)
    outcomes, finals, successes = [], {}, 0
    for t in range(n_trials):
        rng = RngStream(seed, t)
        prefix: tuple[int, ...] = ()
        for _ in mats:
            prefix = prefix + (sample_index(tree.stage(prefix), rng),)
            tree.state_after(prefix)
        outcomes.append(tuple(BELL_LABELS[k] for k in prefix))
        if all(k == 0 for k in prefix):
            successes += 1
            finals[t] = tree.state_after(prefix)
    return MultistageReport(n_trials, len(mats), successes, outcomes, finals)


def composed_unitary(unitaries: Sequence) -> np.ndarray:
    out = np.eye(2, dtype=np.complex128)
    for u in unitaries:
        out = as_matrix(u) @ out
    return out


def multistage_trials_for(k: int) -> int:
    return max(100_000, 100 * 4**k)


def success_within_binomial(report: MultistageReport, sigmas: float = 5.0) -> bool:
    p = 4.0 ** (-report.n_stages)
    bound = float(binomial_bounds(p, report.n_trials, sigmas)) if 0 < p < 1 else 0.0
    return abs(report.success_rate - p) <= bound + 1e-12
