"""Algebraic identity checks behind ``ctcsim verify``."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ctcsim.kernel import (
    BELL_BASIS,
    BELL_LABELS,
    CNOT,
    PSI00,
    SWAP,
    BellLabel,
    SigmaFn,
    basis_state,
    bell_state,
    born_distribution,
    f_map,
    g_map,
    sigma,
)
from ctcsim.linalg import equal_up_to_phase, haar_unitary, partial_trace, random_state
from ctcsim.loop import LoopCircuit, effective_operator, time_travel_channel
from ctcsim.protocols import RelabelInvariantError, build_relabel_table, decoded_exact_distribution


@dataclass
class Check:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: error={self.error:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()


def _max_err(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def check_duality(tol: float = 1e-12) -> Check:
    psi = bell_state(PSI00)
    err = _max_err(f_map(psi) @ g_map(psi), 0.5 * np.eye(2))
    return Check("duality F(Psi00) G(Psi00*) = I/2", err <= tol, err, tol)


def random_loop_circuits(seed: int, count: int = 20) -> list[LoopCircuit]:
    rng = np.random.default_rng(seed)
    circuits = []
    for n in (2, 3):
        for i in range(count):
            circuits.append(LoopCircuit(haar_unitary(1 << n, rng), loop_qubit=int(rng.integers(n))))
    return circuits


def check_loop_identities(tol: float = 1e-10, seed: int = 0, count: int = 20) -> list[Check]:
    def err(c: LoopCircuit) -> float:
        return _max_err(effective_operator(c, PSI00), 0.5 * partial_trace(c.u_loop_last, 2, "last"))

    checks = []
    for name, gate in (("CNOT", CNOT), ("SWAP", SWAP)):
        e = err(LoopCircuit(gate, 1))
        checks.append(Check(f"loop identity {name}", e <= tol, e, tol))
    randoms = random_loop_circuits(seed, count)
    worst = max(err(c) for c in randoms)
    checks.append(Check(f"loop identity {len(randoms)} Haar-random 2/3-qubit unitaries", worst <= tol, worst, tol))
    return checks


def check_channels(sigma_fn: SigmaFn = sigma, tol: float = 1e-12) -> list[Check]:
    t10 = time_travel_channel((1, 0))
    shift = 0.5 * np.array([[0, 1], [1, 0]])
    err = _max_err(t10, shift)
    checks = [Check("channel Psi10: |x> -> |x+1>/2", err <= tol, err, tol)]
    for l in BELL_LABELS:
        chan = time_travel_channel(l)
        ok = equal_up_to_phase(chan, 0.5 * sigma_fn(l), tol)
        # phase-aligned residual for reporting
        target = 0.5 * sigma_fn(l)
        idx = np.unravel_index(np.argmax(np.abs(target)), target.shape)
        ph = chan[idx] / target[idx] if abs(chan[idx]) > 0 else 1.0
        ph = ph / abs(ph) if abs(ph) > 0 else 1.0
        checks.append(Check(f"channel Psi{l} = sigma/2 up to phase", ok, _max_err(chan, ph * target), tol))
    return checks


def check_relabel(sigma_fn: SigmaFn = sigma, tol: float = 1e-12, seed: int = 0) -> list[Check]:
    try:
        table = build_relabel_table(sigma_fn, tol)
    except RelabelInvariantError as exc:
        return [Check("relabel table soundness", False, float("inf"), tol, str(exc))]
    checks = [Check("relabel table soundness (64 entries, bijective)", len(table) == 64, 0.0, tol)]
    rng = np.random.default_rng(seed)
    states = [bell_state(PSI00), basis_state("00"), np.array([1, 1, 0, 0]) / np.sqrt(2)]
    states += [random_state(2, rng) for _ in range(5)]
    worst = 0.0
    for phi in states:
        exact = born_distribution(phi, BELL_BASIS, [0, 1]).probabilities
        worst = max(worst, _max_err(decoded_exact_distribution(phi, table), exact))
    checks.append(Check("decoded distribution = Born distribution (8 states)", worst <= tol, worst, tol))
    return checks


def faulty_sigma(label: BellLabel) -> np.ndarray:
    """``sigma`` with the 01/11 assignments swapped; negative control only."""
    swapped = {BellLabel(0, 1): BellLabel(1, 1), BellLabel(1, 1): BellLabel(0, 1)}
    return sigma(swapped.get(BellLabel(*label), BellLabel(*label)))


def run_all(tolerance: float | None = None, seed: int = 0, sigma_fn: SigmaFn = sigma) -> list[Check]:
    """Every algebraic check; ``tolerance`` overrides each check's default."""
    t12 = 1e-12 if tolerance is None else tolerance
    t10 = 1e-10 if tolerance is None else tolerance
    checks = [check_duality(t12)]
    checks += check_loop_identities(t10, seed)
    checks += check_channels(sigma_fn, t12)
    checks += check_relabel(sigma_fn, t12, seed)
    return checks


def report_dict(checks: list[Check]) -> dict:
    return {"passed": all(c.passed for c in checks), "checks": [asdict(c) for c in checks]}
