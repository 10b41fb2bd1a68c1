"""Qubit registers, standard gates, the Bell basis, state/map duality and
seeded projective measurements."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ctcsim.linalg import (
    ContractViolation,
    as_matrix,
    as_state,
    num_qubits,
    tensor_all,
)
from ctcsim.stats import Histogram

SQRT1_2 = 1.0 / np.sqrt(2.0)

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)
# control = first tensor factor: |x>|y> -> |x>|x+y>
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)

NAMED_GATES: dict[str, np.ndarray] = {
    "I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "CNOT": CNOT, "SWAP": SWAP,
}


class BellLabel(NamedTuple):
    """The two bits ``(x, y)`` naming the Bell state ``Psi_xy``."""

    x: int
    y: int

    @classmethod
    def of(cls, x: int, y: int) -> "BellLabel":
        if x not in (0, 1) or y not in (0, 1):
            raise ContractViolation(f"Bell label bits must be 0 or 1, got ({x}, {y})")
        return cls(int(x), int(y))

    @classmethod
    def from_index(cls, index: int) -> "BellLabel":
        return BELL_LABELS[index]

    @classmethod
    def parse(cls, text: str) -> "BellLabel":
        text = text.strip()
        if len(text) != 2 or any(c not in "01" for c in text):
            raise ContractViolation(f"cannot parse Bell label {text!r}")
        return cls(int(text[0]), int(text[1]))

    @property
    def index(self) -> int:
        return 2 * self.x + self.y

    def __str__(self) -> str:
        return f"{self.x}{self.y}"


BELL_LABELS: tuple[BellLabel, ...] = tuple(BellLabel(x, y) for x in (0, 1) for y in (0, 1))
PSI00 = BellLabel(0, 0)


def basis_state(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis ket, e.g. ``basis_state("01") == |0>|1>``."""
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ContractViolation(f"basis bits must be 0 or 1, got {bits}")
    v = np.zeros(1 << len(bits), dtype=np.complex128)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


def bell_state(label: BellLabel | tuple[int, int]) -> np.ndarray:
    """``Psi_xy = (|x>|y> + (-1)^y |x+1>|y+1>) / sqrt 2``, sums mod 2."""
    x, y = BellLabel.of(*label)
    v = np.zeros(4, dtype=np.complex128)
    v[2 * x + y] += SQRT1_2
    v[2 * (x ^ 1) + (y ^ 1)] += (-1) ** y * SQRT1_2
    return v


_SIGMA = {
    BellLabel(0, 0): I2,
    BellLabel(1, 0): X,
    BellLabel(0, 1): Y,
    BellLabel(1, 1): Z,
}


SigmaFn = Callable[[BellLabel], np.ndarray]


def sigma(label: BellLabel | tuple[int, int]) -> np.ndarray:
    """Pauli correction attached to a Bell label.

    ``sigma(00) = I``, ``sigma(10) = X``, ``sigma(01) = Y``, ``sigma(11) = Z``.
    Note ``01 -> Y``: the correction identities built on it hold up to a
    global phase only.
    """
    return _SIGMA[BellLabel.of(*label)].copy()


def _split(phi: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    d_h, d_k = dims
    if d_h < 1 or d_k < 1 or d_h * d_k != phi.shape[0]:
        raise ContractViolation(
            f"split dims {dims} inconsistent with {phi.shape[0]} amplitudes"
        )
    return phi.reshape(d_h, d_k)


def f_map(phi, dims: tuple[int, int] = (2, 2)) -> np.ndarray:
    """The map ``H* -> K`` carried by a state ``phi`` on ``H (x) K``.

    Returns the ``d_K x d_H`` matrix ``M[b, a] = <a|<b|phi>``, acting on the
    coordinates of a bra ``<gamma|`` of ``H``.
    """
    return _split(as_state(phi), dims).T.copy()


def state_from_f_map(m, dims: tuple[int, int] | None = None) -> np.ndarray:
    """Inverse of :func:`f_map`."""
    m = as_matrix(m)
    if dims is not None and m.shape != (dims[1], dims[0]):
        raise ContractViolation(f"matrix shape {m.shape} does not match dims {dims}")
    return m.T.reshape(-1).copy()


def g_map(psi, dims: tuple[int, int] = (2, 2)) -> np.ndarray:
    """The map ``H -> K*`` carried by the bra of ``psi`` (passed as a ket).

    ``|gamma> -> sum_i d_i <alpha_i|gamma> <beta_i|`` with ``d_i`` the
    conjugated coefficients, i.e. ``M[b, a] = conj(<a|<b|psi>)``.
    """
    return np.conj(_split(as_state(psi), dims).T)


def apply_gate(state, gate, targets: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` to the listed qubits (in listed order), identity elsewhere."""
    state = as_state(state)
    gate = as_matrix(gate)
    n = num_qubits(state)
    targets = list(targets)
    k = len(targets)
    if len(set(targets)) != k:
        raise ContractViolation(f"duplicate target qubits {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise ContractViolation(f"targets {targets} out of range for {n} qubits")
    if gate.shape != (1 << k, 1 << k):
        raise ContractViolation(f"gate shape {gate.shape} does not act on {k} qubits")
    if k == 0:
        return state * gate[0, 0]
    psi = state.reshape((2,) * n)
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the gate's output axes first
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(-1)


def is_orthonormal(vectors: Sequence[np.ndarray], tol: float = 1e-10) -> bool:
    b = np.array(vectors, dtype=np.complex128)
    gram = np.conj(b) @ b.T
    return bool(np.linalg.norm(gram - np.eye(len(vectors))) <= tol)


@dataclass(frozen=True)
class MeasurementBasis:
    """A complete orthonormal basis for a register of ``n_qubits`` qubits.

    Validated once at construction; measurements do not re-check it.
    """

    vectors: tuple[np.ndarray, ...]
    labels: tuple[str, ...]
    n_qubits: int = field(init=False)

    def __post_init__(self):
        vecs = tuple(as_state(v) for v in self.vectors)
        if not vecs:
            raise ContractViolation("empty measurement basis")
        dim = vecs[0].shape[0]
        n = num_qubits(vecs[0])
        if len(vecs) != dim or any(v.shape != (dim,) for v in vecs):
            raise ContractViolation(f"basis must have {dim} vectors of dimension {dim}")
        if len(self.labels) != dim:
            raise ContractViolation("one label per basis vector required")
        if not is_orthonormal(vecs):
            raise ContractViolation("measurement basis is not orthonormal")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "n_qubits", n)

    @classmethod
    def from_vectors(cls, vectors, labels=None) -> "MeasurementBasis":
        vectors = tuple(vectors)
        labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(vectors)))
        return cls(vectors, labels)

    @classmethod
    def bell(cls) -> "MeasurementBasis":
        return cls(tuple(bell_state(l) for l in BELL_LABELS), tuple(str(l) for l in BELL_LABELS))

    @classmethod
    def computational(cls, n_qubits: int = 1) -> "MeasurementBasis":
        dim = 1 << n_qubits
        return cls(
            tuple(np.eye(dim, dtype=np.complex128)[i] for i in range(dim)),
            tuple(format(i, f"0{n_qubits}b") for i in range(dim)),
        )

    def __len__(self) -> int:
        return len(self.vectors)


BELL_BASIS = MeasurementBasis.bell()


def _as_basis(basis) -> MeasurementBasis:
    return basis if isinstance(basis, MeasurementBasis) else MeasurementBasis.from_vectors(basis)


class RngStream:
    """Seeded random stream identified by ``(master_seed, stream_id)``.

    Backed by numpy's PCG64 seeded through ``SeedSequence([seed, stream_id])``,
    so the sample sequence depends only on the pair and not on how many other
    streams exist or in which order they are consumed. One stream per trial;
    instances are stateful and must not be shared between threads.
    """

    MASK64 = (1 << 64) - 1

    def __init__(self, master_seed: int, stream_id: int = 0):
        if stream_id < 0:
            raise ContractViolation("stream_id must be non-negative")
        self.master_seed = int(master_seed) & self.MASK64
        self.stream_id = int(stream_id)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.master_seed, self.stream_id]))
        )

    def random(self) -> float:
        return float(self._gen.random())

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.master_seed, stream_id)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def sample_index(probabilities: np.ndarray, rng: RngStream) -> int:
    """Inverse-CDF draw; zero-probability outcomes are never returned."""
    cum = np.cumsum(probabilities)
    u = rng.random() * cum[-1]
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(cum) - 1)


def project(state, basis, targets: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Split ``state`` along a basis of the ``targets`` register.

    Returns ``(probabilities, residuals)`` where ``residuals[m]`` is the
    unnormalized state of the remaining qubits (original order) after
    projecting the targets onto basis vector ``m``.
    """
    state = as_state(state)
    basis = _as_basis(basis)
    n = num_qubits(state)
    targets = list(targets)
    if len(targets) != basis.n_qubits or len(set(targets)) != len(targets):
        raise ContractViolation(f"targets {targets} do not match a {basis.n_qubits}-qubit basis")
    if any(t < 0 or t >= n for t in targets):
        raise ContractViolation(f"targets {targets} out of range for {n} qubits")
    psi = np.moveaxis(state.reshape((2,) * n), targets, list(range(len(targets))))
    psi = psi.reshape(1 << len(targets), -1)
    residuals = np.conj(np.array(basis.vectors)) @ psi
    probs = np.einsum("ij,ij->i", np.conj(residuals), residuals).real
    return probs, residuals


def _embed(vec: np.ndarray, residual: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    k = len(targets)
    full = np.multiply.outer(vec, residual).reshape((2,) * n)
    return np.moveaxis(full, list(range(k)), list(targets)).reshape(-1)


@dataclass(frozen=True)
class MeasurementResult:
    outcome_index: int
    probability: float
    post_state: np.ndarray
    label: str = ""


def measure_in_basis(state, projector_basis, targets: Sequence[int], rng: RngStream) -> MeasurementResult:
    """Projective measurement of ``targets`` with a Born-rule draw from ``rng``.

    The post-measurement state keeps all qubits, renormalized.
    """
    basis = _as_basis(projector_basis)
    probs, residuals = project(state, basis, targets)
    k = sample_index(probs, rng)
    n = num_qubits(as_state(state))
    post = _embed(basis.vectors[k], residuals[k] / np.sqrt(probs[k]), targets, n)
    return MeasurementResult(k, float(probs[k]), post, basis.labels[k])


def born_distribution(state, projector_basis, targets: Sequence[int]):
    """Exact outcome probabilities as a :class:`~ctcsim.stats.Histogram`."""
    basis = _as_basis(projector_basis)
    probs, _ = project(state, basis, targets)
    return Histogram.exact(basis.labels, probs)


def product_state(*factors) -> np.ndarray:
    return tensor_all(*[as_state(f) for f in factors])

