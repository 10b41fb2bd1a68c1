"""Dense complex linear algebra used by every other module.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Row indices are
output indices and column indices are input indices, so an operator with
upper (output) indices ``b, q`` and lower (input) indices ``a, p`` is stored
as ``u[(b, q), (a, p)]``. Multi-index rows/columns are flattened with the
left tensor factor as the high-order digit; for qubit registers this means
qubit 0 is the most significant bit of a basis index.

States are 1-D arrays of length ``2**n``.
"""
from __future__ import annotations

from functools import reduce
from typing import Literal

import numpy as np

DEFAULT_TOL = 1e-10

Position = Literal["first", "last"]


class ContractViolation(ValueError):
    """Raised when an operation's preconditions are not met."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def as_state(v) -> np.ndarray:
    s = np.asarray(v, dtype=np.complex128)
    if s.ndim != 1:
        raise ContractViolation(f"expected a 1-D state vector, got shape {s.shape}")
    return s


def num_qubits(v: np.ndarray) -> int:
    """Number of qubits for a state (or square operator) of dimension ``2**n``."""
    dim = v.shape[0]
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ContractViolation(f"dimension {dim} is not a power of two")
    return n


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the high-order (left) factor.

    Works for matrices and for state vectors alike.
    """
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def tensor_all(*factors) -> np.ndarray:
    return reduce(tensor_product, factors)


def dagger(a) -> np.ndarray:
    return np.conj(as_matrix(a)).T


def partial_trace(u, traced_subsystem_dim: int, position: Position = "last") -> np.ndarray:
    """Contract the matching input/output index pair of one tensor factor.

    ``u`` acts on ``K (x) T`` (``position="last"``) or ``T (x) K``
    (``position="first"``) with ``dim T == traced_subsystem_dim``; the result
    acts on ``K``. For the last position this is ``sum_p u[(b, p), (a, p)]``.

    Other positions are reached by conjugating ``u`` with an explicit
    permutation operator first (see :func:`permutation_operator`).
    """
    u = as_matrix(u)
    rows, cols = u.shape
    if rows != cols:
        raise ContractViolation(f"partial trace needs a square operator, got {u.shape}")
    d = int(traced_subsystem_dim)
    if d < 1 or rows % d:
        raise ContractViolation(f"dimension {rows} is not divisible by traced dimension {d}")
    k = rows // d
    if position == "last":
        return np.einsum("bpap->ba", u.reshape(k, d, k, d))
    if position == "first":
        return np.einsum("pbpa->ba", u.reshape(d, k, d, k))
    raise ContractViolation(f"position must be 'first' or 'last', got {position!r}")


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a).ravel()))


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return frobenius(dagger(u) @ u - np.eye(u.shape[0])) <= tol


def is_normalized(v, tol: float = DEFAULT_TOL) -> bool:
    return abs(np.linalg.norm(v) - 1.0) <= tol


def normalize(v) -> np.ndarray:
    v = as_state(v)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ContractViolation("cannot normalize the zero vector")
    return v / norm


def equal_up_to_phase(a, b, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``a == c * b`` for some ``|c| == 1`` within Frobenius ``tol``.

    The phase is taken from the entry where ``b`` is largest in magnitude.
    A zero input only matches another zero input.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ContractViolation(f"shape mismatch: {a.shape} vs {b.shape}")
    na, nb = frobenius(a), frobenius(b)
    if na <= tol and nb <= tol:
        return True
    if na <= tol or nb <= tol:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ratio = a[idx] / b[idx]
    if ratio == 0:
        return False
    phase = ratio / abs(ratio)
    return frobenius(a - phase * b) <= tol


def permutation_operator(perm: list[int] | tuple[int, ...]) -> np.ndarray:
    """Unitary that moves qubit ``k`` of the input to position ``perm[k]``.

    ``P (q_0 (x) ... (x) q_{n-1})`` has ``q_k`` sitting at slot ``perm[k]``.
    """
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise ContractViolation(f"{perm} is not a permutation of range({n})")
    dim = 1 << n
    p = np.zeros((dim, dim), dtype=np.complex128)
    for src in range(dim):
        dst = 0
        for k in range(n):
            bit = (src >> (n - 1 - k)) & 1
            dst |= bit << (n - 1 - perm[k])
        p[dst, src] = 1.0
    return p


def swap_operator() -> np.ndarray:
    return permutation_operator([1, 0])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix (phase-fixed)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
