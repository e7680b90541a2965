"""Unitary gate sets: Paulis, Clifford groups and a few standard gates."""
from __future__ import annotations

import functools
import itertools

import numpy as np

from .superops import DimensionError, n_qubits_of, paulis_for_dim

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
T = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

_MAX_CLIFFORD_QUBITS = 2


def embed(u: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit gate ``u`` acting on ``qubit`` (0 = most significant)."""
    ops = [np.eye(2)] * n_qubits
    ops[qubit] = u
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def _phase_key(u: np.ndarray) -> bytes:
    # fix the global phase by the first entry of non-negligible modulus
    flat = u.reshape(-1)
    lead = flat[np.argmax(np.abs(flat) > 1e-6)]
    w = flat * (abs(lead) / lead)
    return np.rint(np.concatenate([w.real, w.imag]) * 1e6).astype(np.int64).tobytes()


def _generators(n_qubits: int) -> list[np.ndarray]:
    gens = []
    for q in range(n_qubits):
        gens.append(embed(H, q, n_qubits))
        gens.append(embed(S, q, n_qubits))
    if n_qubits == 2:
        gens.append(CNOT)
    return gens


@functools.lru_cache(maxsize=None)
def _clifford_group(n_qubits: int) -> tuple[np.ndarray, ...]:
    gens = _generators(n_qubits)
    d = 2**n_qubits
    identity = np.eye(d, dtype=complex)
    seen = {_phase_key(identity)}
    group = [identity]
    frontier = [identity]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = _phase_key(w)
                if key not in seen:
                    seen.add(key)
                    group.append(w)
                    nxt.append(w)
        frontier = nxt
    for u in group:
        u.setflags(write=False)
    return tuple(group)


def clifford_group(d: int) -> list[np.ndarray]:
    """Representatives of the Clifford group modulo phase (24 for d=2, 11520 for d=4).

    The identity comes first; the remaining order is the breadth-first
    order of the generator word length, so it is deterministic.
    """
    n = n_qubits_of(d)
    if n > _MAX_CLIFFORD_QUBITS:
        raise DimensionError(f"Clifford enumeration is limited to {_MAX_CLIFFORD_QUBITS} qubits")
    return list(_clifford_group(n))


def pauli_group(d: int) -> list[np.ndarray]:
    """The ``d**2`` Pauli strings as unitaries, in basis order."""
    return list(paulis_for_dim(d))


def order_mod_phase(u: np.ndarray, max_order: int = 64) -> int:
    """Smallest ``k >= 1`` with ``u**k`` proportional to the identity."""
    d = u.shape[0]
    w = np.eye(d, dtype=complex)
    for k in range(1, max_order + 1):
        w = u @ w
        if abs(abs(np.trace(w)) - d) < 1e-9:
            return k
    raise ValueError(f"gate has no finite order up to {max_order} (modulo phase)")


def is_pauli_up_to_phase(u: np.ndarray, tol: float = 1e-9) -> int | None:
    """Index of the Pauli string proportional to ``u``, or None."""
    d = u.shape[0]
    for i, p in enumerate(paulis_for_dim(d)):
        if abs(abs(np.trace(p @ u)) - d) < tol:
            return i
    return None


def random_layer(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar single-qubit gates on every qubit followed by a CZ ladder."""
    from .superops import random_unitary

    u = np.ones((1, 1), dtype=complex)
    for _ in range(n_qubits):
        u = np.kron(u, random_unitary(2, rng))
    ent = np.eye(2**n_qubits, dtype=complex)
    for q in range(n_qubits - 1):
        ent = np.kron(np.kron(np.eye(2**q), CZ), np.eye(2 ** (n_qubits - q - 2))) @ ent
    return ent @ u


def product_tuples(items: list, k: int):
    return itertools.product(range(len(items)), repeat=k)
