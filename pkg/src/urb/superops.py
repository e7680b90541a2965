"""Hermitian-matrix and superoperator algebra in the normalized Pauli basis.

Conventions used throughout the package:

* Pauli strings are ordered lexicographically over ``I, X, Y, Z`` with the
  first qubit most significant, so element 0 is always the identity.
* A superoperator ``T`` is stored as its Pauli transfer matrix (PTM)
  ``R[k, i] = tr[P_k T(P_i)] / d``.  The normalized Paulis ``P / sqrt(d)`` are
  orthonormal under the Hilbert-Schmidt inner product, so composition is a
  matrix product, the adjoint is the transpose and the SO norm is the
  Frobenius norm of ``R``.
* The Choi matrix is ``J = sum_ab T(|a><b|) (x) |a><b|`` (output factor first).
* The alpha matrix satisfies ``T = sum_ij alpha[i, j] P_i . P_j`` where
  ``P_i . P_j`` is the map ``X -> P_i X P_j``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
MAX_QUBITS = 4

_PAULI_1Q = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class DimensionError(ValueError):
    """Raised when operands live on incompatible (or unsupported) dimensions."""


def n_qubits_of(d: int) -> int:
    n = int(round(np.log2(d)))
    if d < 2 or 2**n != d:
        raise DimensionError(f"dimension {d} is not a power of two")
    return n


@functools.lru_cache(maxsize=None)
def _pauli_basis(n_qubits: int) -> np.ndarray:
    mats = []
    for labels in itertools.product(range(4), repeat=n_qubits):
        m = np.ones((1, 1), dtype=complex)
        for lab in labels:
            m = np.kron(m, _PAULI_1Q[lab])
        mats.append(m)
    out = np.array(mats)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PauliBasis:
    n_qubits: int
    elements: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def labels(self) -> list[str]:
        return ["".join(s) for s in itertools.product("IXYZ", repeat=self.n_qubits)]

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


def pauli_basis(n_qubits: int) -> PauliBasis:
    """Return the ``4**n_qubits`` Pauli strings, identity first."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise DimensionError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    return PauliBasis(n_qubits, _pauli_basis(n_qubits))


def paulis_for_dim(d: int) -> np.ndarray:
    return pauli_basis(n_qubits_of(d)).elements


@functools.lru_cache(maxsize=None)
def _vec_basis(d: int) -> np.ndarray:
    # columns are column-stacked vec(P_i)
    P = paulis_for_dim(d)
    B = np.stack([p.T.reshape(-1) for p in P], axis=1)
    B.setflags(write=False)
    return B


# ---------------------------------------------------------------------------
# Hermitian operators, states and POVM elements
# ---------------------------------------------------------------------------


def as_hermitian(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise ValueError("matrix is not Hermitian")
    return (h + h.conj().T) / 2


def as_density_matrix(rho, tol: float = STATE_TOL) -> np.ndarray:
    rho = as_hermitian(rho)
    if abs(np.trace(rho).real - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def as_povm_element(m, tol: float = STATE_TOL) -> np.ndarray:
    m = as_hermitian(m)
    ev = np.linalg.eigvalsh(m)
    if ev[0] < -tol or ev[-1] > 1 + tol:
        raise ValueError(
            f"POVM element eigenvalues must lie in [0, 1]; got [{ev[0]:.3g}, {ev[-1]:.3g}]"
        )
    return m


def trace_norm(h) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_hermitian(h, tol=1e-9)))))


def frobenius_norm(h) -> float:
    return float(np.linalg.norm(np.asarray(h), "fro"))


def spectral_norm(h) -> float:
    ev = np.linalg.eigvalsh(as_hermitian(h, tol=1e-9))
    return float(np.max(np.abs(ev)))


def pauli_coefficients(h) -> np.ndarray:
    """Real coefficients ``c_i = tr[P_i h] / d`` of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    P = paulis_for_dim(h.shape[0])
    return np.einsum("kab,ba->k", P, h).real / h.shape[0]


def from_pauli_coefficients(c, d: int) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(c, dtype=float), paulis_for_dim(d))


# ---------------------------------------------------------------------------
# Superoperators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A Hermiticity-preserving linear map stored as a real PTM."""

    ptm: np.ndarray

    def __post_init__(self):
        ptm = np.array(self.ptm)
        if np.iscomplexobj(ptm):
            if np.max(np.abs(ptm.imag), initial=0.0) > HERMITIAN_TOL:
                raise ValueError("PTM has imaginary entries; map is not Hermiticity-preserving")
            ptm = ptm.real
        ptm = ptm.astype(float)
        D = ptm.shape[0]
        if ptm.ndim != 2 or ptm.shape != (D, D):
            raise DimensionError(f"PTM must be square, got shape {ptm.shape}")
        d = int(round(np.sqrt(D)))
        if d * d != D:
            raise DimensionError(f"PTM size {D} is not a square")
        n_qubits_of(d)
        ptm.setflags(write=False)
        object.__setattr__(self, "ptm", ptm)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.ptm.shape[0])))

    def is_trace_preserving(self, tol: float = STATE_TOL) -> bool:
        target = np.zeros(self.ptm.shape[0])
        target[0] = 1
        return bool(np.max(np.abs(self.ptm[0] - target)) <= tol)

    def is_unital(self, tol: float = STATE_TOL) -> bool:
        target = np.zeros(self.ptm.shape[0])
        target[0] = 1
        return bool(np.max(np.abs(self.ptm[:, 0] - target)) <= tol)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return compose(self, other)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _check_dims(self, other)
        return Superoperator(self.ptm + other.ptm)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        _check_dims(self, other)
        return Superoperator(self.ptm - other.ptm)

    def __mul__(self, scalar: float) -> "Superoperator":
        return Superoperator(float(scalar) * self.ptm)

    __rmul__ = __mul__

    def __neg__(self) -> "Superoperator":
        return Superoperator(-self.ptm)

    def __call__(self, h) -> np.ndarray:
        return apply(self, h)

    def allclose(self, other: "Superoperator", atol: float = 1e-10) -> bool:
        return self.ptm.shape == other.ptm.shape and np.allclose(self.ptm, other.ptm, atol=atol, rtol=0)

    def __repr__(self) -> str:
        return f"Superoperator(dim={self.dim})"


def _check_dims(a: Superoperator, b: Superoperator) -> None:
    if a.ptm.shape != b.ptm.shape:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def superop_matrix(t: Superoperator) -> np.ndarray:
    """Column-stacking superoperator matrix ``S`` with ``vec(T(X)) = S vec(X)``."""
    d = t.dim
    B = _vec_basis(d)
    return B @ t.ptm @ B.conj().T / d


def ptm_from_superop_matrix(S: np.ndarray) -> Superoperator:
    d = int(round(np.sqrt(S.shape[0])))
    B = _vec_basis(d)
    return Superoperator(B.conj().T @ S @ B / d)


def ptm_from_kraus(kraus_ops: Sequence[np.ndarray], tol: float = STATE_TOL) -> Superoperator:
    """PTM of ``X -> sum_k A_k X A_k^dagger``; the Kraus set must be complete."""
    ops = [np.asarray(a, dtype=complex) for a in kraus_ops]
    d = ops[0].shape[0]
    completeness = sum(a.conj().T @ a for a in ops)
    if np.max(np.abs(completeness - np.eye(d))) > tol:
        raise ValueError("Kraus operators are not trace preserving (sum A^dag A != I)")
    return ptm_from_kraus_unchecked(ops)


def ptm_from_kraus_unchecked(kraus_ops: Sequence[np.ndarray]) -> Superoperator:
    ops = [np.asarray(a, dtype=complex) for a in kraus_ops]
    S = sum(np.kron(a.conj(), a) for a in ops)
    return ptm_from_superop_matrix(S)


def unitary_channel(u) -> Superoperator:
    return ptm_from_kraus([u])


def identity_channel(d: int) -> Superoperator:
    return Superoperator(np.eye(d * d))


def zero_map(d: int) -> Superoperator:
    return Superoperator(np.zeros((d * d, d * d)))


def depolarizing(q: float, d: int = 2) -> Superoperator:
    """``rho -> q rho + (1 - q) tr[rho] I/d``; PTM ``diag(1, q, ..., q)``."""
    ptm = np.full(d * d, float(q))
    ptm[0] = 1.0
    return Superoperator(np.diag(ptm))


def replacement(p: float, state) -> Superoperator:
    """``rho -> p rho + (1 - p) tr[rho] sigma``."""
    sigma = as_density_matrix(state)
    d = sigma.shape[0]
    ptm = p * np.eye(d * d)
    ptm[:, 0] += (1 - p) * pauli_coefficients(sigma) * d
    return Superoperator(ptm)


def replacement_channel(state) -> Superoperator:
    """The replacement channel ``rho -> tr[rho] sigma``."""
    return replacement(0.0, state)


def amplitude_damping(gamma: float) -> Superoperator:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return ptm_from_kraus([k0, k1])


def pauli_channel(probs) -> Superoperator:
    """Mixture of Pauli conjugations with the given probabilities (basis order)."""
    probs = np.asarray(probs, dtype=float)
    d = int(round(np.sqrt(len(probs))))
    P = paulis_for_dim(d)
    return ptm_from_kraus_unchecked([np.sqrt(max(p, 0.0)) * P[i] for i, p in enumerate(probs)])


def apply(t: Superoperator, h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.shape != (t.dim, t.dim):
        raise DimensionError(f"operator of shape {h.shape} does not match superoperator dim {t.dim}")
    return from_pauli_coefficients(t.ptm @ pauli_coefficients(h), t.dim) if _is_herm(h) else (
        (superop_matrix(t) @ h.T.reshape(-1)).reshape(t.dim, t.dim).T
    )


def _is_herm(h: np.ndarray) -> bool:
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= HERMITIAN_TOL)


def compose(a: Superoperator, b: Superoperator) -> Superoperator:
    """``a o b`` (apply ``b`` first)."""
    _check_dims(a, b)
    return Superoperator(a.ptm @ b.ptm)


def adjoint(t: Superoperator) -> Superoperator:
    return Superoperator(t.ptm.T)


def inverse(t: Superoperator, max_cond: float = 1e8) -> Superoperator:
    cond = np.linalg.cond(t.ptm)
    if not np.isfinite(cond) or cond > max_cond:
        raise np.linalg.LinAlgError(f"superoperator is singular (condition number {cond:.3g})")
    return Superoperator(np.linalg.inv(t.ptm))


def hs_inner(a, b) -> float:
    return float(np.real(np.trace(np.asarray(a).conj().T @ np.asarray(b))))


# ---------------------------------------------------------------------------
# Choi and alpha representations
# ---------------------------------------------------------------------------


def choi(t: Superoperator) -> np.ndarray:
    d = t.dim
    S = superop_matrix(t).reshape(d, d, d, d)
    # S[(c,r),(b,a)] with column stacking: vec index = col*d + row
    # T(|a><b|)[r, c] = S[c*d + r, b*d + a]
    J = np.einsum("crba->racb", S).reshape(d * d, d * d)
    return (J + J.conj().T) / 2


def superop_from_choi(J: np.ndarray) -> Superoperator:
    D = J.shape[0]
    d = int(round(np.sqrt(D)))
    S = np.einsum("racb->crba", np.asarray(J).reshape(d, d, d, d)).reshape(D, D)
    return ptm_from_superop_matrix(S)


def is_cptp(t: Superoperator, tol: float = STATE_TOL) -> bool:
    J = choi(t)
    d = t.dim
    if np.linalg.eigvalsh(J)[0] < -tol:
        return False
    return bool(np.max(np.abs(_partial_trace_out(J, d) - np.eye(d))) <= tol)


def choi_batch(ptms: np.ndarray) -> np.ndarray:
    """Choi matrices of a stack of PTMs: ``J = sum_ki R[k, i] P_k (x) P_i^T / d``."""
    R = np.asarray(ptms, dtype=float)
    D = R.shape[-1]
    d = int(round(np.sqrt(D)))
    P = paulis_for_dim(d)
    PT = P.transpose(0, 2, 1)
    J = np.einsum("gki,kab,icd->gacbd", R, P, PT, optimize=True).reshape(len(R), D, D) / d
    return (J + J.conj().transpose(0, 2, 1)) / 2


def is_cptp_batch(ptms: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """Vectorized ``is_cptp`` over a stack of PTMs."""
    R = np.asarray(ptms, dtype=float)
    e0 = np.zeros(R.shape[-1])
    e0[0] = 1
    tp = np.max(np.abs(R[:, 0, :] - e0), axis=1) <= tol
    cp = np.linalg.eigvalsh(choi_batch(R))[:, 0] >= -tol
    return tp & cp


def _partial_trace_out(J: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("rarb->ab", J.reshape(d, d, d, d))


def _omega_paulis(d: int) -> np.ndarray:
    # rows are (P_i (x) I)|Omega> = row-major flatten of P_i
    return paulis_for_dim(d).reshape(d * d, d * d)


def alpha_matrix(t: Superoperator) -> np.ndarray:
    """Coefficients ``alpha`` with ``T = sum_ij alpha_ij P_i . P_j`` (via the Choi matrix)."""
    d = t.dim
    V = _omega_paulis(d).T  # columns v_i
    return V.conj().T @ choi(t) @ V / d**2


def superop_from_alpha(alpha: np.ndarray) -> Superoperator:
    d = int(round(np.sqrt(alpha.shape[0])))
    V = _omega_paulis(d).T
    return superop_from_choi(V @ alpha @ V.conj().T)


# ---------------------------------------------------------------------------
# Norms on superoperators
# ---------------------------------------------------------------------------


def so_norm(t: Superoperator) -> float:
    return float(np.linalg.norm(t.ptm, "fro"))


def induced_frobenius_norm(t: Superoperator) -> float:
    return float(np.linalg.norm(t.ptm, 2))


@dataclass(frozen=True)
class TraceNormEstimate:
    """Multi-start lower bound on the induced trace norm."""

    value: float
    restarts: int
    converged: bool
    maximizer: np.ndarray = field(repr=False)

    def __float__(self) -> float:
        return self.value


def induced_trace_norm(
    t: Superoperator,
    restarts: int = 64,
    max_iter: int = 500,
    tol: float = 1e-12,
    seed: int = 0,
) -> TraceNormEstimate:
    """Maximize ``||T(psi psi^dag)||_1`` over pure states.

    The maximum over the Hermitian trace-norm ball is attained at a pure
    projector, so this is exact up to the non-convex search; the returned
    value is always a valid lower bound.
    """
    d = t.dim
    S = superop_matrix(t)
    Sadj = superop_matrix(adjoint(t))
    rng = np.random.default_rng(seed)

    def apply_batch(M, X):
        # column-stacking vec of each X[r] is X[r].T flattened
        out = (X.transpose(0, 2, 1).reshape(len(X), -1) @ M.T).reshape(len(X), d, d).transpose(0, 2, 1)
        return (out + out.conj().transpose(0, 2, 1)) / 2

    def evaluate(psi):
        w, v = np.linalg.eigh(apply_batch(S, np.einsum("ra,rb->rab", psi, psi.conj())))
        sgn = np.einsum("rab,rb,rcb->rac", v, np.sign(w), v.conj())
        return np.abs(w).sum(axis=1), sgn

    starts = np.zeros((restarts, d), dtype=complex)
    k = min(d, restarts)
    starts[:k] = np.eye(d, dtype=complex)[:k]
    z = rng.normal(size=(restarts - k, d)) + 1j * rng.normal(size=(restarts - k, d))
    starts[k:] = z / np.linalg.norm(z, axis=1, keepdims=True)

    psi = starts
    val, sgn = evaluate(psi)
    active = np.ones(restarts, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        # ascent step: top eigenvector direction of T^dag(sign), shifted to stay monotone
        G = apply_batch(Sadj, sgn[idx])
        shift = np.abs(np.linalg.eigvalsh(G)).max(axis=1) + 1.0
        new = np.einsum("rab,rb->ra", G, psi[idx]) + shift[:, None] * psi[idx]
        new /= np.linalg.norm(new, axis=1, keepdims=True)
        new_val, new_sgn = evaluate(new)
        overlap = np.einsum("ra,ra->r", psi[idx].conj(), new)
        phase = overlap / np.maximum(np.abs(overlap), 1e-300)
        step = np.linalg.norm(new - psi[idx] * phase[:, None], axis=1)
        worse = new_val < val[idx] - 1e-14
        upd = idx[~worse]
        psi[upd], val[upd], sgn[upd] = new[~worse], new_val[~worse], new_sgn[~worse]
        done = worse | (step < tol) | ((new_val - val[idx] <= tol) & (step < 1e-9))
        active[idx[done]] = False
    best = int(np.argmax(val))
    return TraceNormEstimate(float(val[best]), restarts, not active.any(), psi[best])


def pauli_channel_diamond(diag_alpha_diff) -> float:
    """Diamond norm of a difference of Pauli channels: l1 norm of the alpha diagonal."""
    a = np.asarray(diag_alpha_diff)
    if np.iscomplexobj(a):
        if np.abs(a.imag).max(initial=0.0) > HERMITIAN_TOL:
            raise ValueError("alpha diagonal of a Hermiticity-preserving map must be real")
        a = a.real
    return float(np.sum(np.abs(a.astype(float))))


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_kraus(d: int, rng: np.random.Generator, rank: int | None = None) -> list[np.ndarray]:
    rank = rank or d * d
    G = rng.normal(size=(rank, d, d)) + 1j * rng.normal(size=(rank, d, d))
    M = np.einsum("kba,kbc->ac", G.conj(), G)
    w, v = np.linalg.eigh(M)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    return [g @ inv_sqrt for g in G]


def random_channel(d: int, rng: np.random.Generator, rank: int | None = None) -> Superoperator:
    return ptm_from_kraus(random_kraus(d, rng, rank))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (z + z.conj().T) / 2


def random_density_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_superoperator(d: int, rng: np.random.Generator) -> Superoperator:
    return Superoperator(rng.normal(size=(d * d, d * d)))
