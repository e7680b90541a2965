"""Twirling maps as explicit matrices on vectorized PTMs, beta tensors and gamma bounds.

A superoperator with PTM ``R`` is vectorized by column stacking,
``vec(R) = R.reshape(-1, order="F")``.  The conjugation ``N -> A o N o B``
then has matrix ``kron(R_B.T, R_A)``, so

* the ideal twirl is ``sum_g p_g kron(R_w(g).T, R_w(g).T)``,
* the physical twirl is ``sum_g p_g kron(R_phi(g).T, R_phi*(g))``.

The beta tensor of a unitary ensemble is ``beta[i, j, k, l] = E u_ik u_jl``
with ``u(g) = R_w(g)``; it acts on alpha matrices by
``alpha'[k, l] = sum_ij alpha[i, j] beta[i, j, k, l]``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diamond import diamond_norm
from .gates import clifford_group
from .noise import resolve
from .superops import (
    Superoperator,
    inverse,
    is_cptp_batch,
    n_qubits_of,
    paulis_for_dim,
)

PROB_TOL = 1e-12
UNITARY_TOL = 1e-10
DESIGN_TOL = 1e-9
TRIVIAL_GAMMA = 2.0


class EnsembleError(ValueError):
    pass


class HypothesisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GateElement:
    probability: float
    ideal: Superoperator
    impl: Superoperator
    inverting: Superoperator
    unitary: np.ndarray | None = field(default=None, repr=False)
    label: str = ""


def unitary_ptms(unitaries: np.ndarray) -> np.ndarray:
    """Batched PTMs of unitary channels, shape ``(G, d*d, d*d)``."""
    U = np.asarray(unitaries, dtype=complex)
    d = U.shape[-1]
    P = paulis_for_dim(d)
    # A[g, i] = U P_i U^dag
    A = U[:, None] @ P[None] @ U.conj().transpose(0, 2, 1)[:, None]
    PT = P.transpose(0, 2, 1).reshape(d * d, d * d)
    ptm = np.einsum("gif,kf->gki", A.reshape(len(U), d * d, d * d), PT)
    return ptm.real / d


class GateEnsemble:
    """A finite gate ensemble with ideal, implemented and inverting maps."""

    def __init__(self, elements: Sequence[GateElement], validate: bool = True):
        if not elements:
            raise EnsembleError("ensemble has no elements")
        self.elements = tuple(elements)
        self.dim = self.elements[0].ideal.dim
        self.probabilities = np.array([e.probability for e in self.elements], dtype=float)
        self.probabilities.setflags(write=False)
        self.ideal_ptms = self._stack("ideal")
        self.impl_ptms = self._stack("impl")
        self.inverting_ptms = self._stack("inverting")
        if validate:
            self.validate()

    def _stack(self, name: str) -> np.ndarray:
        arr = np.stack([getattr(e, name).ptm for e in self.elements])
        arr.setflags(write=False)
        return arr

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> GateElement:
        return self.elements[i]

    def validate(self) -> None:
        p = self.probabilities
        if np.any(p <= 0) or np.any(p > 1 + PROB_TOL):
            raise EnsembleError("probabilities must lie in (0, 1]")
        if abs(p.sum() - 1) > PROB_TOL:
            raise EnsembleError(f"probabilities sum to {p.sum():.15g}, expected 1")
        D = self.dim**2
        for idx, e in enumerate(self.elements):
            for name in ("impl", "inverting"):
                if getattr(e, name).dim != self.dim:
                    raise EnsembleError(f"element {idx}: {name} has the wrong dimension")
        ortho = np.einsum("gki,gkj->gij", self.ideal_ptms, self.ideal_ptms) - np.eye(D)
        bad = np.flatnonzero(np.max(np.abs(ortho), axis=(1, 2)) > UNITARY_TOL)
        if bad.size:
            raise EnsembleError(f"element {bad[0]}: ideal map is not a unitary channel")
        for name in ("impl", "inverting"):
            ptms = getattr(self, f"{name}_ptms")
            uniq, first = np.unique(ptms.reshape(len(ptms), -1), axis=0, return_index=True)
            ok = is_cptp_batch(uniq.reshape(-1, D, D))
            if not ok.all():
                raise EnsembleError(f"element {first[~ok][0]}: {name} map is not a quantum channel")

    def averaged_inverting(self) -> Superoperator:
        return Superoperator(np.einsum("g,gij->ij", self.probabilities, self.inverting_ptms))

    def with_probabilities(self, probs) -> "GateEnsemble":
        probs = np.asarray(probs, dtype=float)
        return GateEnsemble(
            [
                GateElement(float(p), e.ideal, e.impl, e.inverting, e.unitary, e.label)
                for p, e in zip(probs, self.elements)
            ]
        )


def make_ensemble(
    unitaries: Sequence[np.ndarray],
    probabilities=None,
    noise=None,
    labels: Sequence[str] | None = None,
    validate: bool = True,
) -> GateEnsemble:
    """Ensemble of unitary gates with noise applied according to ``noise``."""
    U = np.asarray(unitaries, dtype=complex)
    n = len(U)
    probs = np.full(n, 1.0 / n) if probabilities is None else np.asarray(probabilities, dtype=float)
    if probs.shape != (n,):
        raise EnsembleError("one probability per gate is required")
    ptms = unitary_ptms(U)
    elements = []
    cache: dict[tuple[int, bytes], tuple[Superoperator, Superoperator]] = {}
    for i in range(n):
        omega = Superoperator(ptms[i])
        model = resolve(noise, i)
        key = (id(model), ptms[i].tobytes())
        if key not in cache:
            cache[key] = model.implement(omega)
        phi, phi_star = cache[key]
        label = labels[i] if labels is not None else str(i)
        elements.append(GateElement(float(probs[i]), omega, phi, phi_star, U[i], label))
    return GateEnsemble(elements, validate=validate)


# ---------------------------------------------------------------------------
# Twirling matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TwirlingMatrix:
    dim: int
    mat: np.ndarray = field(repr=False)
    kind: str = ""

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def apply(self, t: Superoperator) -> Superoperator:
        return Superoperator(unvec(self.mat @ vec(t.ptm)))

    def __matmul__(self, other: "TwirlingMatrix") -> "TwirlingMatrix":
        return TwirlingMatrix(self.dim, self.mat @ other.mat, f"{self.kind}*{other.kind}")

    def __sub__(self, other: "TwirlingMatrix") -> "TwirlingMatrix":
        return TwirlingMatrix(self.dim, self.mat - other.mat, f"{self.kind}-{other.kind}")


def vec(ptm: np.ndarray) -> np.ndarray:
    return np.asarray(ptm).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    D = int(round(np.sqrt(v.shape[0])))
    return np.asarray(v).reshape(D, D, order="F")


def _conjugation_sum(p: np.ndarray, right: np.ndarray, left: np.ndarray) -> np.ndarray:
    """``sum_g p_g kron(right_g.T, left_g)`` without forming the Kronecker products."""
    G, D, _ = right.shape
    X = (right.transpose(0, 2, 1) * p[:, None, None]).reshape(G, D * D)
    M = X.T @ left.reshape(G, D * D)
    return M.reshape(D, D, D, D).transpose(0, 2, 1, 3).reshape(D * D, D * D)


def ideal_twirl(e: GateEnsemble) -> TwirlingMatrix:
    W = e.ideal_ptms
    return TwirlingMatrix(e.dim, _conjugation_sum(e.probabilities, W, W.transpose(0, 2, 1)), "ideal")


def physical_twirl(e: GateEnsemble) -> TwirlingMatrix:
    return TwirlingMatrix(
        e.dim, _conjugation_sum(e.probabilities, e.impl_ptms, e.inverting_ptms), "physical"
    )


def gauge_corrected_twirl(e: GateEnsemble, u: Superoperator, v: Superoperator) -> TwirlingMatrix:
    """Physical twirl of ``(u o phi o u^-1, v o phi* o v^-1)``."""
    u_inv, v_inv = inverse(u).ptm, inverse(v).ptm
    impl = u.ptm @ e.impl_ptms @ u_inv
    inv = v.ptm @ e.inverting_ptms @ v_inv
    return TwirlingMatrix(e.dim, _conjugation_sum(e.probabilities, impl, inv), "gauge-corrected")


def gauge_kappa(u: Superoperator, v: Superoperator) -> float:
    """Product of the diamond norms of ``u``, ``u^-1``, ``v`` and ``v^-1``."""
    out = 1.0
    for t in (u, inverse(u), v, inverse(v)):
        out *= diamond_norm(t).upper
    return out


def data_processing_bound(e: GateEnsemble) -> float:
    """``sum_g p_g ||phi*(g)||_dia ||phi(g)||_dia``; equals 1 for channel ensembles."""
    cache: dict[bytes, float] = {}

    def dn(t: Superoperator) -> float:
        key = t.ptm.tobytes()
        if key not in cache:
            cache[key] = diamond_norm(t).upper
        return cache[key]

    return float(sum(el.probability * dn(el.inverting) * dn(el.impl) for el in e.elements))


# ---------------------------------------------------------------------------
# Beta tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BetaTensor:
    dim: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def matrix(self) -> np.ndarray:
        """Rows indexed by ``(i, j)``, columns by ``(k, l)``."""
        D = self.dim**2
        return self.values.reshape(D * D, D * D)

    def __sub__(self, other: "BetaTensor") -> "BetaTensor":
        return BetaTensor(self.dim, self.values - other.values)


def beta_tensor(e: GateEnsemble) -> BetaTensor:
    u = e.ideal_ptms
    G, D, _ = u.shape
    ortho = np.max(np.abs(np.einsum("gik,gjk->gij", u, u) - np.eye(D)))
    if ortho > UNITARY_TOL:
        raise EnsembleError("beta tensor requires unitary ideal gates")
    X = (u * e.probabilities[:, None, None]).reshape(G, D * D)
    B = (X.T @ u.reshape(G, D * D)).reshape(D, D, D, D)  # [i, k, j, l]
    return BetaTensor(e.dim, B.transpose(0, 2, 1, 3))


@functools.lru_cache(maxsize=None)
def _haar_beta(d: int) -> np.ndarray:
    D = d * d
    b = np.zeros((D, D, D, D))
    b[0, 0, 0, 0] = 1.0
    idx = np.arange(1, D)
    b[idx[:, None], idx[:, None], idx[None, :], idx[None, :]] = 1.0 / (D - 1)
    b.setflags(write=False)
    return b


def haar_beta(d: int) -> BetaTensor:
    n_qubits_of(d)
    return BetaTensor(d, _haar_beta(d))


def _symplectic(d: int) -> np.ndarray:
    """Binary (x | z) vectors of the Pauli strings in basis order."""
    n = n_qubits_of(d)
    xz = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
    rows = []
    for idx in range(d * d):
        digits = [(idx // 4 ** (n - 1 - q)) % 4 for q in range(n)]
        rows.append([xz[g][0] for g in digits] + [xz[g][1] for g in digits])
    return np.array(rows, dtype=int)


def pauli_beta(d: int) -> BetaTensor:
    """Beta tensor of the uniform Pauli ensemble from symplectic commutation signs."""
    b = _symplectic(d)
    n = b.shape[1] // 2
    x, z = b[:, :n], b[:, n:]
    comm = (x @ z.T + z @ x.T) % 2  # comm[k, i] = <b_k, b_i>_S
    sign = 1 - 2 * comm
    avg = np.einsum("ki,kj->ij", sign, sign) / (d * d)  # E_k (-1)^<b_k, b_i + b_j>
    D = d * d
    out = np.zeros((D, D, D, D))
    i, j = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
    out[i, j, i, j] = avg
    return BetaTensor(d, out)


@functools.lru_cache(maxsize=None)
def _alpha_to_vec(d: int) -> np.ndarray:
    """Columns are ``vec(PTM of X -> P_i X P_j)`` for ``(i, j)`` in row-major order."""
    P = paulis_for_dim(d)
    D = d * d
    tr = np.einsum("kab,ibc,mcd,jda->kimj", P, P, P, P, optimize=True) / d
    # vec index m*D + k, column index i*D + j
    Phi = tr.transpose(2, 0, 1, 3).reshape(D * D, D * D)
    Phi.setflags(write=False)
    return Phi


def twirl_from_beta(b: BetaTensor, kind: str = "beta") -> TwirlingMatrix:
    Phi = _alpha_to_vec(b.dim)
    D2 = b.dim**2
    mat = Phi @ b.matrix.T @ Phi.conj().T / D2
    if np.max(np.abs(mat.imag)) > 1e-10:
        raise ValueError("beta tensor does not define a real twirling map")
    return TwirlingMatrix(b.dim, mat.real, kind)


def haar_twirl(d: int) -> TwirlingMatrix:
    return twirl_from_beta(haar_beta(d), "haar")


def pauli_twirl(d: int) -> TwirlingMatrix:
    return twirl_from_beta(pauli_beta(d), "pauli")


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

FULL, V, V0 = "full", "V", "V0"


@dataclass(frozen=True, eq=False)
class SubspaceProjector:
    dim: int
    which: str
    basis: np.ndarray = field(repr=False)

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def restrict(self, mat: np.ndarray) -> np.ndarray:
        return self.basis.T @ mat @ self.basis


@functools.lru_cache(maxsize=None)
def _subspace(d: int, which: str) -> SubspaceProjector:
    D = d * d
    # entry (0, i) of the PTM sits at vec index i*D
    if which == FULL:
        drop = set()
    elif which == V:
        drop = {i * D for i in range(1, D)}
    elif which == V0:
        drop = {i * D for i in range(D)}
    else:
        raise ValueError(f"unknown subspace {which!r}; expected one of full, V, V0")
    keep = [k for k in range(D * D) if k not in drop]
    basis = np.eye(D * D)[:, keep]
    basis.setflags(write=False)
    return SubspaceProjector(d, which, basis)


def subspace(d: int, which: str = V0) -> SubspaceProjector:
    """Coordinate subspace of vectorized PTMs: full space, V(d) or V0(d)."""
    n_qubits_of(d)
    return _subspace(d, which)


def _as_subspace(d: int, s) -> SubspaceProjector:
    return s if isinstance(s, SubspaceProjector) else subspace(d, s)


# ---------------------------------------------------------------------------
# Gamma: exact SO distance and bounds
# ---------------------------------------------------------------------------


def twirl_distance_so(lam: TwirlingMatrix, sub=V0) -> float:
    """Induced SO norm of ``lam - haar`` restricted to a subspace."""
    s = _as_subspace(lam.dim, sub)
    diff = s.restrict(lam.mat - haar_twirl(lam.dim).mat)
    return float(np.linalg.norm(diff, 2))


def gamma_exact_so(e: GateEnsemble, sub=V0) -> float:
    return twirl_distance_so(ideal_twirl(e), sub)


def is_two_design(e: GateEnsemble) -> bool:
    return gamma_exact_so(e, FULL) < DESIGN_TOL


def gamma_bound_l2(b: BetaTensor) -> float:
    D = (b - haar_beta(b.dim)).matrix  # rows (i, j), columns (k, l)
    return float(np.sqrt(np.sum(np.abs(D.T @ D))))


def right_pauli_invariant(b: BetaTensor, tol: float = 1e-10) -> bool:
    """``Lambda(mu) = Lambda(mu) o Lambda(mu_P)``: beta vanishes off the ``i = j`` rows."""
    D = b.dim**2
    off = ~np.eye(D, dtype=bool)
    return bool(np.max(np.abs(b.values[off]), initial=0.0) <= tol)


def gamma_bound_induced_l1(b: BetaTensor, check: bool = True) -> float:
    if check and not right_pauli_invariant(b):
        raise HypothesisError(
            "induced-l1 bound requires right Pauli invariance Lambda(mu) = Lambda(mu) o Lambda(mu_P)"
        )
    diff = (b - haar_beta(b.dim)).values
    D = b.dim**2
    diag = diff[np.arange(D), np.arange(D)]  # [i, k, l]
    return float(np.max(np.sum(np.abs(diag), axis=(1, 2))))


def _ptm_key(ptm: np.ndarray) -> bytes:
    return np.rint(ptm * 1e8).astype(np.int64).tobytes()


def _weights_by_gate(ptms: np.ndarray, probs: np.ndarray) -> dict[bytes, float]:
    out: dict[bytes, float] = {}
    for ptm, p in zip(ptms, probs):
        k = _ptm_key(ptm)
        out[k] = out.get(k, 0.0) + float(p)
    return out


def gamma_bound_convex(e: GateEnsemble, design: GateEnsemble, check_design: bool = True) -> float:
    """``2 (1 - m_S(mu) / M_S(nu))`` with ``S`` the support of the design ``nu``."""
    if design.dim != e.dim:
        raise EnsembleError("design and ensemble dimensions differ")
    if check_design and not is_two_design(design):
        raise HypothesisError("the reference ensemble is not a unitary 2-design")
    mu = _weights_by_gate(e.ideal_ptms, e.probabilities)
    nu = _weights_by_gate(design.ideal_ptms, design.probabilities)
    m_s = np.inf
    for key in nu:
        w = mu.get(key)
        if w is None:
            raise HypothesisError("design support is not contained in the ensemble support")
        m_s = min(m_s, w)
    M_s = max(nu.values())
    return float(2.0 * (1.0 - m_s / M_s))


@functools.lru_cache(maxsize=None)
def clifford_design(d: int) -> GateEnsemble:
    return make_ensemble(clifford_group(d))


@dataclass(frozen=True)
class GammaBounds:
    """Gamma values with the norm each one refers to.

    ``so_exact`` is the induced SO distance on the chosen subspace.  The
    trace-norm chain multiplies it by ``d**1.5`` and the diamond chain by ``d**2``.
    ``l2``, ``induced_l1`` and ``convex`` bound the induced diamond distance.
    Bounds whose hypotheses fail are None with a note.
    """

    dim: int
    subspace: str
    so_exact: float
    tr_chain: float
    diamond_chain: float
    l2: float
    induced_l1: float | None
    convex: float | None
    notes: dict = field(default_factory=dict)

    def candidates(self) -> dict[str, float]:
        # trivial first so ties at 2 are labelled as such
        out = {
            "trivial": TRIVIAL_GAMMA,
            "tr_chain": self.tr_chain,
            "diamond_chain": self.diamond_chain,
            "l2": self.l2,
            "induced_l1": TRIVIAL_GAMMA if self.induced_l1 is None else self.induced_l1,
            "convex": TRIVIAL_GAMMA if self.convex is None else self.convex,
        }
        return out

    @property
    def smallest(self) -> float:
        return min(self.candidates().values())

    @property
    def smallest_label(self) -> str:
        c = self.candidates()
        return min(c, key=c.get)

    def as_dict(self) -> dict:
        return {
            "subspace": self.subspace,
            "so_exact": self.so_exact,
            "tr_chain": self.tr_chain,
            "diamond_chain": self.diamond_chain,
            "l2": self.l2,
            "induced_l1": self.induced_l1,
            "convex": self.convex,
            "smallest": self.smallest,
            "smallest_label": self.smallest_label,
            "notes": dict(self.notes),
        }


def gamma_bounds(e: GateEnsemble, design: GateEnsemble | str | None = "auto", sub=V0) -> GammaBounds:
    """All gamma values for ``e``.  ``design="auto"`` uses the Clifford group when d <= 4."""
    d = e.dim
    notes = {}
    so = gamma_exact_so(e, sub)
    b = beta_tensor(e)
    l2 = gamma_bound_l2(b)
    try:
        l1 = gamma_bound_induced_l1(b)
    except HypothesisError as exc:
        l1, notes["induced_l1"] = None, str(exc)
    if isinstance(design, str) and design == "auto":
        design = clifford_design(d) if d <= 4 else None
    convex = None
    if design is None:
        notes["convex"] = "no reference 2-design"
    else:
        try:
            convex = gamma_bound_convex(e, design, check_design=False)
        except HypothesisError as exc:
            notes["convex"] = str(exc)
    s = _as_subspace(d, sub).which
    return GammaBounds(d, s, so, d**1.5 * so, d**2 * so, l2, l1, convex, notes)


__all__ = [
    "GateElement",
    "GateEnsemble",
    "EnsembleError",
    "HypothesisError",
    "make_ensemble",
    "unitary_ptms",
    "TwirlingMatrix",
    "vec",
    "unvec",
    "ideal_twirl",
    "physical_twirl",
    "gauge_corrected_twirl",
    "gauge_kappa",
    "data_processing_bound",
    "BetaTensor",
    "beta_tensor",
    "haar_beta",
    "pauli_beta",
    "twirl_from_beta",
    "haar_twirl",
    "pauli_twirl",
    "SubspaceProjector",
    "subspace",
    "FULL",
    "V",
    "V0",
    "twirl_distance_so",
    "gamma_exact_so",
    "is_two_design",
    "gamma_bound_l2",
    "right_pauli_invariant",
    "gamma_bound_induced_l1",
    "gamma_bound_convex",
    "clifford_design",
    "GammaBounds",
    "gamma_bounds",
]
