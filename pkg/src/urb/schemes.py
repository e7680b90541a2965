"""URB schemes: construction, exact decay, enumeration, Monte Carlo and quality.

A scheme bundles a gate ensemble with an initial state ``rho0``, a final
measurement ``m0``, an intermediate channel ``I`` and a POVM rule mapping a
gate-index sequence to a POVM element.  Operators are carried as normalized
Pauli coefficient vectors ``c`` with ``h = sum_k c_k P_k``, so that
``tr[M rho] = d * (c_M . c_rho)`` and a superoperator ``T`` acts on coefficients
by its PTM while its adjoint acts by the transpose.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diamond import diamond_norm
from .gates import clifford_group, is_pauli_up_to_phase, order_mod_phase, pauli_group
from .noise import NoiseModel, resolve
from .superops import (
    Superoperator,
    as_density_matrix,
    as_povm_element,
    from_pauli_coefficients,
    identity_channel,
    is_cptp,
    pauli_coefficients,
    paulis_for_dim,
    unitary_channel,
)
from .twirling import (
    GammaBounds,
    GateElement,
    GateEnsemble,
    gamma_bounds,
    make_ensemble,
    physical_twirl,
    unvec,
    vec,
)

ENUMERATION_BUDGET = 10**6
EPSILON_ENUMERATION_BUDGET = 2 * 10**5
EPSILON_SAMPLES = 4096
DEFAULT_M_CUTOFF = 8
PROB_RANGE_TOL = 1e-9
CHECK_SLACK = 1e-10
# the theorem bound drops far below double precision at large m
ROUNDOFF_SLACK = 1e-12


class ModelError(RuntimeError):
    """An outcome probability left [0, 1]; the POVM rule is invalid."""


class NotFactoredError(ValueError):
    pass


class BudgetExceededError(ValueError):
    pass


# ---------------------------------------------------------------- POVM rules
#
# A rule carries a per-sequence state that is advanced one gate at a time, so
# enumeration and sampling share prefixes.  States are batched along axis 0.


class PovmRule:
    kind = "abstract"
    factored = False

    def init(self, s: "URBScheme", n: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, s: "URBScheme", states: np.ndarray, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def coefficients(self, s: "URBScheme", states: np.ndarray) -> np.ndarray:
        """Pauli coefficients ``(n, d**2)`` of the POVM elements."""
        raise NotImplementedError

    def element(self, s: "URBScheme", seq: Sequence[int]) -> np.ndarray:
        st = self.init(s, 1)
        for g in seq:
            st = self.step(s, st, np.array([g]))
        return from_pauli_coefficients(self.coefficients(s, st)[0], s.dim)


class FactoredPovm(PovmRule):
    """``M0 . phi*(g1) o ... o phi*(gm) o I``."""

    kind = "factored"
    factored = True

    def init(self, s, n):
        return np.tile(s.m0_coeffs, (n, 1))

    def step(self, s, states, g):
        return np.einsum("nji,nj->ni", s.ensemble.inverting_ptms[g], states)

    def coefficients(self, s, states):
        return states @ s.intermediate.ptm


class _CompositeUnitaryPovm(PovmRule):
    """Rules that only need the ideal composite ``U_m ... U_1``."""

    def init(self, s, n):
        return np.tile(np.eye(s.dim, dtype=complex), (n, 1, 1))

    def step(self, s, states, g):
        return s.unitaries[g] @ states


class RecoveryPovm(_CompositeUnitaryPovm):
    """Group RB: ``phi(rec)^dag (M0)`` with ``rec`` the inverse of the composite.

    The recovery gate is looked up in the ensemble and implemented with its
    own noisy map.  Factoring triple: ``(M0, omega^dag, id)``.
    """

    kind = "recovery"

    def __init__(self, ensemble: GateEnsemble):
        self._index = {_unitary_key(u): i for i, u in enumerate(_stack_unitaries(ensemble))}

    def coefficients(self, s, states):
        out = np.empty((len(states), s.dim**2))
        for n, u in enumerate(states):
            idx = self._index.get(_unitary_key(u.conj().T))
            if idx is None:
                raise ModelError("recovery gate is not an element of the ensemble")
            out[n] = s.m0_coeffs @ s.ensemble.impl_ptms[idx]
        return out


class CyclePovm(_CompositeUnitaryPovm):
    """Cycle benchmarking: the composite is a Pauli, undone by a noisy Pauli."""

    kind = "cycle"

    def __init__(self, recovery_ptms: np.ndarray):
        self.recovery_ptms = np.asarray(recovery_ptms, dtype=float)

    def coefficients(self, s, states):
        out = np.empty((len(states), s.dim**2))
        for n, u in enumerate(states):
            idx = is_pauli_up_to_phase(u)
            if idx is None:
                raise ModelError("cycle composite is not a Pauli operator")
            out[n] = s.m0_coeffs @ self.recovery_ptms[idx]
        return out


class XebPovm(_CompositeUnitaryPovm):
    """Linear XEB: ``M = sum_x q(x) M_x`` with ``q(x) = |<x|U|0>|^2`` of the ideal circuit.

    Exactly factored with ``(|0><0|, omega^dag, D)`` where ``D`` is the
    dephasing map ``rho -> sum_x tr[M_x rho] |x><x|``.
    """

    kind = "xeb"
    factored = True

    def __init__(self, readout: Sequence[np.ndarray]):
        self.readout_coeffs = np.array([pauli_coefficients(m) for m in readout])

    def coefficients(self, s, states):
        q = np.abs(states[:, :, 0]) ** 2
        return q @ self.readout_coeffs


def _unitary_key(u: np.ndarray) -> bytes:
    from .gates import _phase_key

    return _phase_key(u)


def _stack_unitaries(e: GateEnsemble) -> np.ndarray:
    if any(el.unitary is None for el in e.elements):
        raise ValueError("this POVM rule needs the ideal unitary of every element")
    return np.stack([el.unitary for el in e.elements])


# ------------------------------------------------------------------ scheme


@dataclass(frozen=True, eq=False)
class URBScheme:
    ensemble: GateEnsemble
    m0: np.ndarray = field(repr=False)
    intermediate: Superoperator = field(repr=False)
    rho0: np.ndarray = field(repr=False)
    povm: PovmRule = field(default_factory=FactoredPovm)
    name: str = ""
    prefactor: float = 1.0
    offset: float = 0.0
    fidelity_license: str | None = None

    def __post_init__(self):
        d = self.ensemble.dim
        object.__setattr__(self, "m0", as_povm_element(self.m0))
        object.__setattr__(self, "rho0", as_density_matrix(self.rho0))
        if self.m0.shape != (d, d) or self.rho0.shape != (d, d) or self.intermediate.dim != d:
            raise ValueError("m0, rho0 and intermediate must match the ensemble dimension")
        if not is_cptp(self.intermediate):
            raise ValueError("intermediate map is not a quantum channel")

    @property
    def dim(self) -> int:
        return self.ensemble.dim

    @property
    def m0_coeffs(self) -> np.ndarray:
        return pauli_coefficients(self.m0)

    @property
    def rho0_coeffs(self) -> np.ndarray:
        return pauli_coefficients(self.rho0)

    @property
    def unitaries(self) -> np.ndarray:
        u = self.__dict__.get("_unitaries")
        if u is None:
            u = _stack_unitaries(self.ensemble)
            object.__setattr__(self, "_unitaries", u)
        return u

    def figure_of_merit(self, p_hat):
        """Scheme-specific rescaling, e.g. ``2**n p - 1`` for linear XEB."""
        return self.prefactor * np.asarray(p_hat) + self.offset

    def with_povm(self, povm: PovmRule) -> "URBScheme":
        return URBScheme(
            self.ensemble, self.m0, self.intermediate, self.rho0, povm,
            self.name, self.prefactor, self.offset, self.fidelity_license,
        )


def _ket0(d: int) -> np.ndarray:
    r = np.zeros((d, d), dtype=complex)
    r[0, 0] = 1
    return r


def _finish(
    ensemble: GateEnsemble,
    m0=None,
    rho0=None,
    intermediate=None,
    povm: PovmRule | None = None,
    **kw,
) -> URBScheme:
    d = ensemble.dim
    return URBScheme(
        ensemble,
        _ket0(d) if m0 is None else m0,
        identity_channel(d) if intermediate is None else intermediate,
        _ket0(d) if rho0 is None else rho0,
        FactoredPovm() if povm is None else povm,
        **kw,
    )


def _license_for(noise, design: bool) -> str | None:
    if not design:
        return None
    if noise is None or (isinstance(noise, NoiseModel) and noise.placement == "in-between"):
        return "in-between-2-design"
    return None


def build_scheme(unitaries, probabilities=None, noise=None, *, povm: str = "factored", **kw) -> URBScheme:
    """Generic scheme over an explicit gate list."""
    e = make_ensemble(unitaries, probabilities, noise)
    rule = RecoveryPovm(e) if povm == "recovery" else None
    if povm not in ("factored", "recovery"):
        raise ValueError(f"unknown POVM rule {povm!r}")
    return _finish(e, povm=rule, **kw)


def build_clifford_rb(d: int = 2, noise=None, *, povm: str = "factored", **kw) -> URBScheme:
    """Uniform Clifford RB.  ``povm="recovery"`` uses the noisy recovery gate."""
    kw.setdefault("name", f"clifford_rb_d{d}")
    kw.setdefault("fidelity_license", _license_for(noise, True))
    return build_scheme(clifford_group(d), None, noise, povm=povm, **kw)


def build_nonuniform_rb(weights, noise=None, *, d: int | None = None, **kw) -> URBScheme:
    """Clifford RB with non-uniform sampling weights (normalized here)."""
    w = np.asarray(weights, dtype=float)
    if d is None:
        d = {24: 2, 11520: 4}.get(len(w))
        if d is None:
            raise ValueError(f"{len(w)} weights match no Clifford group size")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    kw.setdefault("name", f"nonuniform_rb_d{d}")
    return build_scheme(clifford_group(d), w / w.sum(), noise, **kw)


def build_pauli_ensemble(d: int = 2, noise=None, **kw) -> URBScheme:
    kw.setdefault("name", f"pauli_d{d}")
    return build_scheme(pauli_group(d), None, noise, **kw)


def build_cycle_benchmarking(clifford_gate, noise=None, **kw) -> URBScheme:
    """Cycle benchmarking on composites ``P1 G P2 G ... Pk G`` with ``k`` the order of ``G``.

    Each composite is implemented as the composition of noisy primitives and
    the sequence is closed by a noisy recovery Pauli.
    """
    G = np.asarray(clifford_gate, dtype=complex)
    d = G.shape[0]
    k = order_mod_phase(G)
    paulis = paulis_for_dim(d)
    if noise is not None and not isinstance(noise, NoiseModel):
        raise ValueError("cycle benchmarking takes one gate-independent noise model")
    model = resolve(noise, 0)

    def impl(u):
        omega = unitary_channel(u)
        return (omega, Superoperator(omega.ptm.T)) if model.is_noiseless else model.implement(omega)

    g_phi, g_star = impl(G)
    p_impl = [impl(p) for p in paulis]
    D = d * d
    elements = []
    for idx in np.ndindex(*([D] * k)):
        u = np.eye(d, dtype=complex)
        phi = np.eye(D)
        star = np.eye(D)
        for i in idx:
            u = G @ paulis[i] @ u
            phi = g_phi.ptm @ p_impl[i][0].ptm @ phi
            star = star @ p_impl[i][1].ptm @ g_star.ptm
        label = "".join(str(i) for i in idx)
        elements.append(
            GateElement(
                1.0 / D**k, unitary_channel(u), Superoperator(phi), Superoperator(star),
                unitary=u, label=label,
            )
        )
    e = GateEnsemble(elements)
    recovery = np.stack([p[0].ptm for p in p_impl])
    kw.setdefault("name", f"cycle_d{d}_k{k}")
    return _finish(e, povm=CyclePovm(recovery), **kw)


def dephasing_channel(readout: Sequence[np.ndarray]) -> Superoperator:
    """``rho -> sum_x tr[M_x rho] |x><x|`` for a computational-basis readout POVM."""
    d = len(readout)
    P = paulis_for_dim(d)
    diag = np.real(np.einsum("kxx->kx", P))
    ca = np.array([pauli_coefficients(m) for m in readout])
    # tr[M_x P_i] = d * ca[x, i]
    ptm = np.einsum("kx,xi->ki", diag, d * ca) / d
    return Superoperator(ptm)


def build_linear_xeb(n_qubits: int, layer_set: Sequence[np.ndarray], noise=None, readout=None, **kw) -> URBScheme:
    """Toy linear XEB over a uniform layer set with analytic expectation over outcomes.

    Only the forward maps carry noise; the inverting maps are the ideal adjoints
    so that the rule is exactly factored.  Figure of merit ``2**n p - 1``.
    """
    d = 2**n_qubits
    if readout is None:
        readout = [np.diag(np.eye(d)[x]).astype(complex) for x in range(d)]
    readout = [as_povm_element(m) for m in readout]
    if not np.allclose(sum(readout), np.eye(d), atol=1e-10):
        raise ValueError("readout effects must sum to the identity")
    if any(np.abs(m - np.diag(np.diag(m))).max() > 1e-12 for m in readout):
        raise ValueError("readout effects must be diagonal in the computational basis")
    e = make_ensemble(layer_set, None, noise)
    e = GateEnsemble(
        [
            GateElement(el.probability, el.ideal, el.impl, Superoperator(el.ideal.ptm.T), el.unitary, el.label)
            for el in e.elements
        ]
    )
    kw.setdefault("name", f"linear_xeb_n{n_qubits}")
    return _finish(
        e,
        intermediate=dephasing_channel(readout),
        povm=XebPovm(readout),
        prefactor=float(d),
        offset=-1.0,
        **kw,
    )


# ----------------------------------------------------------------- decays


def _check_m_list(m_list) -> np.ndarray:
    m = np.atleast_1d(np.asarray(m_list))
    if m.size == 0 or not np.issubdtype(m.dtype, np.integer) or np.any(m < 1):
        raise ValueError("sequence lengths must be positive integers")
    return m.astype(int)


def exact_decay(s: URBScheme, m_list) -> np.ndarray:
    """``tr[M0 . Lambda_R^m(I)(rho0)]`` by repeated application of the physical twirl."""
    if not s.povm.factored:
        raise NotFactoredError(
            f"POVM rule {s.povm.kind!r} is not factored; use enumerate_decay for exact values"
        )
    m = _check_m_list(m_list)
    lam = physical_twirl(s.ensemble).mat
    v = vec(s.intermediate.ptm)
    a, r, d = s.m0_coeffs, s.rho0_coeffs, s.dim
    wanted = {int(x) for x in m}
    vals = {}
    for k in range(1, int(m.max()) + 1):
        v = lam @ v
        if k in wanted:
            vals[k] = d * float(a @ unvec(v) @ r)
    return np.array([vals[int(x)] for x in m])


def _outcome_probs(s: URBScheme, state_coeffs: np.ndarray, rule_states: np.ndarray) -> np.ndarray:
    return s.dim * np.einsum("ni,ni->n", s.povm.coefficients(s, rule_states), state_coeffs)


def enumerate_decay(s: URBScheme, m: int, budget: int = ENUMERATION_BUDGET) -> float:
    """Exact ``p_R(m)`` by enumerating all ``|S|**m`` sequences with the scheme's POVM rule."""
    m = int(_check_m_list(m)[0])
    G = len(s.ensemble)
    if G**m > budget:
        raise BudgetExceededError(f"{G}^{m} sequences exceed the enumeration budget {budget}")
    impl = s.ensemble.impl_ptms
    probs = s.ensemble.probabilities
    weights = np.ones(1)
    states = s.rho0_coeffs[None, :]
    rule = s.povm.init(s, 1)
    for _ in range(m):
        n = len(weights)
        g = np.tile(np.arange(G), n)
        weights = np.repeat(weights, G) * probs[g]
        states = np.einsum("nij,nj->ni", impl[g], np.repeat(states, G, axis=0))
        rule = s.povm.step(s, np.repeat(rule, G, axis=0), g)
    return float(weights @ _outcome_probs(s, states, rule))


# ------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True)
class DecayDataset:
    m_values: tuple
    estimates: tuple
    std_errors: tuple
    sequences_per_length: int
    shots_per_sequence: int
    seed: int

    def __post_init__(self):
        if not (len(self.m_values) == len(self.estimates) == len(self.std_errors)):
            raise ValueError("m_values, estimates and std_errors must share length")

    @property
    def samples(self) -> int:
        return self.sequences_per_length * self.shots_per_sequence


def sequence_rng(seed: int, m: int, j: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, m, sequence index)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(m, j))))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("URB_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def _simulate_length(s: URBScheme, m: int, K: int, shots: int, seed: int) -> tuple[float, float]:
    G = len(s.ensemble)
    probs = s.ensemble.probabilities
    rngs = [sequence_rng(seed, m, j) for j in range(K)]
    seqs = np.stack([r.choice(G, size=m, p=probs) for r in rngs])
    impl = s.ensemble.impl_ptms
    states = np.tile(s.rho0_coeffs, (K, 1))
    rule = s.povm.init(s, K)
    for t in range(m):
        g = seqs[:, t]
        states = np.einsum("nij,nj->ni", impl[g], states)
        rule = s.povm.step(s, rule, g)
    p = _outcome_probs(s, states, rule)
    if np.any(p < -PROB_RANGE_TOL) or np.any(p > 1 + PROB_RANGE_TOL):
        raise ModelError(f"outcome probability {p[(p < 0) | (p > 1)][0]:.3g} outside [0, 1]")
    p = np.clip(p, 0.0, 1.0)
    hits = np.array([r.binomial(shots, pj) for r, pj in zip(rngs, p)])
    est = hits.sum() / (K * shots)
    return float(est), float(np.sqrt(est * (1 - est) / (K * shots)))


def monte_carlo_decay(s: URBScheme, m_list, K: int, shots: int, seed: int) -> DecayDataset:
    """Sampled decay; one Bernoulli count per sequence, keyed RNG so thread count does not matter."""
    m = _check_m_list(m_list)
    if K < 1 or shots < 1:
        raise ValueError("K and shots must be positive")
    seed = int(seed)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        out = list(pool.map(lambda x: _simulate_length(s, int(x), K, shots, seed), m))
    return DecayDataset(
        tuple(int(x) for x in m),
        tuple(o[0] for o in out),
        tuple(o[1] for o in out),
        K,
        shots,
        seed,
    )


# ----------------------------------------------------------------- quality


@dataclass(frozen=True)
class SchemeQuality:
    epsilon: float
    delta: float
    gamma_bounds: GammaBounds
    m_cutoff: int
    epsilon_std_error: float = 0.0
    epsilon_method: str = "analytic"
    partial: bool = False

    def __post_init__(self):
        if self.epsilon < 0 or self.delta < 0:
            raise ValueError("epsilon and delta must be nonnegative")

    @property
    def gamma(self) -> float:
        return self.gamma_bounds.smallest

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "epsilon_std_error": self.epsilon_std_error,
            "epsilon_method": self.epsilon_method,
            "partial": self.partial,
            "delta": self.delta,
            "m_cutoff": self.m_cutoff,
            "gamma_bounds": self.gamma_bounds.as_dict(),
        }


def _spectral_norms(coeffs: np.ndarray, d: int) -> np.ndarray:
    P = paulis_for_dim(d)
    mats = np.einsum("nk,kab->nab", coeffs, P)
    return np.max(np.abs(np.linalg.eigvalsh(mats)), axis=1)


def scheme_epsilon(
    s: URBScheme,
    m_cutoff: int = DEFAULT_M_CUTOFF,
    samples: int = EPSILON_SAMPLES,
    seed: int = 0,
    budget: int = EPSILON_ENUMERATION_BUDGET,
) -> tuple[float, float, str, bool]:
    """``max_{m <= m_cutoff} E ||M(g) - M0 . phi*(g1) ... I||_inf``.

    Returns ``(epsilon, std_error, method, partial)``.
    """
    if m_cutoff < 1:
        raise ValueError("m_cutoff must be >= 1")
    if s.povm.factored:
        return 0.0, 0.0, "analytic", False
    fact = FactoredPovm()
    G = len(s.ensemble)
    probs = s.ensemble.probabilities
    rng = np.random.default_rng(seed)
    best, best_se, partial = 0.0, 0.0, False
    for m in range(1, m_cutoff + 1):
        if G**m <= budget:
            seqs = np.array(list(np.ndindex(*([G] * m))), dtype=int).reshape(-1, m)
            w = np.prod(probs[seqs], axis=1)
        else:
            seqs = rng.choice(G, size=(samples, m), p=probs)
            w = np.full(samples, 1.0 / samples)
            partial = True
        a = s.povm.init(s, len(seqs))
        b = fact.init(s, len(seqs))
        for t in range(m):
            a = s.povm.step(s, a, seqs[:, t])
            b = fact.step(s, b, seqs[:, t])
        dev = _spectral_norms(s.povm.coefficients(s, a) - fact.coefficients(s, b), s.dim)
        mean = float(w @ dev)
        se = 0.0 if G**m <= budget else float(dev.std(ddof=1) / np.sqrt(samples))
        if mean > best:
            best, best_se = mean, se
    return best, best_se, "sampled" if partial else "enumerated", partial


def _key(ptm: np.ndarray) -> bytes:
    return np.rint(ptm * 1e9).astype(np.int64).tobytes()


def scheme_delta(e: GateEnsemble, tol: float = 1e-7) -> float:
    """``sum_g p_g (||phi(g) - omega(g)||_dia + ||phi*(g) - omega(g)^dag||_dia)``.

    Each term equals the diamond norm of a composition with the ideal unitary
    undone, which repeats across a group with gate-independent noise.
    """
    D = e.dim**2
    eye = np.eye(D)
    cache: dict[bytes, float] = {}

    def dist(diff_a: np.ndarray, diff_b: np.ndarray) -> float:
        ka, kb = _key(diff_a), _key(diff_b)
        if ka in cache:
            return cache[ka]
        if kb in cache:
            return cache[kb]
        val = 0.0 if np.abs(diff_a).max() < 1e-14 else diamond_norm(Superoperator(diff_a), tol=tol).upper
        cache[ka] = cache[kb] = val
        return val

    total = 0.0
    for p, w, phi, star in zip(e.probabilities, e.ideal_ptms, e.impl_ptms, e.inverting_ptms):
        # ||phi - w|| = ||phi w^T - id|| = ||w^T phi - id||
        t1 = dist(phi @ w.T - eye, w.T @ phi - eye)
        t2 = dist(star @ w - eye, w @ star - eye)
        total += p * (t1 + t2)
    return float(total)


def scheme_quality(
    s: URBScheme,
    m_cutoff: int = DEFAULT_M_CUTOFF,
    design="auto",
    samples: int = EPSILON_SAMPLES,
    seed: int = 0,
) -> SchemeQuality:
    eps, se, method, partial = scheme_epsilon(s, m_cutoff, samples, seed)
    return SchemeQuality(
        epsilon=eps,
        delta=scheme_delta(s.ensemble),
        gamma_bounds=gamma_bounds(s.ensemble, design=design),
        m_cutoff=m_cutoff,
        epsilon_std_error=se,
        epsilon_method=method,
        partial=partial,
    )


# ------------------------------------------------------------ theorem check


@dataclass(frozen=True)
class TheoremCheck:
    m_values: tuple
    p_exact: tuple
    model: tuple
    residuals: tuple
    bounds: tuple
    gamma: float
    gamma_label: str
    delta: float
    epsilon: float
    p: float
    hypothesis_ok: bool
    p_window_ok: bool

    @property
    def residuals_ok(self) -> bool:
        return all(r <= b + ROUNDOFF_SLACK for r, b in zip(self.residuals, self.bounds))

    @property
    def residuals_ok_strict(self) -> bool:
        return all(r <= b for r, b in zip(self.residuals, self.bounds))

    @property
    def all_ok(self) -> bool:
        return self.hypothesis_ok and self.p_window_ok and self.residuals_ok

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "gamma_label": self.gamma_label,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "p": self.p,
            "hypothesis_ok": self.hypothesis_ok,
            "p_window_ok": self.p_window_ok,
            "residuals_ok": self.residuals_ok,
            "residuals_ok_strict": self.residuals_ok_strict,
            "rows": [
                {"m": m, "p_exact": v, "model": f, "residual": r, "bound": b}
                for m, v, f, r, b in zip(self.m_values, self.p_exact, self.model, self.residuals, self.bounds)
            ],
        }


def theorem_bound_check(s: URBScheme, q: SchemeQuality, fit, m_list, values=None) -> TheoremCheck:
    """Compare ``|p_R(m) - (A + B p^m)|`` with ``eps + 16 (gamma + 6 delta)^m``.

    ``values`` defaults to ``exact_decay`` (factored rules) or enumeration.
    """
    m = _check_m_list(m_list)
    if values is None:
        if s.povm.factored:
            values = exact_decay(s, m)
        else:
            values = np.array([enumerate_decay(s, int(x)) for x in m])
    values = np.asarray(values, dtype=float)
    gamma, delta = q.gamma, q.delta
    model = fit.A + fit.B * fit.p ** m.astype(float)
    res = np.abs(values - model)
    bounds = q.epsilon + 16.0 * (gamma + 6 * delta) ** m.astype(float)
    return TheoremCheck(
        m_values=tuple(int(x) for x in m),
        p_exact=tuple(values.tolist()),
        model=tuple(model.tolist()),
        residuals=tuple(res.tolist()),
        bounds=tuple(bounds.tolist()),
        gamma=gamma,
        gamma_label=q.gamma_bounds.smallest_label,
        delta=delta,
        epsilon=q.epsilon,
        p=fit.p,
        hypothesis_ok=bool(delta <= (1 - gamma) / 11),
        p_window_ok=bool(1 - 2 * delta - CHECK_SLACK <= fit.p <= 1 + CHECK_SLACK),
    )


@dataclass(frozen=True)
class Certification:
    certified: bool
    reason: str


def certify_single_exponential(q: SchemeQuality) -> Certification:
    """Certify a single-exponential decay only when some gamma bound is below 1 and the hypothesis holds."""
    g = q.gamma
    if g >= 1:
        return Certification(False, f"refused: every gamma bound is >= 1 (smallest {g:.6g}, {q.gamma_bounds.smallest_label})")
    if q.delta > (1 - g) / 11:
        return Certification(False, f"refused: delta {q.delta:.6g} exceeds (1 - gamma)/11 = {(1 - g) / 11:.6g}")
    return Certification(True, f"certified with gamma {g:.6g} ({q.gamma_bounds.smallest_label}), delta {q.delta:.6g}")
