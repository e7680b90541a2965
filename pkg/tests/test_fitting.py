import numpy as np
import pytest

import oracles as o
from urb.fitting import (
    avg_fidelity,
    exponent_to_fidelity,
    fidelity_to_exponent,
    fit_exponential,
    robustness_bound,
)
from urb.gates import T, clifford_group
from urb.noise import NoiseModel, depolarizing_noise
from urb.perturbation import spectral_split
from urb.schemes import (
    URBScheme,
    build_clifford_rb,
    build_scheme,
    exact_decay,
    monte_carlo_decay,
    scheme_delta,
)
from urb.superops import (
    Superoperator,
    amplitude_damping,
    depolarizing,
    identity_channel,
    random_channel,
    random_density_matrix,
    replacement,
)
from urb.twirling import GateElement, GateEnsemble, make_ensemble, physical_twirl


# ---- fit -----------------------------------------------------------------


def test_fit_own_model():
    m = np.arange(1, 21)
    f = fit_exponential(0.5 + 0.5 * 0.9**m, m)
    assert (f.A, f.B, f.p) == pytest.approx((0.5, 0.5, 0.9), abs=1e-9)
    assert f.converged and not f.degenerate
    assert f.rms_residual < 1e-12
    np.testing.assert_allclose(f.model(m), 0.5 + 0.5 * 0.9**m, atol=1e-12)


@pytest.mark.parametrize("A,B,p", [(0.25, 0.7, 0.6), (0.5, -0.3, 0.95), (0.1, 0.8, 0.3)])
def test_fit_various(A, B, p):
    m = np.array([1, 2, 3, 5, 8, 13, 21, 34])
    f = fit_exponential(A + B * p**m, m)
    assert (f.A, f.B, f.p) == pytest.approx((A, B, p), abs=1e-8)


def test_fit_unsorted_input():
    m = np.array([8, 1, 4, 2, 16])
    f = fit_exponential(0.5 + 0.4 * 0.85**m, m)
    assert f.p == pytest.approx(0.85, abs=1e-9)
    assert f.m_values == (1.0, 2.0, 4.0, 8.0, 16.0)


def test_constant_is_degenerate():
    f = fit_exponential(np.ones(10), np.arange(1, 11))
    assert f.degenerate
    assert f.B == 0 and f.A == pytest.approx(1)


def test_fit_input_errors():
    with pytest.raises(ValueError):
        fit_exponential([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_exponential([1, 2, 3, 4], None)
    with pytest.raises(ValueError):
        fit_exponential([1, 2, 3, 4], [1, 2, 3, 4], std_errors=[0, 1, 1, 1])


def test_fit_dataset_with_errors():
    s = build_clifford_rb(2, depolarizing_noise(0.9))
    ds = monte_carlo_decay(s, [1, 2, 4, 8, 16, 32], K=300, shots=100, seed=7)
    f = fit_exponential(ds)
    assert f.p_std_error > 0
    assert abs(f.p - 0.9) <= 4 * f.p_std_error
    assert "p = " in f.as_text()
    assert set(f.as_dict()) >= {"A", "B", "p", "rms_residual", "converged"}


def test_fit_perturbed_clifford_window():
    C = clifford_group(2)
    probs = np.r_[np.full(24, 0.95 / 24), 0.05]
    s = build_scheme(list(C) + [T], probs, depolarizing_noise(0.98))
    delta = scheme_delta(s.ensemble)
    m = np.arange(1, 51)
    f = fit_exponential(exact_decay(s, m), m)
    assert 1 - 2 * delta <= f.p <= 1
    assert f.p == pytest.approx(spectral_split(physical_twirl(s.ensemble)).p, abs=1e-6)


# ---- robustness ----------------------------------------------------------


def test_robustness_examples():
    assert robustness_bound(0.5, 0.9, 1, 0.0).bound_on_exponent_shift == 0
    r = robustness_bound(0.5, 0.9, 1, 1e-3)
    assert r.bound_on_exponent_shift == pytest.approx(0.0038 / 0.448, rel=1e-12)
    assert r.valid
    assert not robustness_bound(0.5, 0.9, 1, 0.1).valid
    assert robustness_bound(0.5, 0.9, 1, 0.3).as_dict()["bound_on_exponent_shift"] == "inf"
    for bad in [(0, 0.9, 1, 0), (0.5, 1.0, 1, 0), (0.5, 0.9, 0, 0), (0.5, 0.9, 1, -1)]:
        with pytest.raises(ValueError):
            robustness_bound(*bad)


def test_robustness_refit_experiment():
    rng = np.random.default_rng(99)
    for i in range(100):
        A0, a, M = rng.uniform(0.2, 0.8), rng.uniform(0.7, 0.98), int(rng.integers(1, 6))
        B0 = rng.uniform(0, 0.5)
        eps = rng.uniform(0.01, 0.99) * A0 * a**M / 10
        m = np.arange(M, M + 41)
        pert = eps * (-1.0) ** m if i % 2 == 0 else eps * np.cos(0.7 * m)
        f = fit_exponential(B0 + A0 * a**m + pert, m)
        b = robustness_bound(A0, a, M, eps)
        assert b.valid
        assert abs(f.p - a) <= b.bound_on_exponent_shift


# ---- fidelity ------------------------------------------------------------


def test_avg_fidelity_examples(rng):
    assert avg_fidelity(identity_channel(2)) == pytest.approx(1)
    assert avg_fidelity(depolarizing(0.9)) == pytest.approx(0.95, abs=1e-15)
    assert exponent_to_fidelity(0.9, 2) == pytest.approx(0.95)
    with pytest.raises(ValueError):
        avg_fidelity(Superoperator(np.diag([1, 1.5, 0, 0])))


def test_avg_fidelity_haar_oracle(rng):
    ch = random_channel(2, rng)
    mean, se = o.haar_average_fidelity_batched(ch.ptm, 2, 100_000, rng)
    assert abs(avg_fidelity(ch) - mean) <= 3 * se
    mean, se = o.haar_average_fidelity_batched(depolarizing(0.9).ptm, 2, 100_000, rng)
    assert abs(0.95 - mean) <= 3 * se


def test_avg_fidelity_loop_oracle(rng):
    # slow loop version against the trace identity on a d = 4 channel
    ch = random_channel(4, rng)
    mean, se = o.haar_average_fidelity(o.map_from_ptm(ch.ptm, 4), 4, 4000, rng)
    assert abs(avg_fidelity(ch) - mean) <= 4 * se


def test_fidelity_exponent_roundtrip(rng):
    for _ in range(100):
        p, d = rng.uniform(), int(rng.choice([2, 4]))
        assert fidelity_to_exponent(exponent_to_fidelity(p, d), d) == pytest.approx(p, abs=1e-14)


def test_in_between_two_design_fidelity_relation(rng):
    n_r = random_channel(2, rng) * 0.05 + identity_channel(2) * 0.95
    n_l = amplitude_damping(0.04)
    s = build_clifford_rb(2, NoiseModel(right=n_r, left=n_l))
    assert s.fidelity_license == "in-between-2-design"
    m = np.arange(1, 31)
    f = fit_exponential(exact_decay(s, m), m)
    assert f.p == pytest.approx(fidelity_to_exponent(avg_fidelity(n_l @ n_r), 2), abs=1e-8)


def _pauli_cosets(U):
    """Coset index of each Clifford modulo right multiplication by Paulis."""
    P = o.paulis(2)
    coset = [-1] * len(U)
    k = 0
    for i, u in enumerate(U):
        if coset[i] >= 0:
            continue
        for j, v in enumerate(U):
            if any(abs(abs(np.trace((u @ p).conj().T @ v)) - 2) < 1e-9 for p in P):
                coset[j] = k
        k += 1
    return np.array(coset)


def test_gate_dependent_replacement_model(rng):
    U = clifford_group(2)
    cos = _pauli_cosets(U)
    assert np.bincount(cos).tolist() == [4] * 6
    p_of_coset = rng.uniform(0.9, 0.99, size=6)
    rho = random_density_matrix(2, rng)
    base = make_ensemble(U)
    elems = []
    for el, c in zip(base.elements, cos):
        star = replacement(p_of_coset[c], rho) @ Superoperator(el.ideal.ptm.T)
        elems.append(GateElement(el.probability, el.ideal, el.ideal, star, el.unitary))
    e = GateEnsemble(elems)
    s = URBScheme(e, np.diag([1, 0]).astype(complex), identity_channel(2), np.diag([1, 0]).astype(complex))
    m = np.arange(1, 31)
    f = fit_exponential(exact_decay(s, m), m)
    mean_f = np.mean([avg_fidelity(Superoperator(el.inverting.ptm @ el.impl.ptm)) for el in e.elements])
    assert f.p == pytest.approx((2 * mean_f - 1) / (2 - 1), abs=1e-8)
