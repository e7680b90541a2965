import numpy as np
import pytest

import oracles as o
from urb.gates import T as T_GATE
from urb.gates import clifford_group, pauli_group
from urb.noise import NoiseModel, depolarizing_noise
from urb.perturbation import (
    SpectralAmbiguityError,
    fixed_point_state,
    spectral_split,
    unit_eigen_residual,
    verify_corollary,
)
from urb.schemes import scheme_delta
from urb.superops import amplitude_damping, depolarizing, random_channel, random_unitary
from urb.twirling import GateElement, GateEnsemble, haar_twirl, make_ensemble, physical_twirl


def twirl_matrix_oracle(e):
    """Dense matrix of the physical twirl built column by column from PTM products."""
    D = e.dim**2
    cols = []
    for c in range(D * D):
        basis = np.zeros(D * D)
        basis[c] = 1
        N = basis.reshape(D, D, order="F")
        out = o.twirl_by_brute_force(N, e.impl_ptms, e.inverting_ptms, e.probabilities)
        cols.append(out.reshape(-1, order="F"))
    return np.stack(cols, axis=1)


def perturbed_clifford(weight=0.05, q=0.98):
    C = clifford_group(2)
    probs = np.r_[np.full(24, (1 - weight) / 24), weight]
    return make_ensemble(list(C) + [T_GATE], probs, noise=depolarizing_noise(q))


def test_haar_split():
    s = spectral_split(haar_twirl(2))
    assert s.lambda_unit == pytest.approx(1, abs=1e-12)
    assert s.p == pytest.approx(1, abs=1e-12)
    assert s.remainder_norm == pytest.approx(0, abs=1e-12)
    assert s.diagonalizable


@pytest.mark.parametrize("q", [0.9, 0.98])
def test_clifford_depolarizing_split(q):
    e = make_ensemble(clifford_group(2), noise=depolarizing_noise(q))
    s = spectral_split(physical_twirl(e))
    assert s.p == pytest.approx(q, abs=1e-10)
    assert s.lambda_unit == pytest.approx(1, abs=1e-10)
    assert s.remainder_norm < 1e-10
    w = np.sort(np.abs(np.linalg.eigvals(twirl_matrix_oracle(e))))[::-1]
    np.testing.assert_allclose(w[:2], [1, q], atol=1e-10)
    np.testing.assert_allclose(w[2:], 0, atol=1e-10)


def test_perturbed_ensemble_dominant_eigenvalues():
    e = perturbed_clifford()
    delta = scheme_delta(e)
    s = spectral_split(physical_twirl(e), delta=delta)
    w = np.linalg.eigvals(twirl_matrix_oracle(e))
    ref = w[np.argsort(np.abs(w - 1))[:3]]
    # the V-restricted twirl drops the trivial first-row directions of the full space
    dom = np.sort_complex(s.dominant_eigenvalues)
    for x in dom:
        assert np.min(np.abs(ref - x)) < 1e-9
        assert abs(1 - x) <= 2 * delta


def test_verify_corollary_examples():
    s = spectral_split(haar_twirl(2))
    assert verify_corollary(s, 0.0, 0.0).all_ok
    assert not verify_corollary(s, 0.5, 0.1).hypothesis_ok
    e = make_ensemble(clifford_group(2), noise=depolarizing_noise(0.99))
    delta = scheme_delta(e)
    r = verify_corollary(spectral_split(physical_twirl(e)), 0.0, delta)
    assert r.eig_close and r.remainder_ok and r.kappa_ok and r.hypothesis_ok
    with pytest.raises(ValueError):
        verify_corollary(s, -1, 0)


def test_pauli_ensemble_is_ambiguous():
    e = make_ensemble(pauli_group(2), noise=depolarizing_noise(0.99))
    with pytest.raises(SpectralAmbiguityError):
        spectral_split(physical_twirl(e))


@pytest.mark.parametrize("seed", range(5))
def test_split_invariants(seed):
    rng = np.random.default_rng(seed)
    C = clifford_group(2)
    extra = random_unitary(2, rng)
    probs = np.r_[np.full(24, 0.9 / 24), 0.1]
    noise = NoiseModel(
        right=random_channel(2, rng, rank=1) * 0.02 + depolarizing(0.99) * 0.98,
        left=amplitude_damping(0.02),
    )
    e = make_ensemble(list(C) + [extra], probs, noise=noise)
    lam = physical_twirl(e)
    s = spectral_split(lam)
    assert s.reconstruction_error < 1e-9
    assert np.max(np.abs(s.eigenvalues)) <= 1 + 1e-9
    assert np.max(np.abs(np.imag(lam.mat))) < 1e-12
    rho = fixed_point_state(e)
    assert np.abs(rho - np.eye(2) / 2).max() > 1e-5  # non-unital left noise moves the fixed point
    assert unit_eigen_residual(lam, rho) < 1e-9


def test_fixed_point_examples():
    e = make_ensemble(clifford_group(2))
    np.testing.assert_allclose(fixed_point_state(e), np.eye(2) / 2, atol=1e-12)
    e = make_ensemble(clifford_group(2), noise=NoiseModel(left=depolarizing(0.9)))
    np.testing.assert_allclose(fixed_point_state(e), np.eye(2) / 2, atol=1e-12)
    ad = amplitude_damping(0.2)
    base = make_ensemble(clifford_group(2)[:4])
    elems = [GateElement(el.probability, el.ideal, el.impl, ad, el.unitary) for el in base.elements]
    rho = fixed_point_state(GateEnsemble(elems))
    np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-9)

