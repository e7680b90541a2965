import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from urb.superops import (
    DimensionError,
    Superoperator,
    adjoint,
    alpha_matrix,
    amplitude_damping,
    apply,
    as_density_matrix,
    choi,
    compose,
    depolarizing,
    frobenius_norm,
    identity_channel,
    induced_frobenius_norm,
    induced_trace_norm,
    is_cptp,
    pauli_basis,
    pauli_channel,
    pauli_channel_diamond,
    ptm_from_kraus,
    random_channel,
    random_hermitian,
    random_kraus,
    random_superoperator,
    replacement,
    so_norm,
    spectral_norm,
    superop_from_alpha,
    superop_from_choi,
    trace_norm,
    unitary_channel,
    zero_map,
)


# ---- Pauli basis ---------------------------------------------------------


def test_single_qubit_basis_order():
    b = pauli_basis(1)
    assert b.labels == ["I", "X", "Y", "Z"]
    for got, want in zip(b.elements, o.PAULI_1Q):
        np.testing.assert_array_equal(got, want)


@pytest.mark.parametrize("n", [1, 2])
def test_basis_orthogonality(n):
    P = pauli_basis(n).elements
    d = 2**n
    assert len(P) == d * d
    gram = np.einsum("iab,jba->ij", P, P)
    np.testing.assert_allclose(gram, d * np.eye(d * d), atol=1e-12)


def test_two_qubit_basis_matches_kron():
    np.testing.assert_allclose(pauli_basis(2).elements, np.array(o.paulis(4)), atol=0)


def test_non_power_of_two_rejected():
    with pytest.raises(DimensionError):
        depolarizing(0.5, d=3)


# ---- PTM construction ----------------------------------------------------


def test_identity_ptm():
    np.testing.assert_allclose(ptm_from_kraus([np.eye(2)]).ptm, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("q", [0.0, 0.3, 0.9, 1.0])
def test_depolarizing_ptm_against_kraus_oracle(q):
    kraus = o.depolarizing_kraus(q)
    ref = o.ptm_from_map(lambda x: o.apply_kraus(kraus, x), 2)
    np.testing.assert_allclose(ref, np.diag([1, q, q, q]), atol=1e-12)
    np.testing.assert_allclose(depolarizing(q).ptm, ref, atol=1e-12)
    np.testing.assert_allclose(ptm_from_kraus(kraus).ptm, ref, atol=1e-12)


def test_unitary_x_ptm():
    np.testing.assert_allclose(unitary_channel(o.X).ptm, np.diag([1, 1, -1, -1]), atol=1e-15)


@pytest.mark.parametrize("d", [2, 4])
def test_random_kraus_ptm_against_oracle(d, rng):
    for _ in range(5):
        kraus = random_kraus(d, rng)
        ref = o.ptm_from_map(lambda x: o.apply_kraus(kraus, x), d)
        np.testing.assert_allclose(ptm_from_kraus(kraus).ptm, ref, atol=1e-12)


def test_amplitude_damping_ptm_against_oracle():
    g = 0.3
    kraus = [np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])]
    ref = o.ptm_from_map(lambda x: o.apply_kraus(kraus, x), 2)
    np.testing.assert_allclose(amplitude_damping(g).ptm, ref, atol=1e-12)


def test_ptm_rejects_bad_shapes():
    with pytest.raises(ValueError):
        Superoperator(np.eye(3))
    with pytest.raises(ValueError):
        Superoperator(np.eye(4) + 1j * np.eye(4))


# ---- apply ---------------------------------------------------------------


def test_apply_examples(rng):
    rho = o.haar_state(2, rng)
    rho = np.outer(rho, rho.conj())
    np.testing.assert_allclose(apply(identity_channel(2), rho), rho, atol=1e-14)
    np.testing.assert_allclose(apply(depolarizing(0.0), rho), np.eye(2) / 2, atol=1e-14)
    q = 0.7
    ket0 = np.diag([1.0, 0.0])
    np.testing.assert_allclose(apply(depolarizing(q), ket0), np.diag([(1 + q) / 2, (1 - q) / 2]), atol=1e-14)


@pytest.mark.parametrize("d", [2, 4])
def test_apply_matches_kraus(d, rng):
    kraus = random_kraus(d, rng)
    rho = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    np.testing.assert_allclose(apply(ptm_from_kraus(kraus), rho), o.apply_kraus(kraus, rho), atol=1e-12)


# ---- compose / adjoint ---------------------------------------------------


def test_compose_and_adjoint(rng):
    t = random_channel(2, rng)
    assert compose(identity_channel(2), t).allclose(t)
    U = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    assert adjoint(unitary_channel(U)).allclose(unitary_channel(U.conj().T))
    assert adjoint(depolarizing(0.4)).allclose(depolarizing(0.4))


def test_compose_order(rng):
    a, b = random_channel(2, rng), random_channel(2, rng)
    rho = as_density_matrix(np.diag([0.6, 0.4]))
    np.testing.assert_allclose(apply(compose(a, b), rho), apply(a, apply(b, rho)), atol=1e-12)


def test_adjoint_is_hs_adjoint(rng):
    t = random_superoperator(4, rng)
    A, B = random_hermitian(4, rng), random_hermitian(4, rng)
    lhs = np.trace(A @ apply(t, B))
    rhs = np.trace(apply(adjoint(t), A) @ B)
    assert abs(lhs - rhs) < 1e-10


# ---- alpha / Choi / CPTP -------------------------------------------------


def test_alpha_examples():
    a = alpha_matrix(identity_channel(2))
    e = np.zeros((4, 4))
    e[0, 0] = 1
    np.testing.assert_allclose(a, e, atol=1e-14)
    q = 0.6
    np.testing.assert_allclose(
        alpha_matrix(depolarizing(q)), np.diag([(1 + 3 * q) / 4] + [(1 - q) / 4] * 3), atol=1e-14
    )


def test_not_cptp_example():
    t = Superoperator(np.diag([1, 1.5, 0, 0]))
    J = o.choi_from_map(o.map_from_ptm(t.ptm, 2), 2)
    assert np.linalg.eigvalsh(J).min() < -1e-3
    assert not is_cptp(t)


def test_offdiagonal_alpha_counterexample_rejected():
    eps = 0.1
    a = np.zeros((4, 4))
    a[0, 0] = 1
    a[1, 2] = a[2, 1] = eps
    assert not is_cptp(superop_from_alpha(a))


@pytest.mark.parametrize("d", [2, 4])
def test_alpha_psd_unit_trace(d, rng):
    for _ in range(20):
        a = alpha_matrix(random_channel(d, rng))
        assert abs(np.trace(a) - 1) < 1e-10
        assert np.linalg.eigvalsh(a).min() > -1e-10


@pytest.mark.parametrize("d", [2, 4])
def test_choi_matches_oracle_and_roundtrips(d, rng):
    t = random_superoperator(d, rng)
    J = o.choi_from_map(o.map_from_ptm(t.ptm, d), d)
    np.testing.assert_allclose(choi(t), J, atol=1e-12)
    assert superop_from_choi(J).allclose(t)


@pytest.mark.parametrize("d", [2, 4])
def test_so_norm_alpha_identity(d, rng):
    for _ in range(20):
        t = random_superoperator(d, rng)
        assert abs(so_norm(t) - d * np.linalg.norm(alpha_matrix(t))) < 1e-10


# ---- norms ---------------------------------------------------------------


def test_hermitian_norm_examples():
    eye = np.eye(2)
    assert trace_norm(eye) == pytest.approx(2)
    assert frobenius_norm(eye) == pytest.approx(np.sqrt(2))
    assert spectral_norm(eye) == pytest.approx(1)
    z = np.diag([1.0, -1.0])
    assert (trace_norm(z), frobenius_norm(z), spectral_norm(z)) == pytest.approx((2, np.sqrt(2), 1))


def test_density_matrix_trace_norm(rng):
    for d in (2, 4):
        from urb.superops import random_density_matrix

        assert trace_norm(random_density_matrix(d, rng)) == pytest.approx(1, abs=1e-12)


def test_superoperator_norm_examples(rng):
    ident = identity_channel(2)
    assert so_norm(ident) == pytest.approx(2)
    assert induced_frobenius_norm(ident) == pytest.approx(1)
    assert induced_trace_norm(ident, restarts=8).value == pytest.approx(1, abs=1e-9)
    assert induced_frobenius_norm(depolarizing(0.7)) == pytest.approx(1)
    ch = random_channel(2, rng)
    assert induced_trace_norm(ch, restarts=8).value == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("d", [2, 4])
def test_induced_trace_norm_depolarizing_difference(d):
    # For dep(a) - dep(b) the output on any pure state is (a-b)(psi - I/d).
    a, b = 0.9, 0.5
    est = induced_trace_norm(depolarizing(a, d) - depolarizing(b, d), restarts=16)
    assert est.value == pytest.approx((a - b) * 2 * (d - 1) / d, abs=1e-8)


def test_zero_map_norms():
    z = zero_map(2)
    assert so_norm(z) == 0
    assert induced_trace_norm(z, restarts=4).value == 0
    assert pauli_channel_diamond(np.zeros(4)) == 0


def test_pauli_channel_diamond_closed_forms():
    q1, q2 = 0.9, 0.4
    da = np.diag(alpha_matrix(depolarizing(q1))) - np.diag(alpha_matrix(depolarizing(q2)))
    assert pauli_channel_diamond(da) == pytest.approx(1.5 * abs(q1 - q2), abs=1e-12)
    p1, p2 = 0.2, 0.05
    bf = lambda p: pauli_channel([1 - p, p, 0, 0])
    db = np.diag(alpha_matrix(bf(p1))) - np.diag(alpha_matrix(bf(p2)))
    assert pauli_channel_diamond(db) == pytest.approx(2 * abs(p1 - p2), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 4]))
def test_hermitian_norm_inequality(seed, d):
    h = random_hermitian(d, np.random.default_rng(seed))
    s, f, t = spectral_norm(h), frobenius_norm(h), trace_norm(h)
    assert s <= f + 1e-10
    assert f <= t + 1e-10
    assert t <= np.sqrt(d) * f + 1e-10


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 4]))
def test_so2_submultiplicative(seed, d):
    r = np.random.default_rng(seed)
    a, b = random_superoperator(d, r), random_superoperator(d, r)
    assert so_norm(a @ b) <= induced_frobenius_norm(a) * so_norm(b) + 1e-10
    assert induced_frobenius_norm(a @ b) <= induced_frobenius_norm(a) * induced_frobenius_norm(b) + 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 4]))
def test_so_tr_inequality(seed, d):
    r = np.random.default_rng(seed)
    t = random_channel(d, r) - random_channel(d, r)
    # trace-norm estimate is a lower bound, so this direction is conservative
    assert so_norm(t) <= d * induced_trace_norm(t, restarts=16).value + 1e-8


def test_replacement_action(rng):
    from urb.superops import random_density_matrix

    sigma = random_density_matrix(2, rng)
    rho = random_density_matrix(2, rng)
    t = replacement(0.3, sigma)
    np.testing.assert_allclose(apply(t, rho), 0.3 * rho + 0.7 * sigma, atol=1e-12)
    assert is_cptp(t)
