import numpy as np
import pytest

import oracles as o
from urb.diamond import DiamondNormError, diamond_norm, diamond_norm_choi
from urb.superops import (
    choi,
    depolarizing,
    identity_channel,
    pauli_channel,
    random_channel,
    random_superoperator,
    unitary_channel,
    zero_map,
)


def test_zero_map():
    assert diamond_norm(zero_map(2)).value == 0


@pytest.mark.parametrize("q1,q2", [(0.9, 0.5), (1.0, 0.0), (0.3, 0.31)])
def test_depolarizing_difference_closed_form(q1, q2):
    r = diamond_norm(depolarizing(q1) - depolarizing(q2))
    assert r.value == pytest.approx(1.5 * abs(q1 - q2), abs=1e-5)
    assert r.lower <= r.upper


def test_bit_flip_difference():
    bf = lambda p: pauli_channel([1 - p, p, 0, 0])
    assert diamond_norm(bf(0.2) - bf(0.05)).value == pytest.approx(0.3, abs=1e-5)


@pytest.mark.parametrize("d", [2, 4])
def test_channels_have_unit_diamond_norm(d, rng):
    for _ in range(5):
        assert diamond_norm(random_channel(d, rng)).value == pytest.approx(1, abs=1e-5)
    assert diamond_norm(identity_channel(d)).value == pytest.approx(1, abs=1e-5)


def test_unitary_difference():
    # a phase gate diag(1, e^{i phi}) sits at distance 2|sin(phi/2)| from the identity
    s = unitary_channel(np.diag([1, 1j]))
    assert diamond_norm(s - identity_channel(2)).value == pytest.approx(np.sqrt(2), abs=1e-5)


@pytest.mark.parametrize("d", [2, 4])
def test_against_cvxpy_oracle(d, rng):
    pytest.importorskip("cvxpy")
    for _ in range(3):
        t = random_channel(d, rng) - random_channel(d, rng)
        J = o.choi_from_map(o.map_from_ptm(t.ptm, d), d)
        ref = o.diamond_norm_cvxpy(J, d)
        r = diamond_norm(t)
        assert r.value == pytest.approx(ref, abs=1e-5)


def test_general_hermiticity_preserving_against_cvxpy(rng):
    pytest.importorskip("cvxpy")
    t = random_superoperator(2, rng)
    J = o.choi_from_map(o.map_from_ptm(t.ptm, 2), 2)
    assert diamond_norm(t).value == pytest.approx(o.diamond_norm_cvxpy(J, 2), abs=1e-5)


def test_certificate_brackets_value(rng):
    r = diamond_norm(random_channel(2, rng) - random_channel(2, rng))
    assert r.lower <= r.value <= r.upper
    assert r.upper - r.lower <= 1e-6


def test_non_convergence_raises(rng):
    t = random_channel(4, rng) - random_channel(4, rng)
    with pytest.raises(DiamondNormError) as info:
        diamond_norm(t, tol=1e-14, max_iter=3)
    assert info.value.lower <= info.value.upper


def test_bad_choi_shape():
    with pytest.raises(ValueError):
        diamond_norm_choi(np.eye(5))
