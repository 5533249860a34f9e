import math

import numpy as np
import pytest

from gaussdiv import (
    DomainViolation,
    ExtendedOperator,
    d1_logdet_extended,
    d1_logdet_finite,
    d1_logdet_same_gamma,
)

from conftest import random_spd


def test_extended_equal_is_zero(rng):
    x = ExtendedOperator(random_spd(rng, 4), 0.5)
    assert abs(d1_logdet_extended(x, x)) < 1e-13


def test_extended_pure_gamma():
    x = ExtendedOperator(np.zeros((3, 3)), 2.0)
    y = ExtendedOperator(np.zeros((3, 3)), 1.0)
    assert d1_logdet_extended(x, y) == pytest.approx(1.0 - math.log(2.0), rel=1e-14)


def test_extended_same_gamma_consistency(rng):
    x = ExtendedOperator(random_spd(rng, 5), 0.3)
    y = ExtendedOperator(random_spd(rng, 5), 0.3)
    assert d1_logdet_extended(x, y) == pytest.approx(d1_logdet_same_gamma(x, y), abs=1e-11)


def test_extended_nonnegative(rng):
    for _ in range(20):
        x = ExtendedOperator(random_spd(rng, 4), rng.uniform(0.1, 2))
        y = ExtendedOperator(random_spd(rng, 4), rng.uniform(0.1, 2))
        assert d1_logdet_extended(x, y) >= -1e-10


def test_same_gamma_example():
    x = ExtendedOperator(np.diag([1.0, 0.0]), 1.0)
    y = ExtendedOperator(np.zeros((2, 2)), 1.0)
    assert d1_logdet_same_gamma(x, y) == pytest.approx(1.0 - math.log(2.0), rel=1e-14)


def test_same_gamma_matches_finite(rng):
    a, b = random_spd(rng, 6), random_spd(rng, 6)
    g = 0.05
    val = d1_logdet_same_gamma(ExtendedOperator(a, g), ExtendedOperator(b, g))
    ref = d1_logdet_finite(a + g * np.eye(6), b + g * np.eye(6))
    assert val == pytest.approx(ref, abs=1e-10)


def test_same_gamma_zero_iff_equal(rng):
    a = random_spd(rng, 5)
    x = ExtendedOperator(a, 0.1)
    assert d1_logdet_same_gamma(x, x) == pytest.approx(0.0, abs=1e-14)
    b = a.copy()
    b[0, 0] += 1e-3
    assert d1_logdet_same_gamma(ExtendedOperator(b, 0.1), x) > 0


def test_same_gamma_rejects_mismatch():
    x = ExtendedOperator(np.eye(2), 1.0)
    with pytest.raises(DomainViolation):
        d1_logdet_same_gamma(x, ExtendedOperator(np.eye(2), 2.0))


def test_small_eigenvalue_rejected():
    # Eigenvalue of A + gamma I at 5e-11 is inside the rejected band.
    x = ExtendedOperator(np.diag([1.0, -1.0 + 5e-11]), 1.0)
    y = ExtendedOperator(np.eye(2), 1.0)
    with pytest.raises(DomainViolation):
        d1_logdet_same_gamma(x, y)


def test_finite_examples():
    assert d1_logdet_finite(np.eye(3), np.eye(3)) == 0.0
    assert d1_logdet_finite(2 * np.eye(2), np.eye(2)) == pytest.approx(2 - 2 * math.log(2), rel=1e-14)


def test_finite_congruence(rng):
    c1, c2 = random_spd(rng, 5), random_spd(rng, 5)
    m = rng.standard_normal((5, 5))
    v = d1_logdet_finite(c1, c2)
    assert d1_logdet_finite(m @ c1 @ m.T, m @ c2 @ m.T) == pytest.approx(v, rel=1e-9)


def test_finite_non_spd():
    with pytest.raises(DomainViolation):
        d1_logdet_finite(np.diag([1.0, 0.0]), np.eye(2))
