import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussdiv import (
    BaseMeasure,
    DomainViolation,
    RelativeGaussian,
    from_relative,
    interpolate_finite,
    interpolate_relative,
    log_normalizing_factor,
    mixture_log_det,
    norms,
    quadrature_z,
    to_relative,
)
from gaussdiv.mixture import _log_mix_term

from conftest import random_orthogonal, random_relative, random_spd


def test_alpha_zero_returns_input(rng):
    r0, r1 = random_relative(rng, 4), random_relative(rng, 4)
    mix = interpolate_relative(r0, r1, 0.0)
    assert mix.s_alpha is r0.s and mix.u_alpha is r0.u
    mix = interpolate_relative(r0, r1, 1.0)
    assert mix.s_alpha is r1.s and mix.u_alpha is r1.u


def test_idempotent(rng):
    r = random_relative(rng, 5)
    mix = interpolate_relative(r, r, 0.37)
    assert np.allclose(mix.s_alpha.matrix, r.s.matrix, atol=1e-12)
    assert np.allclose(mix.u_alpha, r.u, atol=1e-12)
    assert mix.log_z <= 1e-10
    assert abs(mix.log_z) < 1e-12


def test_harmonic_mean_1d():
    # C0 = 1, C1 = 1/3 against a unit base; the harmonic mean at 1/2 is 1/2.
    r0 = RelativeGaussian([0.0], [[0.0]])
    r1 = RelativeGaussian([0.0], [[1.0 - 1.0 / 3.0]])
    mix = interpolate_relative(r0, r1, 0.5)
    assert 1.0 - mix.s_alpha.matrix[0, 0] == pytest.approx(0.5, rel=1e-14)


def test_swap_symmetry(rng):
    r0, r1 = random_relative(rng, 6), random_relative(rng, 6)
    a = interpolate_relative(r0, r1, 0.3)
    b = interpolate_relative(r1, r0, 0.7)
    assert np.allclose(a.s_alpha.matrix, b.s_alpha.matrix, atol=1e-10)
    assert np.allclose(a.u_alpha, b.u_alpha, atol=1e-10)
    assert a.log_z == pytest.approx(b.log_z, abs=1e-10)


def test_alpha_out_of_range(rng):
    r = random_relative(rng, 2)
    with pytest.raises(DomainViolation):
        interpolate_relative(r, r, 1.5)


def test_log_z_equal_inputs(rng):
    r = random_relative(rng, 4)
    assert log_normalizing_factor(r, r, 0.4) == pytest.approx(0.0, abs=1e-12)


def test_log_z_1d_bhattacharyya():
    # Z = int (p0 p1)^{1/2} for N(0,1), N(0,2): sqrt(2 sqrt(2) / 3).
    r0 = RelativeGaussian([0.0], [[0.0]])
    r1 = RelativeGaussian([0.0], [[-1.0]])
    ref = 0.5 * math.log(2 * math.sqrt(2) / 3)
    assert log_normalizing_factor(r0, r1, 0.5) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(-0.0294458, abs=1e-7)


def test_log_z_quadrature_1d():
    z = quadrature_z(0.0, -1.0, 0.0, 0.0, 0.5)
    r0 = RelativeGaussian([0.0], [[0.0]])
    r1 = RelativeGaussian([0.0], [[-1.0]])
    assert math.exp(log_normalizing_factor(r0, r1, 0.5)) == pytest.approx(z, abs=1e-8)


def test_log_z_forms_agree(rng):
    for _ in range(10):
        r0, r1 = random_relative(rng, 7), random_relative(rng, 7)
        a = rng.uniform()
        hs = log_normalizing_factor(r0, r1, a, form="hs")
        tr = log_normalizing_factor(r0, r1, a, form="trace")
        assert hs == pytest.approx(tr, abs=1e-9)


def test_log_z_unknown_form(rng):
    r = random_relative(rng, 2)
    with pytest.raises(ValueError):
        log_normalizing_factor(r, r, 0.5, form="det")


def test_log_z_det_part_bound(rng):
    r0, r1 = random_relative(rng, 5), random_relative(rng, 5)
    a = 0.3
    w, v = np.linalg.eigh(np.eye(5) - r1.s.matrix)
    root_inv = (v / np.sqrt(w)) @ v.T
    amat = root_inv @ (r1.s.matrix - r0.s.matrix) @ root_inv
    det_part = -0.5 * mixture_log_det(amat, a)
    _, hs, _ = norms(amat)
    bound = a * (1 - a) * np.linalg.norm(np.linalg.inv(np.eye(5) + amat), 2) * hs**2
    assert -0.5 * bound - 1e-15 <= det_part <= 0.0


def test_log_mix_term_series_matches_direct():
    a = np.array([-9e-3, -1e-4, 1e-6, 5e-3, 9.9e-3])
    for alpha in (0.1, 0.5, 0.83):
        direct = np.log((1 - alpha) * (1 + a) ** -alpha + alpha * (1 + a) ** (1 - alpha))
        assert np.allclose(_log_mix_term(a, alpha), direct, rtol=1e-9, atol=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_mixture_log_det_bound(n, seed, alpha):
    rng = np.random.default_rng(seed)
    q = random_orthogonal(rng, n)
    lam = rng.uniform(-0.95, 4.0, n)
    a = (q * lam) @ q.T
    val = mixture_log_det(a, alpha)
    _, hs, _ = norms(a)
    bound = alpha * (1 - alpha) * np.linalg.norm(np.linalg.inv(np.eye(n) + a), 2) * hs**2
    assert 0.0 <= val <= bound * (1 + 1e-12) + 1e-300


def test_interpolate_finite_endpoints(rng):
    m0, m1 = rng.standard_normal(3), rng.standard_normal(3)
    c0, c1 = random_spd(rng, 3), random_spd(rng, 3)
    m, c = interpolate_finite(m0, c0, m1, c1, 0.0)
    assert np.array_equal(m, m0) and np.array_equal(c.matrix, 0.5 * (c0 + c0.T))


def test_interpolate_finite_equal_cov(rng):
    c = random_spd(rng, 4)
    m0, m1 = rng.standard_normal(4), rng.standard_normal(4)
    m, ca = interpolate_finite(m0, c, m1, c, 0.25)
    assert np.allclose(ca.matrix, c, atol=1e-12)
    assert np.allclose(m, 0.75 * m0 + 0.25 * m1, atol=1e-12)


def test_interpolate_finite_matches_relative(rng):
    base = BaseMeasure.standard(5)
    r0, r1 = random_relative(rng, 5), random_relative(rng, 5)
    mu0, mu1 = from_relative(r0, base), from_relative(r1, base)
    m, c = interpolate_finite(mu0.mean, mu0.cov, mu1.mean, mu1.cov, 0.6)
    ref = from_relative(interpolate_relative(r0, r1, 0.6).relative, base)
    assert np.allclose(m, ref.mean, atol=1e-9)
    assert np.allclose(c.matrix, ref.cov.matrix, atol=1e-9)


def test_mixture_is_still_equivalent(rng):
    base = BaseMeasure.diagonal([1.0, 0.2, 0.05])
    r0, r1 = random_relative(rng, 3, lo=0.01), random_relative(rng, 3, hi=40.0)
    mix = interpolate_relative(r0, r1, 0.5)
    assert np.linalg.eigvalsh(np.eye(3) - mix.s_alpha.matrix).min() > 0
    to_relative(from_relative(mix.relative, base), base)
