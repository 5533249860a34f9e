import math

import numpy as np
import pytest
from scipy import stats

from gaussdiv import (
    BaseMeasure,
    DomainViolation,
    RelativeGaussian,
    from_relative,
    gaussian_exp_quadratic,
    kl_exact,
    log_density,
    log_density_form,
    log_density_inner_product,
    mc_expectation,
    to_relative,
    white_noise,
)

from conftest import random_measure, random_relative


def _logpdf(rel, base):
    mu = from_relative(rel, base)
    return stats.multivariate_normal(mean=mu.mean, cov=mu.cov.matrix).logpdf


def base_logpdf(base):
    return stats.multivariate_normal(mean=base.mean, cov=base.measure.cov.matrix).logpdf


def test_same_covariance_at_base_mean():
    base = BaseMeasure.standard(1)
    rel = RelativeGaussian([1.0], [[0.0]])
    assert log_density(rel, base, [0.0]) == pytest.approx(-0.5, rel=1e-15)


def test_base_against_itself(rng):
    base = BaseMeasure(random_measure(rng, 4))
    x = rng.standard_normal((20, 4))
    assert np.all(log_density(RelativeGaussian.identity(4), base, x) == 0.0)


def test_form_fields(rng):
    rel = random_relative(rng, 3)
    form = log_density_form(rel)
    i_s = np.eye(3) - rel.s.matrix
    assert np.allclose(form.quad.matrix, rel.s.matrix @ np.linalg.inv(i_s), atol=1e-12)
    assert np.allclose(form.lin, np.linalg.solve(i_s, rel.u), atol=1e-12)
    ref = -0.5 * np.linalg.slogdet(i_s)[1] - 0.5 * rel.u @ np.linalg.solve(i_s, rel.u)
    assert form.const_term == pytest.approx(ref, abs=1e-12)
    assert form.trace_s == pytest.approx(np.trace(rel.s.matrix))


def test_matches_scipy_ratio(rng):
    base = BaseMeasure(random_measure(rng, 5))
    rel = random_relative(rng, 5)
    x = base.unwhiten(rng.standard_normal((100, 5)))
    ref = _logpdf(rel, base)(x) - base_logpdf(base)(x)
    assert np.allclose(log_density(rel, base, x), ref, atol=1e-8)


def test_chain_rule(rng):
    # log dmu1/dmu2 = log dmu1/dmu* - log dmu2/dmu*, independent of the base.
    b1 = BaseMeasure(random_measure(rng, 4))
    b2 = BaseMeasure(random_measure(rng, 4))
    mu1, mu2 = random_measure(rng, 4), random_measure(rng, 4)
    x = b1.unwhiten(rng.standard_normal((100, 4)))

    def ratio(b):
        return log_density(to_relative(mu1, b), b, x) - log_density(to_relative(mu2, b), b, x)

    assert np.allclose(ratio(b1), ratio(b2), atol=1e-8)


def test_scalar_point_returns_float(rng):
    base = BaseMeasure.standard(2)
    assert isinstance(log_density(random_relative(rng, 2), base, [0.1, 0.2]), float)


def test_rejects_non_equivalent():
    with pytest.raises(DomainViolation):
        RelativeGaussian([0.0], [[1.0]])


def test_inner_product_zero():
    z = RelativeGaussian.identity(3)
    assert log_density_inner_product(z, z, z) == 0.0


def test_inner_product_scalar_case():
    s = 0.5
    r = RelativeGaussian([0.0], [[s]])
    nu = RelativeGaussian.identity(1)
    ref = 0.5 * (s / (1 - s)) ** 2 + 0.25 * (1 + math.log(0.5)) ** 2
    val = log_density_inner_product(r, r, nu)
    assert val == pytest.approx(ref, rel=1e-13)
    assert val == pytest.approx(0.52354, abs=1e-5)


def test_inner_product_symmetric(rng):
    r1, r2, nu = (random_relative(rng, 4) for _ in range(3))
    assert log_density_inner_product(r1, r2, nu) == pytest.approx(
        log_density_inner_product(r2, r1, nu), rel=1e-12
    )


def test_l2_distance_from_inner_products(rng):
    r1, r2, nu = (random_relative(rng, 4) for _ in range(3))

    def dist2(a, b):
        ip = log_density_inner_product
        return ip(a, a, nu) - 2 * ip(a, b, nu) + ip(b, b, nu)

    assert dist2(r1, r2) > 0
    assert dist2(r1, r1) == pytest.approx(0.0, abs=1e-12)


def test_inner_product_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        log_density_inner_product(random_relative(rng, 2), random_relative(rng, 2), random_relative(rng, 3))


def test_inner_product_mc_nonzero_means(rng):
    base = BaseMeasure.diagonal([1.0, 0.4], mean=[0.3, -0.1])
    r1 = RelativeGaussian([0.4, -0.2], [[0.3, 0.1], [0.1, -0.2]])
    r2 = RelativeGaussian([-0.3, 0.1], [[-0.1, 0.05], [0.05, 0.25]])
    nu = RelativeGaussian([0.2, 0.3], [[0.1, 0.0], [0.0, -0.3]])
    p1, p2, pb = _logpdf(r1, base), _logpdf(r2, base), base_logpdf(base)

    def f(x):
        lb = pb(x)
        return (p1(x) - lb) * (p2(x) - lb)

    est = mc_expectation(f, from_relative(nu, base), 1_000_000, 42)
    assert est.agrees(log_density_inner_product(r1, r2, nu, base))


def test_kl_is_mean_log_density(rng):
    base = BaseMeasure.diagonal([1.0, 0.5, 0.2])
    nu, mu = random_relative(rng, 3), random_relative(rng, 3)
    p_nu, p_mu = _logpdf(nu, base), _logpdf(mu, base)
    est = mc_expectation(lambda x: p_nu(x) - p_mu(x), from_relative(nu, base), 500_000, 42)
    assert est.agrees(kl_exact(nu, mu).value)


def test_exp_quadratic_trivial():
    assert gaussian_exp_quadratic(np.zeros((2, 2)), np.zeros(2)) == 0.0
    g = np.array([0.3, -1.2])
    assert gaussian_exp_quadratic(np.zeros((2, 2)), g) == pytest.approx(0.5 * g @ g, rel=1e-15)


def test_exp_quadratic_scalar():
    val = gaussian_exp_quadratic([[0.5]], [1.0])
    assert val == pytest.approx(-0.5 * math.log(0.5) + 1.0, rel=1e-14)
    assert val == pytest.approx(1.346574, abs=5e-7)


def test_exp_quadratic_divergent():
    with pytest.raises(DomainViolation):
        gaussian_exp_quadratic([[1.0]], [0.0])


def test_exp_quadratic_dimension_check():
    with pytest.raises(ValueError):
        gaussian_exp_quadratic(np.zeros((2, 2)), np.zeros(3))


def test_white_noise_at_mean(rng):
    base = BaseMeasure(random_measure(rng, 3))
    assert white_noise(rng.standard_normal(3), base, base.mean) == 0.0


def test_white_noise_linear(rng):
    base = BaseMeasure(random_measure(rng, 4))
    z1, z2 = rng.standard_normal(4), rng.standard_normal(4)
    x = rng.standard_normal((10, 4))
    lhs = white_noise(2.0 * z1 - z2, base, x)
    rhs = 2.0 * white_noise(z1, base, x) - white_noise(z2, base, x)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_white_noise_isometry_case(rng):
    mu = random_measure(rng, 4)
    base = BaseMeasure(mu)
    v = rng.standard_normal(4)
    lam, vec = np.linalg.eigh(mu.cov.matrix)
    z = (vec * np.sqrt(lam)) @ vec.T @ v
    x = rng.standard_normal(4)
    assert white_noise(z, base, x) == pytest.approx(float((x - mu.mean) @ v), abs=1e-10)
