import numpy as np
import pytest

from gaussdiv import (
    BaseMeasure,
    ConfigError,
    DomainViolation,
    GaussianMeasure,
    NotEquivalent,
    RelativeGaussian,
    equivalence_diagnostics,
    from_relative,
    kernel_covariance,
    project,
    sample,
    to_relative,
    truncate_relative,
)
from gaussdiv.gaussian import SHARD_SIZE

from conftest import random_measure, random_spd


def test_measure_rejects_indefinite():
    with pytest.raises(DomainViolation):
        GaussianMeasure([0.0, 0.0], np.diag([1.0, -0.1]))


def test_base_rejects_degenerate():
    with pytest.raises(DomainViolation):
        BaseMeasure.from_arrays([0.0, 0.0], np.diag([1.0, 0.0]))


def test_relative_requires_i_minus_s_positive():
    with pytest.raises(NotEquivalent):
        RelativeGaussian([0.0], [[1.0]])


def test_to_relative_of_base(rng):
    base = BaseMeasure(random_measure(rng, 4))
    rel = to_relative(base.measure, base)
    assert np.allclose(rel.u, 0.0, atol=1e-12)
    assert np.allclose(rel.s.matrix, 0.0, atol=1e-12)


def test_to_relative_half_covariance(rng):
    base = BaseMeasure(random_measure(rng, 5))
    mu = GaussianMeasure(base.mean, 0.5 * base.measure.cov.matrix)
    rel = to_relative(mu, base)
    assert np.allclose(rel.s.matrix, 0.5 * np.eye(5), atol=1e-10)
    assert np.allclose(rel.u, 0.0)


def test_round_trip(rng):
    base = BaseMeasure(random_measure(rng, 6))
    mu = random_measure(rng, 6)
    back = from_relative(to_relative(mu, base), base)
    assert np.linalg.norm(back.cov.matrix - mu.cov.matrix, 2) <= 1e-9
    assert np.linalg.norm(back.mean - mu.mean) <= 1e-9
    rel = to_relative(mu, base)
    again = to_relative(from_relative(rel, base), base)
    assert np.allclose(again.s.matrix, rel.s.matrix, atol=1e-9)
    assert np.allclose(again.u, rel.u, atol=1e-9)


def test_singular_measure_not_equivalent():
    base = BaseMeasure.standard(2)
    with pytest.raises(NotEquivalent):
        to_relative(GaussianMeasure.centered(np.diag([1.0, 0.0])), base)


def test_norm_identity(rng):
    base = BaseMeasure(random_measure(rng, 5))
    mu = random_measure(rng, 5)
    rel = to_relative(mu, base)
    x = rng.standard_normal(5)
    lhs = np.sqrt(x @ np.linalg.solve(mu.cov.matrix, x))
    w = (base.basis.T @ x) / np.sqrt(base.eigenvalues)
    rhs = np.sqrt(w @ np.linalg.solve(np.eye(5) - rel.s.matrix, w))
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_relative_s_symmetric(rng):
    rel = to_relative(random_measure(rng, 6), BaseMeasure(random_measure(rng, 6)))
    assert np.array_equal(rel.s.matrix, rel.s.matrix.T)
    assert np.linalg.eigvalsh(np.eye(6) - rel.s.matrix).min() > 0


def test_whiten_unwhiten(rng):
    base = BaseMeasure(random_measure(rng, 4))
    x = rng.standard_normal((3, 4))
    assert np.allclose(base.unwhiten(base.whiten(x)), x)


def test_truncate_and_project(rng):
    base = BaseMeasure.diagonal([1.0, 0.5, 0.25, 0.125])
    mu = random_measure(rng, 4)
    rel = to_relative(mu, base)
    small, small_base = project(mu, base, 2)
    rel2 = to_relative(small, small_base)
    assert np.allclose(truncate_relative(rel, 2).s.matrix, rel2.s.matrix)
    assert np.allclose(truncate_relative(rel, 2).u, rel2.u)


def test_diagnostics_of_base(rng):
    base = BaseMeasure(random_measure(rng, 8))
    rep = equivalence_diagnostics(base.measure, base)
    assert rep.picard_sum == pytest.approx(0.0, abs=1e-20)
    assert rep.hs_norm_s == pytest.approx(0.0, abs=1e-10)
    assert rep.ok


def test_diagnostics_picard_exact():
    lam = 1.0 / np.arange(1, 17) ** 2
    base = BaseMeasure.diagonal(lam)
    v = np.linspace(1.0, 0.0, 16) ** 3
    mu = GaussianMeasure(np.sqrt(lam) * v, np.diag(lam))
    rep = equivalence_diagnostics(mu, base)
    assert rep.picard_sum == pytest.approx(v @ v, rel=1e-12)


def test_diagnostics_flags_non_decaying_mean():
    n = 64
    lam = 1.0 / np.arange(1, n + 1) ** 2
    base = BaseMeasure.diagonal(lam)
    mu = GaussianMeasure(np.ones(n), np.diag(lam))
    rep = equivalence_diagnostics(mu, base)
    assert np.all(np.diff(rep.picard_sums) > 0)
    assert any("Picard" in w for w in rep.warnings)


def test_diagnostics_flags_singular_cov():
    base = BaseMeasure.standard(3)
    rep = equivalence_diagnostics(GaussianMeasure.centered(np.diag([1.0, 1.0, 0.0])), base)
    assert rep.min_eig_i_minus_s <= 1e-12
    assert not rep.ok


def test_sample_shapes_and_degenerate():
    mu = GaussianMeasure([1.0, -2.0], np.zeros((2, 2)))
    assert sample(mu, 0, 1).shape == (0, 2)
    draws = sample(mu, 10, 1)
    assert np.all(draws == [1.0, -2.0])


def test_sample_deterministic_and_sharded():
    mu = GaussianMeasure.centered(np.eye(2))
    a = sample(mu, SHARD_SIZE + 10, seed=3)
    b = sample(mu, SHARD_SIZE + 10, seed=3)
    assert np.array_equal(a, b)
    # The first shard does not depend on the total count.
    assert np.array_equal(sample(mu, 100, seed=3), a[:100])
    assert not np.array_equal(sample(mu, 100, seed=4), a[:100])


def test_sample_covariance():
    c = np.diag([1.0, 0.5, 2.0])
    x = sample(GaussianMeasure.centered(c), 1_000_000, seed=42)
    emp = np.cov(x, rowvar=False)
    # Var of a sample covariance entry is (C_ii C_jj + C_ij^2) / n.
    se = np.sqrt((np.outer(np.diag(c), np.diag(c)) + c**2) / x.shape[0])
    assert np.all(np.abs(emp - c) <= 4 * se)


def test_kernel_single_point():
    k = kernel_covariance("rbf", [0.3], scale=2.0)
    assert k.matrix.shape == (1, 1)
    assert k.matrix[0, 0] == pytest.approx(2.0)


def test_kernel_long_length_scale_rank_one():
    k = kernel_covariance("rbf", np.linspace(0, 1, 8), length_scale=1e8).matrix
    assert np.allclose(k, k[0, 0], rtol=1e-9)
    assert np.linalg.matrix_rank(k, tol=1e-9) == 1


def test_kernel_trace_stable():
    def tr(n):
        return np.trace(kernel_covariance("matern32", (np.arange(n) + 0.5) / n).matrix)

    assert tr(64) == pytest.approx(tr(32), rel=1e-2)


def test_kernel_psd():
    lam = np.linalg.eigvalsh(kernel_covariance("rbf", np.linspace(0, 1, 50)).matrix)
    assert lam.min() >= -1e-12 * lam.max()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kernel="rbf", grid=[]),
        dict(kernel="laplace", grid=[0.1]),
        dict(kernel="rbf", grid=[0.5, 0.2]),
        dict(kernel="rbf", grid=[0.1], scale=-1.0),
    ],
)
def test_kernel_config_errors(kwargs):
    with pytest.raises(ConfigError):
        kernel_covariance(**kwargs)


def test_measure_equality(rng):
    c = random_spd(rng, 3)
    assert GaussianMeasure.centered(c) == GaussianMeasure.centered(c.copy())
    assert GaussianMeasure.centered(c) != GaussianMeasure([1.0, 0, 0], c)
