import sys

import numpy as np
import pytest

from gaussdiv import GaussianMeasure, RelativeGaussian


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, cond=1e2):
    lam = np.exp(rng.uniform(0.0, np.log(cond), n))
    lam /= lam.max()
    q = random_orthogonal(rng, n)
    return (q * lam) @ q.T


def random_sym(rng, n, scale=1.0):
    b = rng.standard_normal((n, n))
    return scale * (b + b.T) / 2


def random_relative(rng, n, lo=0.2, hi=1.8, mean_scale=0.3):
    """RelativeGaussian whose I - S has spectrum in [lo, hi]."""
    q = random_orthogonal(rng, n)
    lam = rng.uniform(lo, hi, n)
    s = np.eye(n) - (q * lam) @ q.T
    return RelativeGaussian(mean_scale * rng.standard_normal(n), s)


def random_measure(rng, n, cond=1e2, mean_scale=1.0):
    return GaussianMeasure(mean_scale * rng.standard_normal(n), random_spd(rng, n, cond))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(verdicts):
        terminalreporter.write_line(verdicts[k])
