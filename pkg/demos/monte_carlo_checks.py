"""
Checking closed forms against Monte Carlo
=========================================

Every closed form in the package has an independent oracle; this walks
through a few of them by hand and then runs the full registry.
"""

import numpy as np
from scipy import stats

import gaussdiv as gd

base = gd.BaseMeasure.diagonal([1.0, 0.5, 0.25])
nu = gd.RelativeGaussian([0.3, -0.2, 0.1], np.diag([0.3, -0.5, 0.1]))
mu = gd.RelativeGaussian([0.0, 0.1, 0.0], np.diag([-0.2, 0.4, 0.25]))

# KL(nu || mu) is the nu-average of the log-likelihood ratio
g_nu, g_mu = gd.from_relative(nu, base), gd.from_relative(mu, base)
p_nu = stats.multivariate_normal(g_nu.mean, g_nu.cov.matrix)
p_mu = stats.multivariate_normal(g_mu.mean, g_mu.cov.matrix)
est = gd.mc_expectation(lambda x: p_nu.logpdf(x) - p_mu.logpdf(x), g_nu, 1_000_000, seed=42)
print("KL closed form", gd.kl_exact(nu, mu).value)
print("KL Monte Carlo", est.mean, "+/-", est.std_error)

# the density against the base integrates to one
est = gd.mc_expectation(lambda x: np.exp(gd.log_density(nu, base, x)), base.measure, 1_000_000, seed=42)
print("normalization ", est.mean, "+/-", est.std_error)

# estimates do not depend on the thread count
a = gd.mc_expectation(lambda x: x[:, 0] ** 3, g_nu, 300_000, seed=1)
b = gd.mc_expectation(lambda x: x[:, 0] ** 3, g_nu, 300_000, seed=1, threads=4)
print("bit-identical across threads:", a == b)

# the full registry, as run by `gaussdiv validate`
report = gd.run_validation(seed=42, samples=1_000_000)
print(report.format())
