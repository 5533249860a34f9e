"""
Truncating Matern kernel measures
=================================

Gaussian-process priors on a grid, compared on the leading eigenvectors of
a base kernel.
"""

import numpy as np

import gaussdiv as gd

grid = (np.arange(128) + 0.5) / 128
base = gd.BaseMeasure.from_arrays(np.zeros(128), gd.kernel_covariance("matern32", grid, length_scale=0.2).matrix)

# scale = (l / l*)^3 keeps the two measures equivalent to the base
mu0 = gd.GaussianMeasure.centered(gd.kernel_covariance("matern32", grid, scale=1.953125, length_scale=0.25))
mu1 = gd.GaussianMeasure.centered(gd.kernel_covariance("matern32", grid, scale=0.421875, length_scale=0.15))

# eigenvalues of S should decay; a plateau is a sign of non-equivalence
diag = gd.equivalence_diagnostics(mu0, base)
print("HS norm of S     ", diag.hs_norm_s)
print("trace norm of S  ", diag.trace_norm_s)
print("min eig (I - S)  ", diag.min_eig_i_minus_s)

values = {}
for n in (8, 16, 32, 64, 128):
    m0, b = gd.project(mu0, base, n)
    m1, _ = gd.project(mu1, base, n)
    values[n] = gd.js_geometric_exact(m0, m1, 0.5, b).value
for n, v in values.items():
    print(f"N={n:4d}  JS={v:.10f}  gap to N=128: {abs(v - values[128]):.2e}")

# the log-density form exposes tr S, which must stay bounded as N grows
for n in (16, 64, 128):
    m0, b = gd.project(mu0, base, n)
    form = gd.log_density_form(gd.to_relative(m0, b))
    print(n, "tr S =", form.trace_s, " tr S(I-S)^-1 =", form.trace_t)
