"""
Geometric Jensen-Shannon divergence in one dimension
====================================================

Two centred Gaussians, variances 1 and 2, compared three ways.
"""

import numpy as np

import gaussdiv as gd

# the finite-dimensional formula works on means and covariances directly
fin = gd.js_geometric_finite([0.0], [[1.0]], [0.0], [[2.0]], alpha=0.5)
print("finite  ", fin.value)

# the same pair relative to a N(0, 1) base: C = 1 - S, so S0 = 0 and S1 = -1
r0 = gd.RelativeGaussian([0.0], [[0.0]])
r1 = gd.RelativeGaussian([0.0], [[-1.0]])
ex = gd.js_geometric_exact(r0, r1, alpha=0.5)
print("exact   ", ex.value)
print("terms   ", ex.mean_term, ex.det_term, ex.trace_term)

# the geometric mixture is the harmonic mean of the variances, 4/3 here
mix = gd.interpolate_relative(r0, r1, 0.5)
print("C_alpha ", 1.0 - mix.s_alpha.matrix[0, 0])
print("log Z   ", mix.log_z, "quadrature", np.log(gd.quadrature_z(0.0, -1.0, 0.0, 0.0, 0.5)))

# the regularized divergence needs no base and tends to the exact value
mu0 = gd.GaussianMeasure.centered([[1.0]])
mu1 = gd.GaussianMeasure.centered([[2.0]])
table = gd.gamma_limit_study(mu0, mu1, 0.5, [10.0**-k for k in range(1, 9)])
for row in table.rows:
    print(f"gamma={row.gamma:.0e}  JS={row.value:.12f}  err={row.abs_error:.2e}")

# it also accepts mutually singular pairs, where the exact divergence is undefined
sing0 = gd.GaussianMeasure.centered(np.diag([1.0, 0.0]))
sing1 = gd.GaussianMeasure.centered(np.diag([0.0, 1.0]))
for g in (1e-1, 1e-2, 1e-3):
    print("singular pair, gamma", g, gd.js_regularized(sing0, sing1, 0.5, g).value)

# swapping the measures and the weight leaves the value unchanged
print(gd.js_geometric_exact(r0, r1, 0.3).value, gd.js_geometric_exact(r1, r0, 0.7).value)
