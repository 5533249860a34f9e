"""Radon-Nikodym log-densities of Gaussian measures equivalent to a base.

All evaluations go through whitened coordinates ``w = C*^{-1/2}(x - m*)``
taken in the truncated eigenbasis of the base covariance.
"""

from dataclasses import dataclass

import numpy as np

from .determinants import carleman_log_det2, fredholm_log_det
from .mixture import _spd_inverse
from .spectral import SymOperator, as_operator, eig_sym

__all__ = [
    "LogDensityForm",
    "log_density_form",
    "log_density",
    "log_density_inner_product",
    "gaussian_exp_quadratic",
    "white_noise",
]


@dataclass(frozen=True)
class LogDensityForm:
    """Quadratic form of ``log dmu/dmu*`` in whitened coordinates.

    ``log dmu/dmu*(w) = -1/2 <w, quad w> + <w, lin> + const_term``.

    ``trace_s`` and ``trace_t`` hold ``tr S`` and ``tr S(I-S)^{-1}``, the
    terms that stay bounded only when ``S`` is trace class; they are reported
    so their growth with the truncation can be tracked.
    """

    quad: SymOperator
    lin: np.ndarray
    const_term: float
    trace_s: float
    trace_t: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        q = np.einsum("...i,ij,...j->...", w, self.quad.matrix, w)
        return -0.5 * q + w @ self.lin + self.const_term


def log_density_form(rel):
    """Coefficients of the log-density of ``rel`` with respect to its base."""
    n = rel.dim
    s = rel.s.matrix
    p = _spd_inverse(np.eye(n) - s, "I - S")
    t = p - np.eye(n)
    lin = p @ rel.u
    log_det = float(np.sum(np.log(eig_sym(np.eye(n) - s).values)))
    const = -0.5 * log_det - 0.5 * float(rel.u @ lin)
    return LogDensityForm(SymOperator(t), lin, const, float(np.trace(s)), float(np.trace(t)))


def log_density(rel, base, x):
    """``log dmu/dmu*(x)`` for ``mu`` described by ``rel`` relative to ``base``.

    Parameters
    ----------
    rel : RelativeGaussian
    base : BaseMeasure
    x : array_like, shape (N,) or (k, N)
        Points in ambient coordinates.

    Returns
    -------
    float or ndarray
    """
    out = log_density_form(rel)(base.whiten(x))
    return float(out) if np.ndim(out) == 0 else out


def log_density_inner_product(r1, r2, nu, base=None):
    """``<log dmu1/dmu*, log dmu2/dmu*>`` in ``L^2(nu)``.

    Closed form with ``T_i = S_i(I-S_i)^{-1}``, ``P_i = (I-S_i)^{-1}`` and
    ``R = I - S_nu``::

        1/2 tr(R T1 R T2) + <P1 u1 - T1 u_nu, R (P2 u2 - T2 u_nu)> + 1/4 c1 c2

    where ``c_i = <u_nu, T_i u_nu> - 2<P_i u_i, u_nu> - tr(S_nu T_i)
    - log det2(P_i) + <u_i, P_i u_i>`` is ``-2`` times the mean of
    ``log dmu_i/dmu*`` under ``nu``.

    ``base`` is accepted for symmetry with the other density functions; the
    result depends only on the relative parameters.
    """
    n = nu.dim
    if r1.dim != n or r2.dim != n:
        raise ValueError("dimension mismatch between r1, r2 and nu")
    r = np.eye(n) - nu.s.matrix
    u_nu = nu.u

    def parts(rel):
        p = _spd_inverse(np.eye(n) - rel.s.matrix, "I - S")
        t = p - np.eye(n)
        pu = p @ rel.u
        c = (
            float(u_nu @ t @ u_nu)
            - 2.0 * float(pu @ u_nu)
            - float(np.sum(nu.s.matrix * t))
            - carleman_log_det2(SymOperator(t))
            + float(rel.u @ pu)
        )
        return t, pu - t @ u_nu, c

    t1, v1, c1 = parts(r1)
    t2, v2, c2 = parts(r2)
    trace_block = 0.5 * float(np.sum((r @ t1) * (t2 @ r)))
    return trace_block + float(v1 @ r @ v2) + 0.25 * c1 * c2


def gaussian_exp_quadratic(a, b, mu=None):
    """Log of ``E_mu exp(1/2 <w, A w> + <w, b>)`` with ``w = C^{-1/2}(x - m)``.

    Equals ``-1/2 log det(I - A) + 1/2 <b, (I - A)^{-1} b>``; the value does
    not depend on ``mu`` beyond its dimension.

    Raises
    ------
    DomainViolation
        If ``I - A`` is not strictly positive, in which case the integral
        diverges.
    """
    a = as_operator(a)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != a.dim or (mu is not None and mu.dim != a.dim):
        raise ValueError("dimension mismatch between A, b and mu")
    log_det = fredholm_log_det(-1.0 * a)
    q = _spd_inverse(np.eye(a.dim) - a.matrix, "I - A")
    return -0.5 * log_det + 0.5 * float(b @ q @ b)


def white_noise(z, base, x):
    """White-noise functional ``W_z(x) = sum_k <x - m*, e_k><z, e_k> / sqrt(lambda_k)``.

    Linear in ``z`` and in ``x - m*``; ``x`` may hold several points as rows.
    """
    z = np.asarray(z, dtype=float)
    coeff = (base.basis.T @ z) / np.sqrt(base.eigenvalues)
    out = (np.asarray(x, dtype=float) - base.mean) @ base.basis @ coeff
    return float(out) if np.ndim(out) == 0 else out

