"""Weighted geometric mixtures of Gaussian measures.

For two measures equivalent to a common base, the normalized geometric mean
``p0^{1-alpha} p1^alpha / Z`` of their densities is again Gaussian, with
precision-weighted (harmonic-mean) covariance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation
from .gaussian import RelativeGaussian
from .spectral import SymOperator, as_operator, eig_sym, pd_tolerance

__all__ = [
    "MixtureResult",
    "interpolate_relative",
    "log_normalizing_factor",
    "mixture_log_det",
    "interpolate_finite",
]


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainViolation(f"alpha must lie in [0, 1], got {alpha!r}", quantity="alpha", value=alpha)
    return alpha


def _spd_inverse(mat, what):
    dec = eig_sym(mat)
    lam = dec.values
    if lam[-1] <= pd_tolerance(lam[0]):
        raise DomainViolation(
            f"{what} is not positive definite: smallest eigenvalue {lam[-1]:.6g}",
            quantity=f"min eig({what})",
            value=float(lam[-1]),
        )
    inv = dec.apply(lambda x: 1.0 / x)
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True, eq=False)
class MixtureResult:
    """Geometric mixture ``mu_alpha`` in base-relative form plus ``log Z``."""

    alpha: float
    s_alpha: SymOperator
    u_alpha: np.ndarray
    log_z: float

    @property
    def relative(self):
        return RelativeGaussian(self.u_alpha, self.s_alpha)


def _mixture_parts(r0, r1, alpha):
    n = r0.dim
    eye = np.eye(n)
    p0 = _spd_inverse(eye - r0.s.matrix, "I - S0")
    p1 = _spd_inverse(eye - r1.s.matrix, "I - S1")
    h = (1.0 - alpha) * p0 + alpha * p1
    h_inv = _spd_inverse(h, "(1-a)(I-S0)^-1 + a(I-S1)^-1")
    rhs = (1.0 - alpha) * (p0 @ r0.u) + alpha * (p1 @ r1.u)
    return eye - h_inv, h_inv @ rhs, p0, p1


def interpolate_relative(r0, r1, alpha, *, with_log_z=True):
    """Geometric interpolation of two measures given relative to the same base.

    ``S_alpha = I - [(1-alpha)(I-S0)^{-1} + alpha(I-S1)^{-1}]^{-1}`` and
    ``u_alpha = (I - S_alpha)[(1-alpha)(I-S0)^{-1}u0 + alpha(I-S1)^{-1}u1]``.
    The endpoints ``alpha in {0, 1}`` return the corresponding input unchanged.
    """
    alpha = _check_alpha(alpha)
    if r0.dim != r1.dim:
        raise ValueError(f"dimension mismatch: {r0.dim} vs {r1.dim}")
    log_z = log_normalizing_factor(r0, r1, alpha) if with_log_z else float("nan")
    if alpha == 0.0:
        return MixtureResult(alpha, r0.s, r0.u, log_z)
    if alpha == 1.0:
        return MixtureResult(alpha, r1.s, r1.u, log_z)
    s_alpha, u_alpha, _, _ = _mixture_parts(r0, r1, alpha)
    u_alpha.flags.writeable = False
    return MixtureResult(alpha, SymOperator(s_alpha), u_alpha, log_z)


def _log_mix_term(a, alpha):
    """``log[(1-alpha)(1+a)^{-alpha} + alpha(1+a)^{1-alpha}] = log1p(alpha a) - alpha log1p(a)``."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    small = np.abs(a) < 1e-2
    xs = a[small]
    acc = np.zeros_like(xs)
    power = xs * xs
    for k in range(2, 14):
        sign = -1.0 if k % 2 == 0 else 1.0
        acc += sign * (alpha**k - alpha) * power / k
        power = power * xs
    out[small] = acc
    big = a[~small]
    out[~small] = np.log1p(alpha * big) - alpha * np.log1p(big)
    return out


def mixture_log_det(a, alpha):
    """``log det[(1-alpha)(I+A)^{-alpha} + alpha(I+A)^{1-alpha}]`` from the spectrum of ``A``.

    Non-negative for symmetric ``A`` with ``I + A > 0``.
    """
    alpha = _check_alpha(alpha)
    lam = eig_sym(a).values
    if 1.0 + lam[-1] <= pd_tolerance(np.max(np.abs(lam))):
        raise DomainViolation(
            f"I + A is not positive definite: smallest eigenvalue {1.0 + lam[-1]:.6g}",
            quantity="min eig(I + A)",
            value=float(1.0 + lam[-1]),
        )
    return float(np.sum(_log_mix_term(lam, alpha)))


def _quadratic(precision, v):
    # ||M^{-1/2} v||^2 written as <v, M^{-1} v>.
    return float(v @ precision @ v)


def _log_det_spd(mat, what):
    lam = eig_sym(mat).values
    if lam[-1] <= pd_tolerance(lam[0]):
        raise DomainViolation(
            f"{what} is not positive definite", quantity=f"min eig({what})", value=float(lam[-1])
        )
    return float(np.sum(np.log(lam)))


def log_normalizing_factor(r0, r1, alpha, form="hs"):
    """``log Z`` where ``Z = int p0^{1-alpha} p1^alpha dmu*``.

    Parameters
    ----------
    r0, r1 : RelativeGaussian
        Measures relative to a common base.
    alpha : float
        Weight in [0, 1].
    form : {"hs", "trace"}
        ``"hs"`` uses the determinant of
        ``(1-alpha)(I+A)^{-alpha} + alpha(I+A)^{1-alpha}`` with
        ``I + A = (I-S1)^{-1/2}(I-S0)(I-S1)^{-1/2}``, valid for Hilbert-Schmidt
        ``S_i``. ``"trace"`` uses the Fredholm determinants of ``I - S0``,
        ``I - S1`` and ``I - S_alpha`` separately.
    """
    alpha = _check_alpha(alpha)
    n = r0.dim
    eye = np.eye(n)
    s_alpha, u_alpha, p0, p1 = _mixture_parts(r0, r1, alpha)
    p_alpha = _spd_inverse(eye - s_alpha, "I - S_alpha")
    exponent = (
        -0.5 * (1.0 - alpha) * _quadratic(p0, r0.u)
        - 0.5 * alpha * _quadratic(p1, r1.u)
        + 0.5 * _quadratic(p_alpha, u_alpha)
    )
    if form == "trace":
        det_part = (
            -0.5 * (1.0 - alpha) * _log_det_spd(eye - r0.s.matrix, "I - S0")
            - 0.5 * alpha * _log_det_spd(eye - r1.s.matrix, "I - S1")
            + 0.5 * _log_det_spd(eye - s_alpha, "I - S_alpha")
        )
    elif form == "hs":
        dec1 = eig_sym(eye - r1.s.matrix)
        root_inv = dec1.apply(lambda x: 1.0 / np.sqrt(x))
        a = root_inv @ (r1.s.matrix - r0.s.matrix) @ root_inv
        det_part = -0.5 * mixture_log_det(as_operator(a), alpha)
    else:
        raise ValueError(f"unknown form {form!r}")
    return det_part + exponent


def interpolate_finite(m0, c0, m1, c1, alpha):
    """Finite-dimensional geometric mixture of ``N(m0, C0)`` and ``N(m1, C1)``.

    Returns
    -------
    (m_alpha, C_alpha) : (ndarray, SymOperator)
        ``C_alpha = [(1-alpha)C0^{-1} + alpha C1^{-1}]^{-1}`` and
        ``m_alpha = C_alpha[(1-alpha)C0^{-1}m0 + alpha C1^{-1}m1]``.
    """
    alpha = _check_alpha(alpha)
    c0 = as_operator(c0)
    c1 = as_operator(c1)
    m0 = np.asarray(m0, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    q0 = _spd_inverse(c0.matrix, "C0")
    q1 = _spd_inverse(c1.matrix, "C1")
    if alpha == 0.0:
        return m0.copy(), c0
    if alpha == 1.0:
        return m1.copy(), c1
    c_alpha = _spd_inverse((1.0 - alpha) * q0 + alpha * q1, "mixture precision")
    m_alpha = c_alpha @ ((1.0 - alpha) * (q0 @ m0) + alpha * (q1 @ m1))
    return m_alpha, SymOperator(c_alpha)
