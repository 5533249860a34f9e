"""Log-Det divergence between positive definite unitized trace-class operators."""

import math

import numpy as np
from scipy import linalg

from .determinants import _require_pc1, log1p_minus_x, pc1_compose
from .errors import DomainViolation
from .spectral import as_operator, eig_sym, pd_tolerance

__all__ = ["d1_logdet_extended", "d1_logdet_same_gamma", "d1_logdet_finite"]

# Smallest eigenvalue of A + gamma I accepted by the Log-Det divergences.
MIN_EIG = 1e-10


def _x_minus_one_minus_log(nu):
    # (nu - 1) - log(nu), accurate near nu = 1.
    return -log1p_minus_x(np.asarray(nu) - 1.0)


def _check_spd(mat, what):
    lam = eig_sym(mat).values
    tol = max(pd_tolerance(lam[0]), MIN_EIG)
    if lam[-1] <= tol:
        raise DomainViolation(
            f"{what} is not positive definite enough: smallest eigenvalue {lam[-1]:.6g}",
            quantity=f"min eig({what})",
            value=float(lam[-1]),
        )


def _congruent_spectrum(x_dense, y_dense):
    """Eigenvalues of ``Y^{-1/2} X Y^{-1/2}``, i.e. the spectrum of ``Y^{-1} X``."""
    nu = linalg.eigh(x_dense, y_dense, eigvals_only=True)
    if nu[0] <= 0:
        raise DomainViolation(
            "Y^{-1} X has a non-positive eigenvalue", quantity="min eig(Y^-1 X)", value=float(nu[0])
        )
    return nu


def _check_extended(x, what):
    _require_pc1(x, what)
    lam = eig_sym(x.a).values + x.gamma
    if lam[-1] <= MIN_EIG:
        raise DomainViolation(
            f"{what} has smallest eigenvalue {lam[-1]:.6g} below {MIN_EIG:g}",
            quantity=f"min eig({what})",
            value=float(lam[-1]),
        )


def d1_logdet_extended(x, y):
    """Log-Det divergence ``d^1_logdet[(A + gamma I), (B + mu I)]`` for arbitrary ``gamma, mu > 0``.

    The extended trace of ``(B + mu I)^{-1}(A + gamma I) - I`` is read off the
    composed unitized operator, so the identity contributes one and not the
    truncation dimension. The extended determinant uses the symmetrized
    spectrum of the product.
    """
    _check_extended(x, "X")
    _check_extended(y, "Y")
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    r = x.gamma / y.gamma
    prod = pc1_compose(y, x, "inverse_times")
    etr = float(np.trace(prod.a)) + prod.gamma - 1.0
    nu = _congruent_spectrum(x.dense(), y.dense())
    log_det_x = math.log(r) + float(np.sum(np.log(nu / r)))
    return (r - 1.0) * math.log(r) + etr - r * log_det_x


def same_gamma_spectrum(x, y):
    """Spectrum of ``(B + gamma I)^{-1}(A + gamma I)`` after the same-``gamma`` checks."""
    _check_extended(x, "X")
    _check_extended(y, "Y")
    if not math.isclose(x.gamma, y.gamma, rel_tol=1e-14, abs_tol=0.0):
        raise DomainViolation(
            f"gammas differ: {x.gamma!r} vs {y.gamma!r}", quantity="gamma", value=y.gamma
        )
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return _congruent_spectrum(x.dense(), y.dense())


def d1_logdet_same_gamma(x, y):
    """Log-Det divergence for a shared regularization ``gamma``.

    Reduces to ``sum_k [(nu_k - 1) - log nu_k]`` over the spectrum of
    ``(B + gamma I)^{-1}(A + gamma I)``; the complement of the truncated span
    contributes nothing.
    """
    return float(np.sum(_x_minus_one_minus_log(same_gamma_spectrum(x, y))))


def d1_logdet_finite(c1, c2):
    """``tr(C2^{-1} C1 - I) - log det(C2^{-1} C1)`` for SPD matrices."""
    c1 = as_operator(c1).matrix
    c2 = as_operator(c2).matrix
    if c1.shape != c2.shape:
        raise ValueError(f"shape mismatch: {c1.shape} vs {c2.shape}")
    _check_spd(c1, "C1")
    _check_spd(c2, "C2")
    nu = _congruent_spectrum(c1, c2)
    return float(np.sum(_x_minus_one_minus_log(nu)))
