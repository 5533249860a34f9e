"""Fredholm, Hilbert-Carleman and extended Fredholm determinants.

All determinants are returned as logarithms. Spectra are taken from the
truncated ``N x N`` block; the complement contributes a factor of one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation
from .spectral import SymOperator, as_operator, eig_sym, pd_tolerance

__all__ = [
    "ExtendedOperator",
    "log1p_minus_x",
    "fredholm_log_det",
    "carleman_log_det2",
    "extended_trace",
    "extended_log_det",
    "pc1_compose",
]

_SERIES_CUTOFF = 1e-2
_SERIES_TERMS = 12


def log1p_minus_x(x):
    """Evaluate ``log(1 + x) - x`` elementwise without cancellation.

    Small arguments go through the Taylor series, which keeps the result
    non-positive to the last bit.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = x[small]
    acc = np.zeros_like(xs)
    power = xs * xs
    for k in range(2, _SERIES_TERMS + 2):
        acc += (-1.0 if k % 2 == 0 else 1.0) * power / k
        power = power * xs
    out[small] = acc
    xb = x[~small]
    out[~small] = np.log1p(xb) - xb
    return out


def _one_plus_spectrum(a, what):
    lam = eig_sym(a).values
    tol = pd_tolerance(np.max(np.abs(lam)))
    lo = 1.0 + float(lam[-1])
    if lo <= tol:
        raise DomainViolation(
            f"I + A is not positive definite: smallest eigenvalue of {what} is {lo:.6g}",
            quantity=f"min eig({what})",
            value=lo,
        )
    return lam


def fredholm_log_det(a):
    """``log det(I + A) = sum_k log(1 + lambda_k(A))``.

    Raises
    ------
    DomainViolation
        If ``I + A`` has an eigenvalue at or below the positivity tolerance.
    """
    lam = _one_plus_spectrum(a, "I + A")
    return float(np.sum(np.log1p(lam)))


def carleman_log_det2(a):
    """Hilbert-Carleman determinant ``log det2(I + A) = sum_k [log(1 + lambda_k) - lambda_k]``.

    The sum is formed termwise, so no ``exp(-A)`` matrix is built and the
    result is ``<= 0`` for every admissible symmetric ``A``.
    """
    lam = _one_plus_spectrum(a, "I + A")
    return float(np.sum(log1p_minus_x(lam)))


@dataclass(frozen=True, eq=False)
class ExtendedOperator:
    """Unitized trace-class operator ``A + gamma * I``.

    ``a`` is the trace-class part on the truncated span. It is normally
    symmetric; products built by :func:`pc1_compose` may not be.
    """

    a: np.ndarray
    gamma: float

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if isinstance(self.a, SymOperator):
            a = np.array(self.a.matrix)
        if a.ndim == 1:
            a = np.diag(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"trace-class part must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or not np.isfinite(self.gamma):
            raise DomainViolation("extended operator has non-finite entries", quantity="entries")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def dim(self):
        return self.a.shape[0]

    @property
    def is_symmetric(self):
        return bool(np.array_equal(self.a, self.a.T)) or bool(
            np.allclose(self.a, self.a.T, rtol=0.0, atol=1e-13 * max(1.0, np.max(np.abs(self.a))))
        )

    @property
    def sym_part(self):
        return SymOperator(self.a)

    @property
    def extended_trace_norm(self):
        return float(np.sum(np.linalg.svd(self.a, compute_uv=False))) + abs(self.gamma)

    @property
    def is_pc1(self):
        """Membership in the positive definite unitized trace-class operators."""
        if not self.is_symmetric:
            return False
        lam = eig_sym(self.a).values + self.gamma
        tol = pd_tolerance(np.max(np.abs(lam)))
        return bool(self.gamma > tol and lam[-1] > tol)

    def dense(self):
        """``A + gamma I`` restricted to the truncated span."""
        return self.a + self.gamma * np.eye(self.dim)


def extended_trace(x):
    """``etr(A + gamma I) = tr(A) + gamma``; the identity has extended trace one."""
    return float(np.trace(x.a)) + x.gamma


def _require_pc1(x, what="X"):
    if x.gamma <= 0:
        raise DomainViolation(
            f"{what} needs gamma > 0, got {x.gamma:.6g}", quantity=f"gamma({what})", value=x.gamma
        )
    if not x.is_symmetric:
        raise DomainViolation(f"{what} is not self-adjoint", quantity=f"symmetry({what})")
    lam = eig_sym(x.a).values + x.gamma
    tol = pd_tolerance(np.max(np.abs(lam)))
    if lam[-1] <= tol:
        raise DomainViolation(
            f"{what} = A + gamma I is not positive definite: smallest eigenvalue {lam[-1]:.6g}",
            quantity=f"min eig({what})",
            value=float(lam[-1]),
        )


def extended_log_det(x):
    """Log of the extended Fredholm determinant, ``log gamma + log det(I + A/gamma)``.

    Raises
    ------
    DomainViolation
        If ``gamma <= 0`` or ``A + gamma I`` is not positive definite.
    """
    _require_pc1(x)
    lam = eig_sym(x.a).values
    return float(np.log(x.gamma) + np.sum(np.log1p(lam / x.gamma)))


def _inverse(x):
    _require_pc1(x)
    dec = eig_sym(x.a)
    g = x.gamma
    # (lam + g)^-1 - g^-1 written without cancellation.
    part = dec.apply(lambda lam: -lam / (g * (lam + g)))
    return ExtendedOperator(0.5 * (part + part.T), 1.0 / g)


def _multiply(x, y):
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    a = x.a @ y.a + y.gamma * x.a + x.gamma * y.a
    return ExtendedOperator(a, x.gamma * y.gamma)


def pc1_compose(x, y=None, op="multiply"):
    """Compose unitized trace-class operators with exact bookkeeping of the scalar part.

    Parameters
    ----------
    x, y : ExtendedOperator
        Operands; ``y`` is ignored for ``op="inverse"``.
    op : {"multiply", "inverse", "inverse_times"}
        ``x @ y``, ``x^{-1}`` or ``x^{-1} @ y``.
    """
    if op == "multiply":
        return _multiply(x, y)
    if op == "inverse":
        return _inverse(x)
    if op == "inverse_times":
        return _multiply(_inverse(x), y)
    raise ValueError(f"unknown composition {op!r}")


def as_extended(a, gamma):
    """Build ``A + gamma I`` from a symmetric trace-class part."""
    return ExtendedOperator(as_operator(a).matrix, gamma)
