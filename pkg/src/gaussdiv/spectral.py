"""Symmetric operators on a truncated Hilbert space and their spectral calculus.

An operator is stored as a dense symmetric ``N x N`` matrix expressed in a
fixed orthonormal basis; everything outside the first ``N`` basis vectors is
taken to be acted on by zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, NonConvergence

__all__ = [
    "SymOperator",
    "SpectralDecomp",
    "as_operator",
    "pd_tolerance",
    "eig_sym",
    "op_func",
    "norms",
]

#: Relative floor used for all positivity decisions.
PD_RTOL = 1e-12


def pd_tolerance(op_norm):
    """Return the positivity tolerance ``1e-12 * max(1, op_norm)``."""
    return PD_RTOL * max(1.0, float(op_norm))


class SymOperator:
    """Immutable real symmetric matrix standing in for a self-adjoint operator.

    The input is symmetrized as ``(M + M.T) / 2`` so that the stored entries
    are bitwise symmetric.

    Parameters
    ----------
    entries : array_like, shape (N, N)
        Real square matrix. A 1-D input is read as a diagonal.
    """

    __slots__ = ("_m",)

    def __init__(self, entries):
        m = np.array(entries, dtype=float)
        if m.ndim == 1:
            m = np.diag(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainViolation("operator has non-finite entries", quantity="entries")
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "_m", m)

    def __setattr__(self, name, value):
        raise AttributeError("SymOperator is immutable")

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n)))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def matrix(self):
        """Read-only view of the symmetric entries."""
        return self._m

    @property
    def dim(self):
        return self._m.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._m
        return self._m.astype(dtype)

    def __repr__(self):
        return f"SymOperator(dim={self.dim})"

    def __add__(self, other):
        return SymOperator(self._m + np.asarray(other, dtype=float))

    def __sub__(self, other):
        return SymOperator(self._m - np.asarray(other, dtype=float))

    def __mul__(self, scalar):
        return SymOperator(float(scalar) * self._m)

    __rmul__ = __mul__

    def trace(self):
        return float(np.trace(self._m))

    def block(self, n):
        """Leading ``n x n`` compression, i.e. ``P_n M P_n`` on the first n basis vectors."""
        return SymOperator(self._m[:n, :n])


def as_operator(x):
    """Coerce an array-like or SymOperator to SymOperator."""
    if isinstance(x, SymOperator):
        return x
    return SymOperator(x)


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenpairs of a symmetric operator, eigenvalues sorted descending.

    ``vectors[:, k]`` is the unit eigenvector for ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self):
        return self.values.shape[0]

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T

    def apply(self, f):
        """Return ``V f(diag(values)) V^T`` as a plain array."""
        return (self.vectors * f(self.values)) @ self.vectors.T


def _fix_signs(vectors):
    # First entry with non-negligible magnitude is made positive.
    idx = np.argmax(np.abs(vectors) > 1e-12 * np.max(np.abs(vectors), axis=0), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eig_sym(m):
    """Eigendecomposition of a symmetric operator.

    Eigenvalues come back sorted in descending order and each eigenvector is
    normalized so that its first non-negligible component is positive, which
    makes the output reproducible.

    Raises
    ------
    NonConvergence
        If LAPACK fails to converge.
    """
    mat = as_operator(m).matrix
    try:
        w, v = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"symmetric eigensolver failed: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = _fix_signs(v[:, order])
    w.flags.writeable = False
    v.flags.writeable = False
    return SpectralDecomp(values=w, vectors=v)


_STRICT = {"log", "inverse", "inverse_sqrt"}


def _scalar_function(name, exponent):
    if name == "log":
        return np.log
    if name == "exp":
        return np.exp
    if name == "sqrt":
        return lambda x: np.sqrt(np.clip(x, 0.0, None))
    if name == "inverse":
        return lambda x: 1.0 / x
    if name == "inverse_sqrt":
        return lambda x: 1.0 / np.sqrt(x)
    if name == "power":
        if exponent is None:
            raise ValueError("op_func(..., 'power') needs an exponent")
        r = float(exponent)
        if r == int(r) and r >= 0:
            return lambda x: x ** int(r)
        return lambda x: np.power(x, r)
    raise ValueError(f"unknown operator function {name!r}")


def _check_domain(name, values, exponent):
    tol = pd_tolerance(np.max(np.abs(values)))
    lo = float(values[-1])
    strict = name in _STRICT or (
        name == "power" and not (float(exponent) == int(exponent) and exponent >= 0)
    )
    if strict and lo <= tol:
        raise DomainViolation(
            f"{name} needs a strictly positive spectrum; smallest eigenvalue is {lo:.6g}",
            quantity="min eigenvalue",
            value=lo,
        )
    if name == "sqrt" and lo < -tol:
        raise DomainViolation(
            f"sqrt needs a positive semidefinite spectrum; smallest eigenvalue is {lo:.6g}",
            quantity="min eigenvalue",
            value=lo,
        )


def op_func(m, func, exponent=None):
    """Apply a scalar function to a symmetric operator through its spectrum.

    Parameters
    ----------
    m : SymOperator or array_like
        Symmetric operator.
    func : {"log", "exp", "power", "inverse", "inverse_sqrt", "sqrt"}
        Function to apply.
    exponent : float, optional
        Exponent for ``func="power"``.

    Returns
    -------
    SymOperator
        ``V f(Lambda) V^T``.

    Raises
    ------
    DomainViolation
        If the spectrum leaves the domain of ``func`` (non-positive eigenvalue
        for log, inverse and fractional powers; negative one for sqrt).
    """
    dec = eig_sym(m)
    f = _scalar_function(func, exponent)
    _check_domain(func, dec.values, exponent)
    return SymOperator(dec.apply(f))


def norms(m):
    """Trace, Hilbert-Schmidt and operator norms of a symmetric operator.

    Returns
    -------
    (trace_norm, hs_norm, op_norm) : tuple of float
    """
    lam = np.abs(eig_sym(m).values)
    op = float(np.max(lam))
    hs = float(np.sqrt(np.sum(lam * lam)))
    tr = float(np.sum(lam))
    # Enforce the ordering against last-ulp rounding.
    hs = min(max(hs, op), tr)
    return tr, hs, op
