"""Gaussian measures and their description relative to a fixed base measure.

A measure ``N(m, C)`` equivalent to the base ``N(m*, C*)`` is written as

    u = C*^{-1/2} (m - m*),        C = C*^{1/2} (I - S) C*^{1/2},

with every relative quantity expressed in the eigenbasis of ``C*`` so that
``C*^{+-1/2}`` act diagonally.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainViolation, NotEquivalent
from .spectral import SpectralDecomp, SymOperator, as_operator, eig_sym, norms, pd_tolerance

__all__ = [
    "GaussianMeasure",
    "BaseMeasure",
    "RelativeGaussian",
    "EquivalenceReport",
    "to_relative",
    "from_relative",
    "truncate_relative",
    "project",
    "equivalence_diagnostics",
    "sample",
    "sample_shards",
    "kernel_covariance",
    "SHARD_SIZE",
]

#: Draws per RNG shard; shard ``k`` always uses Philox counter block ``k``.
SHARD_SIZE = 1 << 16


def _vector(x, n=None, name="mean"):
    v = np.array(x, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise DomainViolation(f"{name} has non-finite entries", quantity=name)
    v.flags.writeable = False
    return v


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """Gaussian measure ``N(mean, cov)`` on the truncated space.

    ``cov`` must be positive semidefinite up to the positivity tolerance.
    """

    mean: np.ndarray
    cov: SymOperator

    def __post_init__(self):
        cov = as_operator(self.cov)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", _vector(self.mean, cov.dim))
        lam = eig_sym(cov).values
        if lam[-1] < -pd_tolerance(np.max(np.abs(lam))):
            raise DomainViolation(
                f"covariance is not positive semidefinite: smallest eigenvalue {lam[-1]:.6g}",
                quantity="min eig(C)",
                value=float(lam[-1]),
            )

    @classmethod
    def centered(cls, cov):
        cov = as_operator(cov)
        return cls(np.zeros(cov.dim), cov)

    @property
    def dim(self):
        return self.cov.dim

    def __eq__(self, other):
        if not isinstance(other, GaussianMeasure):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.cov.matrix, other.cov.matrix
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BaseMeasure:
    """Non-degenerate reference measure ``N(m*, C*)`` with its eigendecomposition."""

    measure: GaussianMeasure
    spectrum: SpectralDecomp = field(default=None)

    def __post_init__(self):
        spec = self.spectrum if self.spectrum is not None else eig_sym(self.measure.cov)
        lam = spec.values
        if lam[-1] <= pd_tolerance(lam[0]):
            raise DomainViolation(
                f"base covariance is degenerate: smallest eigenvalue {lam[-1]:.6g}",
                quantity="min eig(C*)",
                value=float(lam[-1]),
            )
        object.__setattr__(self, "spectrum", spec)

    @classmethod
    def from_arrays(cls, mean, cov):
        return cls(GaussianMeasure(mean, cov))

    @classmethod
    def standard(cls, n):
        """``N(0, I_n)``, for which relative and ambient coordinates coincide."""
        return cls(GaussianMeasure(np.zeros(n), np.eye(n)))

    @classmethod
    def diagonal(cls, eigenvalues, mean=None):
        lam = np.asarray(eigenvalues, dtype=float)
        m = np.zeros(lam.shape[0]) if mean is None else mean
        return cls(GaussianMeasure(m, np.diag(lam)))

    @property
    def dim(self):
        return self.measure.dim

    @property
    def mean(self):
        return self.measure.mean

    @property
    def eigenvalues(self):
        return self.spectrum.values

    @property
    def basis(self):
        return self.spectrum.vectors

    def whiten(self, x):
        """``C*^{-1/2}(x - m*)`` in eigen-coordinates; rows of ``x`` are points."""
        x = np.asarray(x, dtype=float)
        return ((x - self.mean) @ self.basis) / np.sqrt(self.eigenvalues)

    def unwhiten(self, w):
        """Inverse of :meth:`whiten`: ``m* + C*^{1/2} w``."""
        w = np.asarray(w, dtype=float)
        return self.mean + (w * np.sqrt(self.eigenvalues)) @ self.basis.T


@dataclass(frozen=True, eq=False)
class RelativeGaussian:
    """Base-relative parameters ``(u, S)`` of a measure equivalent to the base.

    Requires ``I - S`` to be strictly positive definite.
    """

    u: np.ndarray
    s: SymOperator

    def __post_init__(self):
        s = as_operator(self.s)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u", _vector(self.u, s.dim, name="u"))
        lam = eig_sym(s).values
        lo = 1.0 - lam[0]
        if lo <= pd_tolerance(max(abs(lam[0]), abs(lam[-1]))):
            raise NotEquivalent(
                f"I - S is not positive definite: smallest eigenvalue {lo:.6g}",
                quantity="min eig(I - S)",
                value=float(lo),
            )

    @classmethod
    def identity(cls, n):
        """The base measure itself: ``u = 0, S = 0``."""
        return cls(np.zeros(n), np.zeros((n, n)))

    @property
    def dim(self):
        return self.s.dim

    def __eq__(self, other):
        if not isinstance(other, RelativeGaussian):
            return NotImplemented
        return np.array_equal(self.u, other.u) and np.array_equal(self.s.matrix, other.s.matrix)

    __hash__ = None


def to_relative(mu, base):
    """Express ``mu`` as ``(u, S)`` relative to ``base``.

    Raises
    ------
    NotEquivalent
        If ``I - S`` is not strictly positive, which at finite truncation
        means ``mu.cov`` is singular.
    """
    if mu.dim != base.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {base.dim}")
    v = base.basis
    inv_root = 1.0 / np.sqrt(base.eigenvalues)
    c_eig = v.T @ mu.cov.matrix @ v
    s = np.eye(base.dim) - inv_root[:, None] * c_eig * inv_root[None, :]
    u = inv_root * (v.T @ (mu.mean - base.mean))
    return RelativeGaussian(u, s)


def from_relative(rel, base):
    """Inverse of :func:`to_relative`: ``m = m* + C*^{1/2} u``, ``C = C*^{1/2}(I - S)C*^{1/2}``."""
    if rel.dim != base.dim:
        raise ValueError(f"dimension mismatch: {rel.dim} vs {base.dim}")
    v = base.basis
    root = np.sqrt(base.eigenvalues)
    c_eig = root[:, None] * (np.eye(rel.dim) - rel.s.matrix) * root[None, :]
    cov = v @ c_eig @ v.T
    mean = base.mean + v @ (root * rel.u)
    return GaussianMeasure(mean, cov)


def truncate_relative(rel, n):
    """Keep the leading ``n`` base eigen-directions of ``(u, S)``."""
    return RelativeGaussian(rel.u[:n], rel.s.block(n))


def project(mu, base, n):
    """Compress ``mu`` onto the span of the leading ``n`` eigenvectors of the base covariance.

    The result lives in base eigen-coordinates centred at ``m*``, together
    with the matching compressed base.
    """
    v = base.basis[:, :n]
    mean = v.T @ (mu.mean - base.mean)
    cov = v.T @ mu.cov.matrix @ v
    return GaussianMeasure(mean, cov), BaseMeasure.diagonal(base.eigenvalues[:n])


@dataclass(frozen=True)
class EquivalenceReport:
    """Finite-truncation evidence for Feldman-Hajek equivalence.

    Sequences are evaluated at the dyadic sub-truncations in ``sizes``.
    """

    min_eig_i_minus_s: float
    hs_norm_s: float
    trace_norm_s: float
    picard_sum: float
    sizes: tuple
    picard_sums: tuple
    hs_norms: tuple
    trace_norms: tuple
    warnings: tuple

    @property
    def ok(self):
        return not self.warnings


#: Relative growth over the last doubling that counts as "not plateaued".
PLATEAU_RTOL = 1e-2


def _grows(seq):
    last, prev = seq[-1], seq[-2]
    return last - prev > PLATEAU_RTOL * abs(last) and last > 1e-12


def equivalence_diagnostics(mu, base):
    """Picard sum of the mean shift and spectral size of ``S`` across sub-truncations.

    This never raises; a singular ``mu.cov`` shows up as a non-positive
    ``min_eig_i_minus_s`` and a warning.
    """
    v = base.basis
    lam = base.eigenvalues
    n = base.dim
    shift = v.T @ (mu.mean - base.mean)
    inv_root = 1.0 / np.sqrt(lam)
    s = np.eye(n) - inv_root[:, None] * (v.T @ mu.cov.matrix @ v) * inv_root[None, :]

    sizes = tuple(sorted({max(1, n // 4), max(1, n // 2), n}))
    picard, hs, tr = [], [], []
    for k in sizes:
        picard.append(float(np.sum(shift[:k] ** 2 / lam[:k])))
        t, h, _ = norms(s[:k, :k])
        hs.append(h)
        tr.append(t)

    warnings = []
    min_eig = float(1.0 - eig_sym(s).values[0])
    if min_eig <= pd_tolerance(1.0):
        warnings.append(f"I - S is not positive definite (min eigenvalue {min_eig:.6g})")
    if len(sizes) >= 2:
        if _grows(picard):
            warnings.append("Picard sum of the mean shift has not plateaued")
        if _grows(hs):
            warnings.append("Hilbert-Schmidt norm of S has not plateaued")
    return EquivalenceReport(
        min_eig_i_minus_s=min_eig,
        hs_norm_s=hs[-1],
        trace_norm_s=tr[-1],
        picard_sum=picard[-1],
        sizes=sizes,
        picard_sums=tuple(picard),
        hs_norms=tuple(hs),
        trace_norms=tuple(tr),
        warnings=tuple(warnings),
    )


def _shard_normals(seed, shard, rows, dim):
    # Counter-based: shard k reads a disjoint Philox counter range.
    bitgen = np.random.Philox(key=np.uint64(seed), counter=[0, 0, 0, shard])
    return np.random.Generator(bitgen).standard_normal((rows, dim))


def _cov_root(cov):
    dec = eig_sym(cov)
    lam = dec.values
    if lam[-1] < -pd_tolerance(np.max(np.abs(lam))):
        raise DomainViolation(
            f"covariance is not positive semidefinite: smallest eigenvalue {lam[-1]:.6g}",
            quantity="min eig(C)",
            value=float(lam[-1]),
        )
    return dec.apply(lambda x: np.sqrt(np.clip(x, 0.0, None)))


def sample_shards(mu, count, seed):
    """Yield ``(shard_index, draws)`` blocks of at most :data:`SHARD_SIZE` rows."""
    root = _cov_root(mu.cov)
    n_shards = -(-count // SHARD_SIZE)
    for k in range(n_shards):
        rows = min(SHARD_SIZE, count - k * SHARD_SIZE)
        z = _shard_normals(seed, k, rows, mu.dim)
        yield k, mu.mean + z @ root


def sample(mu, count, seed):
    """``count`` draws ``m + C^{1/2} z`` as rows of a ``(count, N)`` array.

    Output depends only on ``(seed, count, N)``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        _cov_root(mu.cov)
        return np.empty((0, mu.dim))
    return np.concatenate([block for _, block in sample_shards(mu, count, seed)])


def _rbf(d, length_scale):
    return np.exp(-0.5 * (d / length_scale) ** 2)


def _matern32(d, length_scale):
    r = np.sqrt(3.0) * np.abs(d) / length_scale
    return (1.0 + r) * np.exp(-r)


_KERNELS = {"rbf": _rbf, "matern32": _matern32}


def kernel_covariance(kernel, grid, scale=1.0, length_scale=0.2):
    """Discretized covariance operator ``K_ij = scale * k(x_i, x_j) / n`` on a grid in [0, 1].

    Parameters
    ----------
    kernel : {"rbf", "matern32"}
    grid : array_like
        Strictly increasing points in [0, 1].
    scale : float
        Positive amplitude.
    length_scale : float
        Positive kernel length scale.

    Returns
    -------
    SymOperator
        Gram matrix with eigenvalues below the positivity floor clipped to 0.
    """
    if kernel not in _KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}; expected one of {sorted(_KERNELS)}")
    x = np.asarray(grid, dtype=float).reshape(-1)
    if x.size == 0:
        raise ConfigError("kernel grid is empty")
    if np.any(np.diff(x) <= 0) or x[0] < 0 or x[-1] > 1:
        raise ConfigError("kernel grid must be strictly increasing inside [0, 1]")
    if scale <= 0 or length_scale <= 0:
        raise ConfigError("kernel scale and length_scale must be positive")
    k = scale * _KERNELS[kernel](x[:, None] - x[None, :], length_scale) / x.size
    dec = eig_sym(k)
    floor = pd_tolerance(dec.values[0])
    return SymOperator(dec.apply(lambda lam: np.where(lam > floor, lam, 0.0)))
