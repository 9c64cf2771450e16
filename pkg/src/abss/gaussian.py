"""Affine functions of a fixed Gaussian basis.

Every random quantity handled by the stochastic solver is stored as
``constant + coeffs @ eta`` where ``eta ~ N_m(mean, I_m)``.  Means,
variances and covariances are derived from that representation in closed
form; nothing is ever approximated.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.linalg import solve_triangular


class DimensionError(ValueError):
    """Raised when operands do not share a compatible shape."""


def _frozen(x, ndim):
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True)
class GaussianBasis:
    """``m`` independent unit-variance normals with mean vector ``mean``."""

    mean: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean, 1)
        if mean.size < 1:
            raise DimensionError("basis dimension must be at least 1")
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` realisations, one per row."""
        return self.mean + rng.standard_normal((size, self.dim))


@dataclasses.dataclass(frozen=True)
class AffineScalar:
    """Scalar random variable ``constant + coeffs @ eta``."""

    constant: float
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, 1))

    @classmethod
    def const(cls, value: float, dim: int) -> "AffineScalar":
        return cls(value, np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @property
    def variance(self) -> float:
        return float(self.coeffs @ self.coeffs)

    def evaluate(self, eta) -> np.ndarray | float:
        """Value at a realisation ``eta`` (shape ``(m,)`` or ``(N, m)``)."""
        return self.constant + np.asarray(eta, dtype=float) @ self.coeffs

    def scale(self, factor: float) -> "AffineScalar":
        return AffineScalar(self.constant * factor, self.coeffs * factor)


@dataclasses.dataclass(frozen=True)
class AffineVector:
    """Vector random variable ``constant + coeffs @ eta``; coeffs is ``n x m``."""

    constant: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        constant = _frozen(self.constant, 1)
        coeffs = _frozen(self.coeffs, 2)
        if coeffs.shape[0] != constant.size:
            raise DimensionError(
                f"coeffs has {coeffs.shape[0]} rows but constant has length {constant.size}"
            )
        object.__setattr__(self, "constant", constant)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def const(cls, value, dim: int) -> "AffineVector":
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros((value.size, dim)))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __len__(self):
        return self.constant.size

    def evaluate(self, eta) -> np.ndarray:
        """Value at ``eta``; for a batch ``(N, m)`` the result is ``(N, n)``."""
        return self.constant + np.asarray(eta, dtype=float) @ self.coeffs.T

    def dot(self, a) -> AffineScalar:
        """The scalar form ``a @ self``."""
        a = np.asarray(a, dtype=float)
        if a.shape != self.constant.shape:
            raise DimensionError(f"cannot contract length {a.size} with length {len(self)}")
        return AffineScalar(a @ self.constant, a @ self.coeffs)


@dataclasses.dataclass(frozen=True)
class DistSummary:
    """Mean and covariance (or variance, for scalars) of a Gaussian quantity."""

    mean: np.ndarray | float
    cov: np.ndarray | float

    @property
    def std(self):
        """Standard deviation(s); only defined elementwise on the diagonal."""
        cov = np.asarray(self.cov)
        return np.sqrt(cov) if cov.ndim == 0 else np.sqrt(np.diag(cov))

    def is_psd(self, rtol: float = 1e-10) -> bool:
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        scale = np.abs(cov).max(initial=0.0)
        if np.abs(cov - cov.T).max(initial=0.0) > 1e-12 * max(scale, 1e-300):
            return False
        eig = np.linalg.eigvalsh(cov)
        return bool(eig.min() >= -rtol * max(eig.max(), 0.0))


def _check_dim(x, basis):
    if x.dim != basis.dim:
        raise DimensionError(f"form has {x.dim} coefficients per entry, basis has dim {basis.dim}")


def mean_of(x: AffineScalar | AffineVector, basis: GaussianBasis):
    """Expectation of ``x``: the form evaluated at the basis mean."""
    _check_dim(x, basis)
    if isinstance(x, AffineScalar):
        return x.constant + float(x.coeffs @ basis.mean)
    return x.constant + x.coeffs @ basis.mean


def cov_of(x: AffineVector) -> np.ndarray:
    m = x.coeffs
    cov = m @ m.T
    # m @ m.T is symmetric only up to summation order; force it exactly
    return 0.5 * (cov + cov.T)


def cross_cov(x: AffineScalar, y: AffineScalar) -> float:
    if x.dim != y.dim:
        raise DimensionError(f"basis dims differ: {x.dim} vs {y.dim}")
    return float(x.coeffs @ y.coeffs)


def summarize(x: AffineScalar | AffineVector, basis: GaussianBasis) -> DistSummary:
    if isinstance(x, AffineScalar):
        _check_dim(x, basis)
        return DistSummary(mean_of(x, basis), x.variance)
    return DistSummary(mean_of(x, basis), cov_of(x))


def combine(x: AffineVector, s: AffineScalar, p) -> AffineVector:
    """Affine form of ``x - s * p`` for a deterministic direction ``p``."""
    p = np.asarray(p, dtype=float)
    if p.shape != x.constant.shape:
        raise DimensionError(f"direction has length {p.size}, vector has length {len(x)}")
    if s.dim != x.dim:
        raise DimensionError(f"basis dims differ: {x.dim} vs {s.dim}")
    return AffineVector(x.constant - s.constant * p, x.coeffs - np.outer(p, s.coeffs))


def default_zero_tol(x: AffineScalar) -> float:
    return 1e-12 * (1.0 + abs(x.constant) + np.abs(x.coeffs).max(initial=0.0))


def is_surely_zero(x: AffineScalar, tol: float | None = None) -> bool:
    """True iff ``x`` is the zero random variable, i.e. ``P(x == 0) = 1``.

    A Gaussian affine form with any nonzero coefficient is continuous and
    hits zero with probability 0, so only the constant and the coefficients
    need to be tested.
    """
    if tol is None:
        tol = default_zero_tol(x)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return abs(x.constant) <= tol and np.abs(x.coeffs).max(initial=0.0) <= tol


def whiten(A, mean, cov):
    """Reduce ``A xi = eta``, ``eta ~ N(mean, cov)``, to identity covariance.

    With ``cov = L L^T`` the system ``L^{-1} A xi = L^{-1} eta`` has the same
    solution set and a right-hand side distributed as ``N(L^{-1} mean, I)``.
    Returns the transformed matrix and the whitened basis.
    """
    A = np.asarray(A, dtype=float)
    cov = np.asarray(cov, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if cov.shape != (mean.size, mean.size) or A.shape[0] != mean.size:
        raise DimensionError("covariance, mean and matrix rows must agree")
    chol = np.linalg.cholesky(cov)
    A_w = solve_triangular(chol, A, lower=True)
    mean_w = solve_triangular(chol, mean, lower=True)
    return A_w, GaussianBasis(mean_w)
