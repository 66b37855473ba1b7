"""Symmetric positive-definite matrices and Gaussian measures.

Everything downstream (Riccati solutions, couplings, barycenters) is built from
spectral functions of SPD matrices, so the eigendecomposition is computed once
at construction and reused for the square root, inverse and log-determinant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .exceptions import DefinitenessError, DimensionError, SymmetryError, ValidationError

SYMMETRY_TOL = 1e-9
DEFINITENESS_FLOOR = 1e-12


def _check_definite(w):
    if not np.all(np.isfinite(w)):
        raise ValidationError("matrix has non-finite eigenvalues")
    top = w[-1]
    if top <= 0 or w[0] <= DEFINITENESS_FLOOR * top:
        raise DefinitenessError(w[0], top)


class SpdMatrix:
    """Immutable real symmetric positive-definite matrix.

    Parameters
    ----------
    values : array-like, shape (d, d)
        Matrix entries. Inputs within ``sym_tol`` of symmetric are replaced by
        ``(A + A.T) / 2``.
    sym_tol : float or None
        Absolute symmetry tolerance. ``None`` skips the check and only
        symmetrizes, which is what internal code uses for computed products
        whose asymmetry is pure rounding.

    Raises
    ------
    SymmetryError
        If ``max |A - A.T| > sym_tol``.
    DefinitenessError
        If the smallest eigenvalue is not above ``1e-12`` times the largest.
    """

    def __init__(self, values, *, sym_tol: float | None = SYMMETRY_TOL):
        a = np.array(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("matrix has non-finite entries")
        if sym_tol is not None:
            asym = float(np.max(np.abs(a - a.T)))
            if asym > sym_tol:
                raise SymmetryError(asym, sym_tol)
        a = 0.5 * (a + a.T)
        w, v = np.linalg.eigh(a)
        _check_definite(w)
        self._init(a, w, v)

    def _init(self, a, w, v):
        for arr in (a, w, v):
            arr.setflags(write=False)
        self._values = a
        self._eigvals = w
        self._eigvecs = v

    @classmethod
    def from_eigh(cls, eigvals, eigvecs) -> "SpdMatrix":
        """Build ``V diag(w) V^T`` from a known orthonormal eigenbasis."""
        w = np.array(eigvals, dtype=float)
        v = np.array(eigvecs, dtype=float)
        _check_definite(w)
        a = (v * w) @ v.T
        a = 0.5 * (a + a.T)
        obj = cls.__new__(cls)
        obj._init(a, w, v)
        return obj

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return self._values.shape[0]

    @property
    def eigvals(self) -> np.ndarray:
        return self._eigvals

    @property
    def eigvecs(self) -> np.ndarray:
        return self._eigvecs

    def apply(self, func: Callable[[np.ndarray], np.ndarray]) -> "SpdMatrix":
        """Spectral function ``V diag(func(w)) V^T``; ``func`` must keep ``w > 0``."""
        return SpdMatrix.from_eigh(func(self._eigvals), self._eigvecs)

    @cached_property
    def factor(self) -> "SpdFactorization":
        return spd_factor(self)

    @property
    def sqrt(self) -> "SpdMatrix":
        return self.factor.sqrt

    @property
    def inv_sqrt(self) -> "SpdMatrix":
        return self.factor.inv_sqrt

    @property
    def inv(self) -> "SpdMatrix":
        return self.factor.inv

    @property
    def logdet(self) -> float:
        return self.factor.logdet

    def trace(self) -> float:
        return float(np.trace(self._values))

    def condition_number(self) -> float:
        return float(self._eigvals[-1] / self._eigvals[0])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __matmul__(self, other):
        return self._values @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self._values

    def __eq__(self, other):
        if not isinstance(other, SpdMatrix):
            return NotImplemented
        return self._values.shape == other._values.shape and bool(
            np.array_equal(self._values, other._values)
        )

    __hash__ = None

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim}, values={self._values.tolist()!r})"


@dataclass(frozen=True)
class SpdFactorization:
    source: SpdMatrix
    sqrt: SpdMatrix
    inv_sqrt: SpdMatrix
    inv: SpdMatrix
    logdet: float


def as_spd(a) -> SpdMatrix:
    """Return ``a`` unchanged if already an :class:`SpdMatrix`, else validate it."""
    if isinstance(a, SpdMatrix):
        return a
    return SpdMatrix(a)


def spd_factor(a) -> SpdFactorization:
    """Principal square root, inverse square root, inverse and log-determinant.

    All four come from the single symmetric eigendecomposition held by ``a``.
    """
    a = as_spd(a)
    w, v = a.eigvals, a.eigvecs
    root = np.sqrt(w)
    return SpdFactorization(
        source=a,
        sqrt=SpdMatrix.from_eigh(root, v),
        inv_sqrt=SpdMatrix.from_eigh(1.0 / root, v),
        inv=SpdMatrix.from_eigh(1.0 / w, v),
        logdet=float(np.sum(np.log(w))),
    )


@dataclass(frozen=True)
class Gaussian:
    """Normal law ``N(mean, cov)`` on R^d with positive-definite covariance."""

    mean: np.ndarray
    cov: SpdMatrix

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if not isinstance(self.cov, SpdMatrix):
            object.__setattr__(self, "cov", SpdMatrix(self.cov))
        if mean.shape[0] != self.cov.dim:
            raise DimensionError(
                f"mean has length {mean.shape[0]} but covariance is {self.cov.dim}x{self.cov.dim}"
            )
        if not np.all(np.isfinite(mean)):
            raise ValidationError("mean has non-finite entries")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.cov.dim

    def shifted(self, delta) -> "Gaussian":
        return Gaussian(self.mean + np.asarray(delta, dtype=float), self.cov)


def validate_gaussian(mean, cov) -> Gaussian:
    """Build a :class:`Gaussian` from raw arrays, raising a ValidationError subclass on bad input."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    if mean.ndim != 1:
        raise DimensionError(f"mean must be a vector, got shape {mean.shape}")
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DimensionError(f"covariance must be square, got shape {cov.shape}")
    if cov.shape[0] != mean.shape[0]:
        raise DimensionError(
            f"mean has length {mean.shape[0]} but covariance is {cov.shape[0]}x{cov.shape[1]}"
        )
    return Gaussian(mean, SpdMatrix(cov))
