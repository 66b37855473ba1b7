"""Entropic Riccati equation and the optimal Gaussian coupling.

For SPD ``S1, S2`` and ``eps > 0`` the equation ``X S1 X + (eps/2) X = S2`` has a
unique SPD solution, given in closed form by

    X = S1^{-1/2} [ (S1^{1/2} S2 S1^{1/2} + (eps/4)^2 I)^{1/2} - (eps/4) I ] S1^{-1/2}.

The bracket is evaluated eigenvalue-wise as ``c / (sqrt(c + (eps/4)^2) + eps/4)``,
which is the same number without the cancellation at large ``eps``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DefinitenessError, DimensionError, NumericalError, ValidationError
from .spd import Gaussian, SpdMatrix, as_spd

LOG_2PI = float(np.log(2.0 * np.pi))


def _check_eps(eps, allow_zero):
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0 or (eps == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"eps must be finite and {bound}, got {eps!r}")
    return eps


def _check_same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def riccati_residual(x, sigma1, sigma2, eps) -> float:
    """Frobenius norm of ``X S1 X + (eps/2) X - S2``."""
    x, s1, s2 = (np.asarray(m, dtype=float) for m in (x, sigma1, sigma2))
    return float(np.linalg.norm(x @ s1 @ x + 0.5 * eps * x - s2))


@dataclass(frozen=True)
class RiccatiSolution:
    x_eps: SpdMatrix
    eps: float
    residual: float


def solve_riccati(sigma1, sigma2, eps) -> RiccatiSolution:
    """SPD solution of ``X S1 X + (eps/2) X = S2``.

    ``eps = 0`` is allowed and returns the matrix of the classical optimal map,
    ``X S1 X = S2``.

    Raises
    ------
    DimensionError
        If the two matrices differ in size.
    NumericalError
        If rounding destroys the positive definiteness of the result; the
        message carries the condition numbers of both inputs.
    """
    s1, s2 = as_spd(sigma1), as_spd(sigma2)
    _check_same_dim(s1, s2)
    eps = _check_eps(eps, allow_zero=True)
    q = eps / 4.0
    root, root_inv = s1.sqrt, s1.inv_sqrt
    try:
        inner = SpdMatrix(root @ s2 @ root, sym_tol=None)
        bracket = inner.apply(lambda c: c / (np.sqrt(c + q * q) + q))
        x = SpdMatrix(root_inv @ bracket @ root_inv, sym_tol=None)
    except DefinitenessError as exc:
        raise NumericalError(
            "Riccati solution lost positive definiteness "
            f"(cond(S1) = {s1.condition_number():.3e}, cond(S2) = {s2.condition_number():.3e})"
        ) from exc
    return RiccatiSolution(x, eps, riccati_residual(x, s1, s2, eps))


def alt_riccati(sigma1, sigma2, eps) -> RiccatiSolution:
    """SPD solution ``Y`` of ``Y S2 Y + (eps/2) Y = S1`` (roles of the marginals exchanged).

    It satisfies ``(2/eps) X^{-1} = S2^{-1} + (2/eps) Y`` and ``X S1 = S2 Y``.
    """
    eps = _check_eps(eps, allow_zero=False)
    return solve_riccati(sigma2, sigma1, eps)


@dataclass(frozen=True)
class QuadraticPotential:
    """The map ``x -> x^T matrix x + constant``."""

    matrix: np.ndarray
    constant: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.matrix, x) + self.constant


@dataclass(frozen=True)
class EntropicPlan:
    """Optimal coupling ``N(mean, sigma_eps)`` between two Gaussians.

    The potentials ``f0`` and ``g0`` act on centered coordinates
    ``x - mean1`` and ``y - mean2``: the coupling density is
    ``exp((f0(x~) + g0(y~) - |x~ - y~|^2) / eps)``.
    """

    mean: np.ndarray
    sigma_eps: np.ndarray
    x_eps: SpdMatrix
    eps: float
    f0: QuadraticPotential
    g0: QuadraticPotential
    sigma1: SpdMatrix
    sigma2: SpdMatrix

    @property
    def dim(self) -> int:
        return self.x_eps.dim

    @property
    def logdet(self) -> float:
        """``log det sigma_eps`` through ``det = (eps/2)^d det(S1 X)``."""
        return self.dim * np.log(0.5 * self.eps) + self.sigma1.logdet + self.x_eps.logdet

    def precision(self) -> np.ndarray:
        """Closed-form inverse of ``sigma_eps``."""
        d, c = self.dim, 2.0 / self.eps
        eye = np.eye(d)
        out = np.empty((2 * d, 2 * d))
        out[:d, :d] = self.sigma1.inv.values + c * self.x_eps.values
        out[:d, d:] = -c * eye
        out[d:, :d] = -c * eye
        out[d:, d:] = c * self.x_eps.inv.values
        return out

    def log_density(self, x, y):
        """Log density of the coupling at ``(x, y)``, from the dual potentials."""
        d = self.dim
        xc = np.asarray(x, dtype=float) - self.mean[:d]
        yc = np.asarray(y, dtype=float) - self.mean[d:]
        sq = np.sum((xc - yc) ** 2, axis=-1)
        return (self.f0(xc) + self.g0(yc) - sq) / self.eps


def assemble_plan(p: Gaussian, q: Gaussian, eps) -> EntropicPlan:
    """Optimal entropic coupling of ``p`` and ``q`` with its dual potentials.

    ``eps`` must be strictly positive: at ``eps = 0`` the block covariance is
    singular and the coupling is supported on the graph of a map.
    """
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")
    eps = _check_eps(eps, allow_zero=False)
    d = p.dim
    s1, s2 = p.cov, q.cov
    x = solve_riccati(s1, s2, eps).x_eps
    cross = s1.values @ x.values
    sigma = np.block([[s1.values, cross], [cross.T, s2.values]])
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("assembled coupling covariance is not positive definite") from exc
    sigma.setflags(write=False)
    mean = np.concatenate([p.mean, q.mean])
    mean.setflags(write=False)

    logdet = d * np.log(0.5 * eps) + s1.logdet + x.logdet
    eye = np.eye(d)
    f0 = QuadraticPotential(
        eye - x.values - 0.5 * eps * s1.inv.values,
        -0.5 * eps * (2 * d * LOG_2PI + logdet),
    )
    g0 = QuadraticPotential(eye - x.inv.values, 0.0)
    return EntropicPlan(mean, sigma, x, eps, f0, g0, s1, s2)
