"""Entropy-regularized barycenters of Gaussian measures.

The barycenter of ``N(m_i, S_i)`` with weights ``w_i`` is ``N(sum w_i m_i, S0)``
where ``S0`` is the fixed point of

    G(S) = sum_i w_i [ (S^{1/2} S_i S^{1/2} + (eps/4)^2 I)^{1/2} + (eps/4) I ].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cost import entropic_cost
from .exceptions import DimensionError, ValidationError
from .riccati import _check_eps
from .spd import Gaussian, SpdMatrix, as_spd

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
# consecutive non-decreasing residuals before switching to damped updates
STALL_LIMIT = 5


@dataclass(frozen=True)
class BarycenterProblem:
    components: tuple
    weights: np.ndarray
    eps: float

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("barycenter needs at least one component")
        if not all(isinstance(c, Gaussian) for c in comps):
            raise ValidationError("components must be Gaussian instances")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionError(f"components have different dimensions: {sorted(dims)}")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(comps):
            raise DimensionError(f"{w.shape[0]} weights for {len(comps)} components")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValidationError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "eps", _check_eps(self.eps, allow_zero=True))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def mean(self) -> np.ndarray:
        return np.sum([w * c.mean for w, c in zip(self.weights, self.components)], axis=0)


@dataclass(frozen=True)
class BarycenterSolution:
    barycenter: Gaussian
    residual: float
    iterations: int
    converged: bool


def fixed_point_map(sigma, problem: BarycenterProblem) -> np.ndarray:
    """One application of ``G``."""
    root = as_spd(sigma).sqrt
    q = problem.eps / 4.0
    out = np.zeros((problem.dim, problem.dim))
    for w, comp in zip(problem.weights, problem.components):
        inner = SpdMatrix(root @ comp.cov @ root, sym_tol=None)
        out += w * inner.apply(lambda c: np.sqrt(c + q * q)).values
    out += q * np.eye(problem.dim)
    return 0.5 * (out + out.T)


def _residual(sigma: SpdMatrix, g: np.ndarray) -> float:
    r = sigma.inv_sqrt.values
    return float(np.linalg.norm(r @ g @ r - np.eye(sigma.dim)))


def barycenter_residual(sigma, problem: BarycenterProblem) -> float:
    """Frobenius distance of ``sum_i w_i (S^{-1/2} (...)^{1/2} S^{-1/2} + (eps/4) S^{-1})`` to ``I``."""
    sigma = as_spd(sigma)
    if sigma.dim != problem.dim:
        raise DimensionError(f"dimension mismatch: {sigma.dim} vs {problem.dim}")
    root, root_inv, inv = sigma.sqrt, sigma.inv_sqrt.values, sigma.inv.values
    q = problem.eps / 4.0
    lhs = np.zeros((sigma.dim, sigma.dim))
    for w, comp in zip(problem.weights, problem.components):
        inner = SpdMatrix(root @ comp.cov @ root, sym_tol=None).apply(lambda c: np.sqrt(c + q * q))
        lhs += w * (root_inv @ inner.values @ root_inv + q * inv)
    return float(np.linalg.norm(lhs - np.eye(sigma.dim)))


def initial_guess(problem: BarycenterProblem) -> SpdMatrix:
    """``sum_i w_i S_i + (eps/2) I``; exact when there is a single component."""
    avg = np.sum([w * c.cov.values for w, c in zip(problem.weights, problem.components)], axis=0)
    return SpdMatrix(avg + 0.5 * problem.eps * np.eye(problem.dim), sym_tol=None)


def solve_barycenter(
    problem: BarycenterProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init=None,
    callback: Callable[[int, SpdMatrix], None] | None = None,
) -> BarycenterSolution:
    """Fixed-point iteration for the regularized barycenter covariance.

    Plain iteration ``S <- G(S)``; after ``STALL_LIMIT`` consecutive steps
    without residual decrease the update becomes ``S <- (S + G(S)) / 2``.
    Running out of iterations is reported with ``converged=False``, never raised.

    ``callback(k, S)`` is invoked on every iterate, including the initial one.
    """
    if tol <= 0 or max_iter < 1:
        raise ValidationError("tol must be > 0 and max_iter >= 1")
    sigma = initial_guess(problem) if init is None else as_spd(init)
    if sigma.dim != problem.dim:
        raise DimensionError(f"initial point has dimension {sigma.dim}, expected {problem.dim}")

    damped = False
    best = np.inf
    stalled = 0
    residual = np.inf
    k = 0
    while True:
        if callback is not None:
            callback(k, sigma)
        g = fixed_point_map(sigma, problem)
        residual = _residual(sigma, g)
        if residual <= tol or k >= max_iter:
            break
        if residual < best:
            best, stalled = residual, 0
        else:
            stalled += 1
            if stalled >= STALL_LIMIT and not damped:
                logger.debug("barycenter iteration stalled at k=%d, switching to damped updates", k)
                damped = True
        nxt = 0.5 * (sigma.values + g) if damped else g
        sigma = SpdMatrix(nxt, sym_tol=None)
        k += 1

    converged = residual <= tol
    if not converged:
        logger.warning("barycenter did not converge in %d iterations (residual %.3e)", k, residual)
    return BarycenterSolution(Gaussian(problem.mean(), sigma), residual, k, converged)


def eval_objective(problem: BarycenterProblem, q: Gaussian) -> float:
    """Weighted sum of entropic costs from each component to ``q``."""
    if q.dim != problem.dim:
        raise DimensionError(f"dimension mismatch: {q.dim} vs {problem.dim}")
    return float(
        sum(w * entropic_cost(c, q, problem.eps).total for w, c in zip(problem.weights, problem.components))
    )


def make_problem(components: Sequence[Gaussian], weights=None, eps=0.0) -> BarycenterProblem:
    """Convenience constructor; uniform weights when ``weights`` is None."""
    if weights is None:
        weights = np.full(len(components), 1.0 / len(components))
    return BarycenterProblem(tuple(components), weights, eps)
