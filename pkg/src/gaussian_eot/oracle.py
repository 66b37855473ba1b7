"""Discretized ground truth: grid measures plus log-domain Sinkhorn.

The discrete problem minimizes ``<C, P> + eps * sum P log P`` over couplings of
two histograms. If ``P_ij`` approximates ``r(x_i, y_j) * vx * vy`` for a
continuous plan density ``r`` and cell volumes ``vx``, ``vy``, then
``sum P log P`` approximates ``int r log r + log(vx vy)``. Subtracting
``eps * log(vx vy)`` from the discrete objective therefore estimates the
continuous cost with negative differential entropy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp, xlogy

from .exceptions import ConvergenceError, DimensionError, ResourceError, ValidationError
from .riccati import _check_eps
from .spd import Gaussian

logger = logging.getLogger(__name__)

MAX_GRID_POINTS = 10**6
# cost-matrix entries; 4e7 float64 is ~320 MB per dense array
MAX_PLAN_ENTRIES = 4 * 10**7
MAX_DIM = 3

DEFAULT_POINTS = 400
DEFAULT_EXTENT = 6.0
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 20_000


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray
    cell_volume: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise DimensionError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        if not self.cell_volume > 0:
            raise ValidationError("cell volume must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cell_volume", float(self.cell_volume))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def cov(self) -> np.ndarray:
        c = self.points - self.mean()
        return (c * self.weights[:, None]).T @ c


@dataclass
class SinkhornResult:
    plan: np.ndarray
    potentials_f: np.ndarray
    potentials_g: np.ndarray
    discrete_objective: float
    corrected_objective: float
    iterations: int
    marginal_error: float
    converged: bool
    # (sweep, primal objective, dual objective, marginal error) sampled every few sweeps
    history: list = field(default_factory=list)


def _cell_centers(n, lo, hi):
    h = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * h, h


def _check_grid(n, d):
    if d > MAX_DIM:
        raise ValidationError(f"grid discretization supports d <= {MAX_DIM}, got d = {d}")
    if n < 8:
        raise ValidationError(f"points_per_axis must be >= 8, got {n}")
    if n**d > MAX_GRID_POINTS:
        raise ResourceError(f"grid of {n}^{d} = {n**d} points exceeds {MAX_GRID_POINTS}")


def _normalize(logw):
    return np.exp(logw - logsumexp(logw))


def discretize_gaussian(p: Gaussian, points_per_axis: int = DEFAULT_POINTS, extent_std: float = DEFAULT_EXTENT) -> DiscreteMeasure:
    """Cell-centered grid along the principal axes of ``p``.

    Each axis spans ``mean +/- extent_std`` standard deviations; weights are
    the density at the cell centers, renormalized.
    """
    d, n = p.dim, int(points_per_axis)
    _check_grid(n, d)
    if not extent_std > 0:
        raise ValidationError("extent_std must be positive")
    t, h = _cell_centers(n, -extent_std, extent_std)
    grid = np.stack(np.meshgrid(*([t] * d), indexing="ij"), axis=-1).reshape(-1, d)
    scales = np.sqrt(p.cov.eigvals)
    points = p.mean + (grid * scales) @ p.cov.eigvecs.T
    weights = _normalize(-0.5 * np.sum(grid**2, axis=1))
    return DiscreteMeasure(points, weights, float(np.prod(h * scales)))


def discretize_box(log_density: Callable[[np.ndarray], np.ndarray], lower, upper, points_per_axis: int = DEFAULT_POINTS) -> DiscreteMeasure:
    """Cell-centered grid on the box ``[lower, upper]`` weighted by an (unnormalized) log density."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape or np.any(upper <= lower):
        raise ValidationError("box needs lower < upper in every coordinate")
    d, n = lower.shape[0], int(points_per_axis)
    _check_grid(n, d)
    axes, steps = zip(*(_cell_centers(n, lo, hi) for lo, hi in zip(lower, upper)))
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    weights = _normalize(np.asarray(log_density(points), dtype=float))
    return DiscreteMeasure(points, weights, float(np.prod(steps)))


def discretize_uniform(lower, upper, points_per_axis: int = DEFAULT_POINTS) -> DiscreteMeasure:
    """Uniform law on a box."""
    return discretize_box(lambda x: np.zeros(len(x)), lower, upper, points_per_axis)


def squared_distances(x, y) -> np.ndarray:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = np.sum(x**2, 1)[:, None] + np.sum(y**2, 1)[None, :] - 2.0 * x @ y.T
    return np.maximum(c, 0.0)


def _log_weights(w):
    with np.errstate(divide="ignore"):
        return np.log(w)


def sinkhorn_solve(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    eps,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    reference: str = "product",
    trace_every: int = 10,
) -> SinkhornResult:
    """Entropic OT between two grid measures, squared Euclidean cost.

    Updates run on dual potentials in the log domain, so small ``eps`` cannot
    underflow. With ``reference="product"`` the plan is
    ``a_i b_j exp((f_i + g_j - C_ij) / eps)``; with ``reference="lebesgue"`` it is
    ``exp((f_i + g_j - C_ij) / eps)``. Both give the same optimal plan.

    ``marginal_error`` is the L1 violation of the source marginal (the target
    marginal is exact after each sweep). Hitting ``max_iter`` returns a result
    with ``converged=False``.
    """
    eps = _check_eps(eps, allow_zero=False)
    if reference not in ("product", "lebesgue"):
        raise ValidationError(f"unknown reference {reference!r}")
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    n, m = len(a.weights), len(b.weights)
    if n * m > MAX_PLAN_ENTRIES:
        raise ResourceError(f"{n} x {m} cost matrix exceeds {MAX_PLAN_ENTRIES} entries")

    C = squared_distances(a.points, b.points)
    loga, logb = _log_weights(a.weights), _log_weights(b.weights)
    # row/column offsets folded into the kernel
    ra, rb = (loga, logb) if reference == "product" else (np.zeros(n), np.zeros(m))
    sa, sb = (np.zeros(n), np.zeros(m)) if reference == "product" else (loga, logb)
    logK = -C / eps

    f, g = np.zeros(n), np.zeros(m)
    history = []

    def log_plan():
        return ra[:, None] + rb[None, :] + (f[:, None] + g[None, :]) / eps + logK

    def objective(lp):
        P = np.exp(lp)
        return float(np.sum(C * P) + eps * np.sum(xlogy(P, P)))

    def dual(lp):
        # potentials in the lebesgue convention, plan = exp((F + G - C) / eps)
        F = f + eps * (loga - sa)
        G = g + eps * (logb - sb)
        with np.errstate(invalid="ignore"):
            lin = np.sum(np.where(a.weights > 0, a.weights * F, 0.0))
            lin += np.sum(np.where(b.weights > 0, b.weights * G, 0.0))
        return float(lin - eps * np.exp(logsumexp(lp)) + eps)

    err = np.inf
    it = 0
    while it < max_iter:
        f = eps * (sa - logsumexp(rb[None, :] + g[None, :] / eps + logK, axis=1))
        g = eps * (sb - logsumexp(ra[:, None] + f[:, None] / eps + logK, axis=0))
        it += 1
        lp = log_plan()
        err = float(np.sum(np.abs(np.exp(logsumexp(lp, axis=1)) - a.weights)))
        if trace_every and it % trace_every == 0:
            history.append((it, objective(lp), dual(lp), err))
        if err <= tol:
            break

    lp = log_plan()
    plan = np.exp(lp)
    disc = objective(lp)
    corrected = disc - eps * np.log(a.cell_volume * b.cell_volume)
    converged = err <= tol
    if not converged:
        logger.warning("Sinkhorn stopped after %d sweeps, marginal error %.3e", it, err)
    return SinkhornResult(plan, f, g, disc, corrected, it, err, converged, history)


def oracle_solve(
    p: Gaussian,
    q: Gaussian,
    eps,
    points_per_axis: int = DEFAULT_POINTS,
    extent_std: float = DEFAULT_EXTENT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SinkhornResult:
    """Discretize both Gaussians and run Sinkhorn."""
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")
    a = discretize_gaussian(p, points_per_axis, extent_std)
    b = discretize_gaussian(q, points_per_axis, extent_std)
    return sinkhorn_solve(a, b, eps, tol=tol, max_iter=max_iter)


def oracle_cost(
    p: Gaussian,
    q: Gaussian,
    eps,
    points_per_axis: int = DEFAULT_POINTS,
    extent_std: float = DEFAULT_EXTENT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Grid estimate of the continuous entropic cost; raises if Sinkhorn does not converge."""
    res = oracle_solve(p, q, eps, points_per_axis, extent_std, tol, max_iter)
    if not res.converged:
        raise ConvergenceError(
            f"Sinkhorn did not reach marginal error {tol:.1e} in {res.iterations} sweeps "
            f"(final {res.marginal_error:.3e})",
            residual=res.marginal_error,
            iterations=res.iterations,
        )
    return res.corrected_objective
