"""Closed-form entropic transport costs between Gaussians.

Cost convention: ``I_eps[pi] = E_pi |x - y|^2 + eps * H(pi)`` where ``H`` is the
negative differential entropy of the coupling. Between ``N(m1, S1)`` and
``N(m2, S2)`` the minimum is

    |m1 - m2|^2 + Tr S1 + Tr S2 - 2 Tr(S1 X)
        - (eps/2) log((2 pi e)^{2d} (eps/2)^d det(S1 X))

with ``X`` the entropic Riccati solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ValidationError
from .riccati import _check_eps, solve_riccati
from .spd import Gaussian, SpdMatrix, validate_gaussian

LOG_2PI_E = float(np.log(2.0 * np.pi * np.e))


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    mean_term: float
    transport_term: float
    entropy_term: float
    eps: float

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "mean_term": self.mean_term,
            "transport_term": self.transport_term,
            "entropy_term": self.entropy_term,
        }


@dataclass(frozen=True)
class ReferenceMeasure:
    """Reference law ``N(0, lam * I)`` for the relative-entropy regularizer."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0:
            raise ValidationError(f"reference variance must be > 0, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)


def _pair(p, q):
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")


def _trace_product(a, b) -> float:
    # Tr(A B) for symmetric A, B
    return float(np.sum(np.asarray(a) * np.asarray(b)))


def entropic_cost(p: Gaussian, q: Gaussian, eps) -> CostBreakdown:
    """Entropy-regularized quadratic transport cost between two Gaussians.

    At ``eps = 0`` this is the squared Bures-Wasserstein distance and the
    entropy term is exactly zero.
    """
    _pair(p, q)
    eps = _check_eps(eps, allow_zero=True)
    d = p.dim
    mean_term = float(np.sum((p.mean - q.mean) ** 2))
    if eps == 0.0:
        root = p.cov.sqrt
        cross = SpdMatrix(root @ q.cov @ root, sym_tol=None).sqrt.trace()
        transport = p.cov.trace() + q.cov.trace() - 2.0 * cross
        return CostBreakdown(mean_term + transport, mean_term, transport, 0.0, 0.0)

    x = solve_riccati(p.cov, q.cov, eps).x_eps
    transport = p.cov.trace() + q.cov.trace() - 2.0 * _trace_product(p.cov, x)
    logdet_s1x = p.cov.logdet + x.logdet
    entropy = -0.5 * eps * (2 * d * LOG_2PI_E + d * np.log(0.5 * eps) + logdet_s1x)
    return CostBreakdown(mean_term + transport + entropy, mean_term, transport, entropy, eps)


def relative_entropic_cost(p: Gaussian, q: Gaussian, eps, ref: ReferenceMeasure) -> CostBreakdown:
    """Cost with ``eps * KL(pi | N(0, lam I) x N(0, lam I))`` as the regularizer.

    The optimal coupling is the same as for :func:`entropic_cost`; only the
    value changes. ``mean_term`` here includes the
    ``(eps / 2 lam)(|m1|^2 + |m2|^2)`` contribution of the reference.
    """
    _pair(p, q)
    eps = _check_eps(eps, allow_zero=False)
    if not isinstance(ref, ReferenceMeasure):
        ref = ReferenceMeasure(ref)
    lam, d = ref.lam, p.dim
    mean_term = float(
        np.sum((p.mean - q.mean) ** 2)
        + eps / (2.0 * lam) * (np.sum(p.mean**2) + np.sum(q.mean**2))
    )
    x = solve_riccati(p.cov, q.cov, eps).x_eps
    traces = p.cov.trace() + q.cov.trace()
    transport = traces - 2.0 * _trace_product(p.cov, x)
    logdet_s1x = p.cov.logdet + x.logdet
    # KL(pi0 | ref x ref) = H(pi0) + d log(2 pi lam) + (Tr S1 + Tr S2 + |m1|^2 + |m2|^2) / (2 lam)
    entropy = -0.5 * eps * (
        logdet_s1x - traces / lam - 2 * d * np.log(lam) + d * np.log(0.5 * eps) + 2 * d
    )
    return CostBreakdown(mean_term + transport + entropy, mean_term, transport, entropy, eps)


def gelbrich_lower_bound(mean1, cov1, mean2, cov2, eps) -> float:
    """Lower bound on the entropic cost between any laws with these moments.

    The bound is attained exactly when both laws are Gaussian.
    """
    p = validate_gaussian(mean1, cov1)
    q = validate_gaussian(mean2, cov2)
    return entropic_cost(p, q, eps).total


def best_approximation(p: Gaussian, eps) -> tuple[Gaussian, float]:
    """Minimizer of ``Q -> cost(p, Q)`` and the minimal value.

    The minimizer is ``p`` convolved with ``N(0, (eps/2) I)``; the value
    ``-(eps/2) log det S - (d eps/2) log(2 pi^2 e eps)`` is computed directly,
    not through :func:`entropic_cost`.
    """
    eps = _check_eps(eps, allow_zero=False)
    d = p.dim
    cov = p.cov.apply(lambda w: w + 0.5 * eps)
    value = -0.5 * eps * p.cov.logdet - 0.5 * d * eps * np.log(2.0 * np.pi**2 * np.e * eps)
    return Gaussian(p.mean, cov), float(value)


def cost_1d(var1, var2, eps) -> float:
    """Entropic cost between ``N(0, var1)`` and ``N(0, var2)`` on the real line.

    Scalar evaluation of the general formula: with
    ``t = sqrt(var1 var2 + (eps/4)^2) - eps/4`` (the product ``S1 X``),
    the cost is ``var1 + var2 - 2 t - (eps/2) log((2 pi e)^2 (eps/2) t)``.
    """
    var1, var2, eps = float(var1), float(var2), float(eps)
    if not (var1 > 0 and var2 > 0 and eps > 0):
        raise ValidationError("variances and eps must all be positive")
    q = eps / 4.0
    s = var1 * var2
    t = s / (np.sqrt(s + q * q) + q)
    return float(var1 + var2 - 2.0 * t - 0.5 * eps * (2 * LOG_2PI_E + np.log(0.5 * eps * t)))
