"""Noise-variance estimators and Cp-style model selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VarianceEstimate",
    "sigma2_lsq",
    "sigma2_rice",
    "cp_select",
]

# default fraction of the sample used by the model-based estimator
LSQ_KAPPA = 0.5


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    method: str

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("variance estimate must be nonnegative")


def _residual_sumsq(view, m: int) -> float:
    # ||y - P_m y||^2 through the orthogonal coordinates; clip the tiny
    # negative that cancellation can produce at m = p on noiseless data
    fit = view.n * float(np.cumsum(view.theta_hat ** 2)[m - 1]) if m > 0 else 0.0
    return max(view.yty - fit, 0.0)


def sigma2_lsq(view, m: int | None = None) -> VarianceEstimate:
    """Model-based estimator ||y - P_m y||^2 / (n - m).

    m defaults to min(floor(n/2), p), large enough to soak up the signal of
    the scenarios this package targets while keeping n - m degrees of freedom.
    """
    if m is None:
        m = min(int(LSQ_KAPPA * view.n), view.p)
    if not 0 <= m < view.n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={view.n}")
    if m > view.p:
        raise ValueError(f"model size {m} exceeds p={view.p}")
    return VarianceEstimate(_residual_sumsq(view, m) / (view.n - m), f"lsq({m})")


def sigma2_rice(y_ordered) -> VarianceEstimate:
    """First-difference estimator over responses ordered by a covariate:
    sum of squared consecutive differences over 2(n-1)."""
    y = np.asarray(y_ordered, dtype=float).reshape(-1)
    if y.size < 2:
        raise ValueError("need at least two observations")
    d = np.diff(y)
    return VarianceEstimate(float(d @ d) / (2.0 * (y.size - 1)), "rice")


def cp_select(view, sigma2_hat: float, max_m: int | None = None) -> int:
    """Size minimizing ||y - P_m y||^2/n + 2 sigma2_hat m/n over 0..max_m.

    Ties go to the smaller model.
    """
    if max_m is None:
        max_m = view.p
    if not 0 <= max_m <= view.p:
        raise ValueError(f"need 0 <= max_m <= p, got {max_m}")
    fits = np.concatenate(([0.0], view.n * np.cumsum(view.theta_hat ** 2)[:max_m]))
    crit = (view.yty - fits) / view.n + 2.0 * sigma2_hat * np.arange(max_m + 1) / view.n
    return int(np.argmin(crit))
