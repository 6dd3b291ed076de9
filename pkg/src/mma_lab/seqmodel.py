"""Orthogonal sequence-model view of a linear regression problem.

A full-rank design X (n x p) is factored column by column into an
orthonormal basis phi, ordered so that phi_j phi_j' is exactly the
increment P_j - P_{j-1} between the projections onto the first j-1 and
the first j columns. In that basis every nested least-squares fit is a
truncated sum of transformed coefficients theta_hat_j = phi_j'y/sqrt{n},
which is the representation all weight solvers and risk formulas in this
package operate on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RankDeficientError",
    "RegressionData",
    "SequenceView",
    "orthogonalize",
    "nested_fit",
    "loss",
]

# relative tolerance below which a triangular-factor diagonal entry means
# the corresponding column adds no new direction
RANK_RTOL = 1e-10


class RankDeficientError(ValueError):
    """Design matrix is numerically rank deficient."""


def _positive_qr(X):
    # thin QR with the triangular factor's diagonal forced positive, so the
    # factorization (and hence phi) is the unique Gram-Schmidt one and the
    # columns of Q span the successive increments of the column space
    Q, R = np.linalg.qr(X, mode="reduced")
    sign = np.where(np.diagonal(R) < 0.0, -1.0, 1.0)
    return Q * sign, R * sign[:, None]


def _check_rank(R):
    d = np.abs(np.diagonal(R))
    scale = d.max(initial=0.0)
    bad = np.flatnonzero(d <= RANK_RTOL * scale) if scale > 0.0 else np.arange(d.size)
    if bad.size:
        raise RankDeficientError(
            "design column %d is (numerically) linearly dependent on the "
            "columns before it" % (bad[0] + 1)
        )


@dataclass
class RegressionData:
    """A fixed-design regression problem y = f + noise with f = X beta.

    f and sigma2 are oracle-only fields: they are known in simulations and
    absent for real data. The orthogonal factorization is computed once at
    construction (which is also the full-column-rank check) and reused by
    orthogonalize().
    """

    X: np.ndarray
    y: np.ndarray
    f: np.ndarray | None = None
    sigma2: float | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.X.ndim != 2:
            raise ValueError("design must be a 2-d array")
        n, p = self.X.shape
        if p < 1:
            raise ValueError("design needs at least one column")
        if p > n:
            raise ValueError(f"more regressors ({p}) than observations ({n})")
        if self.y.shape != (n,):
            raise ValueError("response length does not match design rows")
        if self.f is not None:
            self.f = np.asarray(self.f, dtype=float).reshape(-1)
            if self.f.shape != (n,):
                raise ValueError("true mean length does not match design rows")
        if self.sigma2 is not None:
            self.sigma2 = float(self.sigma2)
            if not self.sigma2 > 0.0:
                raise ValueError("sigma2 must be positive")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise ValueError("design/response must be finite")
        self._Q, self._R = _positive_qr(self.X)
        _check_rank(self._R)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SequenceView:
    """The problem rewritten on the orthonormal basis phi.

    theta_hat are the fitted transformed coefficients, theta_true the exact
    ones (only when the true mean was supplied). yty caches ||y||^2 so the
    averaging criterion does not touch y again.
    """

    phi: np.ndarray
    theta_hat: np.ndarray
    y: np.ndarray
    n: int
    yty: float
    theta_true: np.ndarray | None = None
    f: np.ndarray | None = None
    sigma2: float | None = None

    @property
    def p(self) -> int:
        return self.phi.shape[1]


def orthogonalize(data: RegressionData) -> SequenceView:
    """Return the sequence-model view of the regression problem.

    phi has orthonormal columns with span(phi[:, :j]) equal to the span of
    the first j design columns for every j; column order therefore matters
    and is never pivoted. theta_hat_j = phi_j'y/sqrt(n) and, when the true
    mean f is known, theta_true_j = phi_j'f/sqrt(n).
    """
    Q = data._Q
    rn = math.sqrt(data.n)
    theta_hat = (Q.T @ data.y) / rn
    theta_true = (Q.T @ data.f) / rn if data.f is not None else None
    return SequenceView(
        phi=Q,
        theta_hat=theta_hat,
        y=data.y,
        n=data.n,
        yty=float(data.y @ data.y),
        theta_true=theta_true,
        f=data.f,
        sigma2=data.sigma2,
    )


def nested_fit(view: SequenceView, m: int) -> np.ndarray:
    """Least-squares fit on the first m regressors: sqrt(n) * phi[:, :m] @ theta_hat[:m].

    m = 0 is the zero fit, m = p the full least-squares fit.
    """
    if not 0 <= m <= view.p:
        raise ValueError(f"model size {m} outside 0..{view.p}")
    if m == 0:
        return np.zeros(view.n)
    return math.sqrt(view.n) * (view.phi[:, :m] @ view.theta_hat[:m])


def loss(view: SequenceView, fitted: np.ndarray) -> float:
    """Normalized squared error n^-1 ||fitted - f||^2 against the true mean."""
    if view.f is None:
        raise ValueError("true mean unknown; loss is an oracle quantity")
    fitted = np.asarray(fitted, dtype=float).reshape(-1)
    if fitted.shape != (view.n,):
        raise ValueError("fitted vector has wrong length")
    d = fitted - view.f
    return float(d @ d) / view.n
