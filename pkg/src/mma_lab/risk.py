"""Closed-form risk and oracle calculators on the orthogonal sequence scale.

Everything here is a pure function of a coefficient profile (the true
transformed coefficients, the noise variance, and the sample size):
selection and averaging risks, the infeasible optimal cumulative weights,
discretized-weight oracles, ideal subset risks, a complexity functional
for nested candidate sets, and linear minimax oracles over ellipsoids and
hyperrectangles. Long decaying tails are accumulated with compensated
summation so profiles with 1e5 coordinates keep full precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .candidates import CandidateSet, all_nested, group_slices
from .weights import minimize_monotone_lattice, solve_monotone_blocks

__all__ = [
    "CoefficientProfile",
    "ms_risk",
    "best_ms",
    "ma_risk",
    "oracle_nested",
    "oracle_grouped",
    "oracle_discrete",
    "ideal_subset_ms_risk",
    "ideal_subset_ma_risk",
    "psi",
    "pinsker_oracle",
    "hyperrect_minimax_risk",
]


@dataclass(frozen=True)
class CoefficientProfile:
    """True transformed coefficients theta, noise variance, and sample size."""

    theta: np.ndarray
    sigma2: float
    n: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if not np.isfinite(theta).all():
            raise ValueError("theta must be finite")
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if theta.size > self.n:
            raise ValueError("profile longer than the sample size")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "n", int(self.n))

    @property
    def p(self) -> int:
        return self.theta.size


def _suffix_sums(x) -> np.ndarray:
    """s[i] = sum of x[i:], Neumaier-compensated; s[len(x)] = 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size + 1)
    out[-1] = 0.0
    s = 0.0
    c = 0.0
    for i in range(x.size - 1, -1, -1):
        v = float(x[i])
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


def _validate_successive(cset: CandidateSet, p: int) -> int:
    if cset.kind != "nested" or cset.sizes != tuple(range(1, len(cset) + 1)):
        raise ValueError("candidate set must be the successive models 1..M")
    if cset.sizes[-1] > p:
        raise ValueError("candidate set exceeds the profile length")
    return len(cset)


def ms_risk(profile: CoefficientProfile, m: int) -> float:
    """Risk of selecting the nested model of size m: m sigma2/n + tail of theta^2."""
    if not 0 <= m <= profile.p:
        raise ValueError(f"model size {m} outside 0..{profile.p}")
    tail = _suffix_sums(profile.theta ** 2)
    return m * profile.sigma2 / profile.n + float(tail[m])


def best_ms(profile: CoefficientProfile) -> tuple:
    """(m_star, risk) minimizing the nested selection risk; ties go to smaller m."""
    tail = _suffix_sums(profile.theta ** 2)
    risks = np.arange(profile.p + 1) * (profile.sigma2 / profile.n) + tail
    m = int(np.argmin(risks))
    return m, float(risks[m])


def ma_risk(profile: CoefficientProfile, cset: CandidateSet, gamma) -> float:
    """Risk of fixed cumulative weights over a nested set.

    Per group: (1-g_j)^2 * (group signal) + g_j^2 * (group width) sigma2/n,
    plus the squared signal beyond the largest model.
    """
    g = np.asarray(gamma, dtype=float)
    if g.shape != (len(cset),):
        raise ValueError(f"gamma length {g.shape} does not match {len(cset)} models")
    lo, hi = group_slices(cset)
    if hi[-1] > profile.p:
        raise ValueError("candidate set exceeds the profile length")
    t2 = profile.theta ** 2
    tail = _suffix_sums(t2)
    S = tail[lo] - tail[hi]
    d = (hi - lo).astype(float)
    terms = (1.0 - g) ** 2 * S + g ** 2 * d * profile.sigma2 / profile.n
    return math.fsum(terms) + float(tail[hi[-1]])


def oracle_nested(profile: CoefficientProfile, cset: CandidateSet | None = None) -> tuple:
    """Infeasible optimal cumulative weights over successive models, closed form.

    gamma_1 = 1 and gamma_j = theta_j^2 / (theta_j^2 + sigma2/n) for j >= 2;
    the risk is sigma2/n + sum_{j=2..M} theta_j^2 sigma2 / (n theta_j^2 + sigma2)
    plus the signal beyond model M. The closed form is the exact simplex
    optimum whenever |theta| is nonincreasing over the set.
    """
    if cset is None:
        cset = all_nested(profile.p)
    M = _validate_successive(cset, profile.p)
    s2n = profile.sigma2 / profile.n
    t2 = profile.theta[:M] ** 2
    gamma = np.empty(M)
    gamma[0] = 1.0
    gamma[1:] = t2[1:] / (t2[1:] + s2n)
    body = t2[1:] * profile.sigma2 / (profile.n * t2[1:] + profile.sigma2)
    tail = _suffix_sums(profile.theta ** 2)
    risk = s2n + math.fsum(body) + float(tail[M])
    return gamma, risk


def oracle_grouped(profile: CoefficientProfile, cset: CandidateSet) -> tuple:
    """Infeasible optimal cumulative weights over any nested set.

    Same pool-adjacent-violators machinery as the data solver, with the
    criterion replaced by the exact risk; gamma_1 stays pinned at 1.
    """
    lo, hi = group_slices(cset)
    if hi[-1] > profile.p:
        raise ValueError("candidate set exceeds the profile length")
    t2 = profile.theta ** 2
    tail = _suffix_sums(t2)
    S = tail[lo] - tail[hi]
    d = (hi - lo).astype(float)
    A = S + d * profile.sigma2 / profile.n
    B = -2.0 * S
    gamma = solve_monotone_blocks(A, B, pin_first=True)
    return gamma, ma_risk(profile, cset, gamma)


def oracle_discrete(profile: CoefficientProfile, cset: CandidateSet, n_steps: int) -> tuple:
    """Risk-optimal cumulative weights on the 1/n_steps grid over a nested set.

    Dynamic program over the monotone integer lattice; returns (gamma, risk).
    """
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    lo, hi = group_slices(cset)
    if hi[-1] > profile.p:
        raise ValueError("candidate set exceeds the profile length")
    t2 = profile.theta ** 2
    tail = _suffix_sums(t2)
    S = tail[lo] - tail[hi]
    d = (hi - lo).astype(float)
    g = np.arange(n_steps + 1) / n_steps
    qtab = np.outer(S, (1.0 - g) ** 2) + np.outer(d * profile.sigma2 / profile.n, g ** 2)
    levels, value = minimize_monotone_lattice(qtab)
    gamma = np.asarray(levels, dtype=float) / n_steps
    return gamma, value + float(tail[hi[-1]])


def ideal_subset_ms_risk(profile: CoefficientProfile) -> float:
    """Best selection risk over arbitrary coordinate subsets.

    Only how many coordinates are kept matters once theta^2 is sorted
    descending: min_k { k sigma2/n + sum of the p-k smallest theta^2 }.
    """
    t2 = np.sort(profile.theta ** 2)[::-1]
    tail = _suffix_sums(t2)
    risks = np.arange(profile.p + 1) * (profile.sigma2 / profile.n) + tail
    # rebuild the winning value with a correctly rounded sum so it is
    # reproducible bit for bit from the kept/dropped split alone
    k = int(np.argmin(risks))
    return k * profile.sigma2 / profile.n + math.fsum(t2[k:])


def ideal_subset_ma_risk(profile: CoefficientProfile, constrained: bool = False) -> float:
    """Best averaging risk over all coordinate subsets (the ideal lower bound).

    Per coordinate the optimal shrinkage gives theta_j^2 sigma2/(n theta_j^2
    + sigma2). With constrained=True the largest coordinate is forced to
    full weight (the cumulative-weights-pinned variant); the two differ by
    O(1/n^2).
    """
    t2 = profile.theta ** 2
    terms = t2 * profile.sigma2 / (profile.n * t2 + profile.sigma2)
    if not constrained:
        return math.fsum(terms)
    if profile.p == 0:
        return 0.0
    j0 = int(np.argmax(t2))
    keep = np.delete(terms, j0)
    return profile.sigma2 / profile.n + math.fsum(keep)


def psi(profile: CoefficientProfile, cset: CandidateSet) -> float:
    """Complexity functional of a nested candidate set against a profile.

    inner = min(M, 1 + sum_j (k_{j+1}-k_j)/(4 k_j)
                     + sum_{j<M'} (S_{j-1}-S_j)/(4 S_j)),
    where S_t is the squared signal between model t and the largest model
    (S_0 counts from the start) and M' is the first index with S = 0; the
    value is inner * (1 + log M)^2. Zero-over-zero terms count as zero,
    which the M' truncation implements.
    """
    if cset.kind != "nested":
        raise ValueError("complexity functional requires a nested set")
    k = np.asarray(cset.sizes, dtype=int)
    if k[-1] > profile.p:
        raise ValueError("candidate set exceeds the profile length")
    M = k.size
    tail = _suffix_sums(profile.theta ** 2)
    bounds = np.concatenate(([0], k))
    S = tail[bounds[:-1]] - tail[k[-1]]  # S_0 .. S_{M-1}
    first = math.fsum((k[j + 1] - k[j]) / (4.0 * k[j]) for j in range(M - 1))
    m_prime = M
    for j in range(1, M):
        if S[j] <= 0.0:
            m_prime = j
            break
    second = math.fsum((S[j - 1] - S[j]) / (4.0 * S[j]) for j in range(1, m_prime))
    inner = min(float(M), 1.0 + first + second)
    return inner * (1.0 + math.log(M)) ** 2


def pinsker_oracle(
    alpha: float, radius: float, sigma2: float, n: int, p: int | None = None
) -> tuple:
    """Linear minimax shrinkage over the ellipsoid sum_j j^(2 alpha) theta_j^2 <= radius.

    Weights take the form (1 - kappa j^alpha)_+ with kappa solving
    (sigma2/n) sum_j j^alpha (1 - kappa j^alpha)_+ = kappa * radius,
    found by bisection on [0, 1] to relative precision 1e-10. Returns
    (weights, sup risk over the ellipsoid), the sup risk being the variance
    term plus the worst-case squared bias radius * max_j (1-g_j)^2 j^(-2 alpha).
    """
    if alpha <= 0 or radius <= 0 or sigma2 <= 0 or n < 1:
        raise ValueError("need alpha > 0, radius > 0, sigma2 > 0, n >= 1")
    p = n if p is None else int(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    j = np.arange(1, p + 1, dtype=float)
    ja = j ** alpha

    def excess(kappa: float) -> float:
        w = np.clip(1.0 - kappa * ja, 0.0, None)
        return sigma2 / n * math.fsum(ja * w) - kappa * radius

    lo, hi = 0.0, 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo > 0.0 and f_hi < 0.0):
        raise ArithmeticError("no sign change bracketing the shrinkage threshold")
    for _ in range(200):
        if hi - lo <= 1e-10 * hi:
            break
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    kappa = 0.5 * (lo + hi)
    gamma = np.clip(1.0 - kappa * ja, 0.0, None)
    variance = sigma2 / n * math.fsum(gamma ** 2)
    bias = radius * float(((1.0 - gamma) ** 2 / j ** (2.0 * alpha)).max())
    return gamma, variance + bias


def hyperrect_minimax_risk(c: float, q: float, sigma2: float, n: int) -> float:
    """Linear minimax risk over the hyperrectangle |theta_j| <= c j^-q:
    sum_{j=1..n} c^2 j^(-2q) sigma2 / (n c^2 j^(-2q) + sigma2)."""
    if c <= 0 or q <= 0.5 or sigma2 <= 0 or n < 1:
        raise ValueError("need c > 0, q > 1/2, sigma2 > 0, n >= 1")
    j = np.arange(1, n + 1, dtype=float)
    b2 = c ** 2 * j ** (-2.0 * q)
    return math.fsum(b2 * sigma2 / (n * b2 + sigma2))
