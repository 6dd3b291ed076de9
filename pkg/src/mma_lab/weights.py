"""Weight optimization for model averaging.

Three exact solvers share this module. For nested candidate sets the
averaging criterion separates across coordinate groups once weights are
rewritten cumulatively (gamma_j = sum of the weights of models j and
larger), so the simplex problem becomes isotonic regression over convex
per-group quadratics and is solved exactly by pool-adjacent-violators.
Step-discretized weights (multiples of 1/N) become a dynamic program over
the monotone integer lattice. Arbitrary candidate sets fall back to a
dense active-set quadratic program over the simplex.
"""

from __future__ import annotations

import math

import numpy as np

from .candidates import CandidateSet, group_slices

__all__ = [
    "gamma_from_w",
    "w_from_gamma",
    "group_sums",
    "mma_criterion",
    "criterion_blocks",
    "criterion_qp_parts",
    "solve_nested",
    "solve_discrete",
    "solve_qp",
    "solve_monotone_blocks",
    "minimize_monotone_lattice",
    "simplex_qp",
]

# feasibility tolerances for returned weight vectors
W_CLIP = -1e-12
W_SUM_TOL = 1e-9


def gamma_from_w(w) -> np.ndarray:
    """Cumulative weights gamma_j = sum_{m >= j} w_m."""
    w = np.asarray(w, dtype=float)
    return np.cumsum(w[::-1])[::-1]


def w_from_gamma(gamma) -> np.ndarray:
    """Inverse of gamma_from_w: w_m = gamma_m - gamma_{m+1}, gamma_{M+1} = 0."""
    g = np.asarray(gamma, dtype=float)
    return np.concatenate((g[:-1] - g[1:], g[-1:]))


def _clean_weights(w: np.ndarray) -> np.ndarray:
    """Clip tiny negatives and renormalize; larger violations are solver bugs."""
    w = np.asarray(w, dtype=float)
    if w.min(initial=0.0) < W_CLIP:
        raise RuntimeError(f"weight {w.min():.3e} below feasibility tolerance")
    w = np.clip(w, 0.0, None)
    s = w.sum()
    if abs(s - 1.0) > W_SUM_TOL:
        raise RuntimeError(f"weights sum to {s!r}, outside tolerance")
    return w / s


def group_sums(values, cset: CandidateSet) -> np.ndarray:
    """Sum `values` (one entry per coordinate) over each nested group."""
    values = np.asarray(values, dtype=float)
    lo, hi = group_slices(cset)
    c = np.concatenate(([0.0], np.cumsum(values)))
    return c[hi] - c[lo]


def criterion_blocks(view, cset: CandidateSet, sigma2_hat: float):
    """Per-group quadratics of the averaging criterion in gamma coordinates.

    The criterion equals sum_j (A_j g_j^2 + B_j g_j) + const with
    A_j the group sum of theta_hat^2 and B_j = 2(sigma2_hat d_j / n - A_j),
    d_j the group width; const = ||y||^2/n.
    """
    lo, hi = group_slices(cset)
    A = group_sums(view.theta_hat ** 2, cset)
    d = (hi - lo).astype(float)
    B = 2.0 * (sigma2_hat * d / view.n - A)
    return A, B, view.yty / view.n


def mma_criterion(view, cset: CandidateSet, gamma, sigma2_hat: float) -> float:
    """Averaging criterion for cumulative weights over a nested set.

    Equals the direct form ||y - fhat_w||^2/n + 2 sigma2_hat k'w/n evaluated
    through the group decomposition.
    """
    g = np.asarray(gamma, dtype=float)
    if g.shape != (len(cset),):
        raise ValueError(f"gamma length {g.shape} does not match {len(cset)} models")
    A, B, const = criterion_blocks(view, cset, sigma2_hat)
    return float(g @ (A * g) + B @ g + const)


def _block_argmin(a: float, b: float) -> float:
    # minimizer of a*g^2 + b*g over [0, 1]; a == 0 covers zero-signal groups
    if a <= 0.0:
        return 0.0 if b > 0.0 else 1.0
    return min(1.0, max(0.0, -b / (2.0 * a)))


def solve_monotone_blocks(A, B, pin_first: bool = True) -> np.ndarray:
    """Exactly minimize sum_j A_j g_j^2 + B_j g_j over 1 >= g_1 >= ... >= g_M >= 0.

    pin_first additionally fixes g_1 = 1, which is the simplex constraint in
    cumulative coordinates (block 1's quadratic then never matters).
    Pool-adjacent-violators over the convex blocks: pooling adds the A and B
    coefficients, a pooled block's value is the clipped vertex -B/(2A).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 1:
        raise ValueError("A and B must be equal-length vectors")
    M = A.size
    start = 1 if pin_first else 0
    # stack entries: [a_sum, b_sum, value, block_count]
    stack: list[list] = []
    for j in range(start, M):
        a, b = A[j], B[j]
        stack.append([a, b, _block_argmin(a, b), 1])
        while len(stack) > 1 and stack[-1][2] > stack[-2][2]:
            a2, b2, _, c2 = stack.pop()
            stack[-1][0] += a2
            stack[-1][1] += b2
            stack[-1][2] = _block_argmin(stack[-1][0], stack[-1][1])
            stack[-1][3] += c2
    tail = np.repeat([e[2] for e in stack], [e[3] for e in stack]) if stack else np.empty(0)
    if pin_first:
        return np.concatenate(([1.0], tail))
    return tail


def solve_nested(view, cset: CandidateSet, sigma2_hat: float) -> np.ndarray:
    """Exact criterion-minimizing cumulative weights over a nested set."""
    A, B, _ = criterion_blocks(view, cset, sigma2_hat)
    return solve_monotone_blocks(A, B, pin_first=True)


def minimize_monotone_lattice(block_costs) -> tuple:
    """Minimize sum_j q[j][t_j] over integer levels N = t_1 >= ... >= t_M >= 0.

    block_costs is an (M, N+1) table; t_1 is pinned at the top level N.
    Dynamic program over levels, O(M*N). Ties are broken toward the smaller
    level sum, then toward the lexicographically smallest level vector, so
    the result is deterministic. Returns (levels, value).
    """
    q = np.asarray(block_costs, dtype=float)
    if q.ndim != 2:
        raise ValueError("block_costs must be a 2-d table")
    M, width = q.shape
    N = width - 1
    # ex_val[t], ex_ts[t]: best value and level-sum over blocks j..M-1 with t_j = t
    ex_val = [float(q[M - 1][t]) for t in range(width)]
    ex_ts = list(range(width))
    choices = []
    for j in range(M - 2, -1, -1):
        pm_arg = [0] * width
        pm_val = [0.0] * width
        pm_ts = [0] * width
        best_v, best_s, best_t = math.inf, 0, 0
        for t in range(width):
            if (ex_val[t], ex_ts[t]) < (best_v, best_s):
                best_v, best_s, best_t = ex_val[t], ex_ts[t], t
            pm_val[t], pm_ts[t], pm_arg[t] = best_v, best_s, best_t
        choices.append(pm_arg)
        ex_val = [float(q[j][t]) + pm_val[t] for t in range(width)]
        ex_ts = [t + pm_ts[t] for t in range(width)]
    levels = [N]
    for pm_arg in reversed(choices):
        levels.append(pm_arg[levels[-1]])
    return levels, ex_val[N]


def solve_discrete(view, cset: CandidateSet, sigma2_hat: float, n_steps: int) -> np.ndarray:
    """Exact criterion minimizer when weights are multiples of 1/n_steps.

    In cumulative coordinates the feasible set is the monotone integer
    lattice gamma_j = t_j / N with N = t_1 >= ... >= t_M >= 0, so the group
    decomposition turns the search into a dynamic program.
    """
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    A, B, _ = criterion_blocks(view, cset, sigma2_hat)
    g = np.arange(n_steps + 1) / n_steps
    qtab = np.outer(A, g ** 2) + np.outer(B, g)
    levels, _ = minimize_monotone_lattice(qtab)
    return np.asarray(levels, dtype=float) / n_steps


def criterion_qp_parts(view, cset: CandidateSet, sigma2_hat: float):
    """Quadratic form of the criterion in plain weights: w'Qw + b'w + const.

    Q_{mm'} = <fhat_m, fhat_m'>/n and b_m = -2<y, fhat_m>/n + 2 sigma2_hat k_m/n.
    Nested sets assemble Q from cumulative coordinate sums; subset sets
    interpret each index set as a selection of orthogonalized coordinates
    (the sequence-model reading under which the subset theory is exact).
    """
    t2 = view.theta_hat ** 2
    if cset.kind == "nested":
        k = np.asarray(cset.sizes, dtype=int)
        T = np.cumsum(t2)[k - 1]
        idx = np.minimum.outer(np.arange(k.size), np.arange(k.size))
        Q = T[idx]
        proj = T
    else:
        masks = np.zeros((len(cset), view.p))
        for m, s in enumerate(cset.index_sets):
            for j in s:
                masks[m, j - 1] = 1.0
        Q = (masks * t2) @ masks.T
        proj = masks @ t2
        k = np.asarray([len(s) for s in cset.index_sets], dtype=int)
    b = -2.0 * proj + 2.0 * sigma2_hat * k / view.n
    return Q, b, view.yty / view.n


def simplex_qp(Q, b, tol: float = 1e-8, max_iter: int | None = None) -> np.ndarray:
    """Minimize w'Qw + b'w over the unit simplex by a primal active-set method.

    Q must be symmetric positive semidefinite. Starts from the best vertex,
    alternately solves the equality-constrained subproblem on the free set
    and exchanges the worst-violating constraint. Raises RuntimeError with
    the residual if the iteration cap (50 M by default) is hit.
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    M = b.size
    if Q.shape != (M, M):
        raise ValueError("Q/b dimension mismatch")
    if max_iter is None:
        max_iter = 50 * M
    if M == 1:
        return np.ones(1)

    w = np.zeros(M)
    w[int(np.argmin(np.diagonal(Q) + b))] = 1.0
    free = w > 0.0
    residual = math.inf
    for _ in range(max_iter):
        F = np.flatnonzero(free)
        kf = F.size
        KKT = np.zeros((kf + 1, kf + 1))
        KKT[:kf, :kf] = 2.0 * Q[np.ix_(F, F)]
        KKT[:kf, kf] = -1.0
        KKT[kf, :kf] = 1.0
        rhs = np.concatenate((-b[F], [1.0]))
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        wF, lam = sol[:kf], sol[kf]
        if wF.min() >= W_CLIP:
            w = np.zeros(M)
            w[F] = np.clip(wF, 0.0, None)
            g = 2.0 * (Q @ w) + b
            stat = np.abs(g[F] - lam).max()
            mu = g - lam
            bound = np.flatnonzero(~free)
            worst_dual = mu[bound].min() if bound.size else 0.0
            residual = max(stat, -worst_dual, abs(w.sum() - 1.0))
            if residual <= tol:
                return _clean_weights(w)
            if bound.size and worst_dual < -tol:
                free[bound[int(np.argmin(mu[bound]))]] = True
            # else: only the stationarity residual is above tol; re-solving
            # with the same free set cannot help, so report failure
            elif stat > tol:
                break
        else:
            # partial step toward the equality solution, drop the first
            # coordinate that hits zero
            d = wF - w[F]
            shrink = d < 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(shrink, w[F] / -d, math.inf)
            hit = int(np.argmin(steps))
            alpha = min(1.0, steps[hit])
            w[F] = np.clip(w[F] + alpha * d, 0.0, None)
            w[F[hit]] = 0.0
            free[F[hit]] = False
    raise RuntimeError(
        f"simplex QP did not converge within {max_iter} iterations "
        f"(residual {residual:.3e})"
    )


def solve_qp(view, cset: CandidateSet, sigma2_hat: float) -> np.ndarray:
    """Criterion-minimizing plain weights over an arbitrary candidate set."""
    if len(cset) > 2000:
        raise ValueError("dense QP capped at 2000 candidate models")
    Q, b, _ = criterion_qp_parts(view, cset, sigma2_hat)
    return simplex_qp(Q, b)
