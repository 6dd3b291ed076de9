import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mma_lab.candidates import CandidateSet, all_subsets, successive
from mma_lab.seqmodel import RegressionData, orthogonalize
from mma_lab.weights import (
    criterion_blocks,
    criterion_qp_parts,
    gamma_from_w,
    minimize_monotone_lattice,
    mma_criterion,
    simplex_qp,
    solve_discrete,
    solve_monotone_blocks,
    solve_nested,
    solve_qp,
    w_from_gamma,
)


def random_instance(seed, n_max=50, m_max=6):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(2, m_max + 1))
    p = int(rng.integers(M, min(n_max, 12) + 1))
    n = int(rng.integers(p + 1, n_max + 1))
    X = rng.standard_normal((n, p))
    y = X @ rng.standard_normal(p) * rng.uniform(0.2, 2.0) + rng.standard_normal(n)
    view = orthogonalize(RegressionData(X=X, y=y))
    sigma2 = float(rng.uniform(0.3, 3.0))
    return view, successive(M, p), sigma2


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=15))
def test_gamma_w_roundtrip(raw):
    total = sum(raw)
    if total <= 0:
        return
    w = np.asarray(raw) / total
    gamma = gamma_from_w(w)
    assert gamma[0] == pytest.approx(1.0, abs=1e-12)
    assert (np.diff(gamma) <= 1e-15).all()
    assert np.allclose(w_from_gamma(gamma), w, atol=1e-12)


def test_criterion_matches_direct_least_squares():
    # the grouped gamma form must equal the definition computed per model
    rng = np.random.default_rng(2)
    for seed in range(10):
        view, cset, sigma2 = random_instance(seed)
        gamma = np.sort(rng.uniform(0.0, 1.0, len(cset)))[::-1]
        gamma[0] = 1.0
        w = w_from_gamma(gamma)
        mine = mma_criterion(view, cset, gamma, sigma2)
        # rebuild the raw design problem for the reference
        X = view.phi * math.sqrt(view.n)  # orthonormal design with same spans
        ref = oracles.criterion_direct(X, view.y, cset.sizes, w, sigma2)
        assert mine == pytest.approx(ref, abs=1e-10)


def test_single_model_criterion():
    view, _, sigma2 = random_instance(0)
    m = 3
    cset = CandidateSet(kind="nested", p=view.p, sizes=(m,))
    fit = math.sqrt(view.n) * (view.phi[:, :m] @ view.theta_hat[:m])
    resid = view.y - fit
    direct = float(resid @ resid) / view.n + 2 * sigma2 * m / view.n
    assert mma_criterion(view, cset, np.ones(1), sigma2) == pytest.approx(direct)


def test_solve_nested_monotone_and_pinned():
    for seed in range(20):
        view, cset, sigma2 = random_instance(seed)
        gamma = solve_nested(view, cset, sigma2)
        assert gamma[0] == 1.0
        assert (np.diff(gamma) <= 1e-12).all()
        assert gamma.min() >= 0.0 and gamma.max() <= 1.0


def test_solve_nested_beats_small_grid():
    for seed in range(5):
        view, cset, sigma2 = random_instance(seed, m_max=4)
        A, B, const = criterion_blocks(view, cset, sigma2)
        gamma = solve_nested(view, cset, sigma2)
        mine = float(gamma @ (A * gamma) + B @ gamma)
        best = oracles.grid_min_nested(A, B, steps=50)[0]
        assert mine <= best + 1e-12


def test_pava_pin_excludes_first_block():
    # first block wants gamma < 1 badly, but the pin must not drag block 2
    A = np.array([10.0, 1.0])
    B = np.array([5.0, -1.0])  # block 1 vertex at -0.25, block 2 at 0.5
    gamma = solve_monotone_blocks(A, B, pin_first=True)
    assert gamma.tolist() == [1.0, 0.5]
    free = solve_monotone_blocks(A, B, pin_first=False)
    assert free.tolist() == [0.0, 0.0]  # 0 >= 0.5 violated -> pooled


def test_pava_zero_curvature_blocks():
    gamma = solve_monotone_blocks(
        np.array([1.0, 0.0, 0.0]), np.array([-2.0, 1.0, -0.5]), pin_first=True
    )
    # A=0, B>0 wants 0; A=0, B<0 wants 1; pooling enforces monotonicity
    assert (np.diff(gamma) <= 0).all()
    assert gamma[0] == 1.0


@given(st.integers(0, 10 ** 6))
@settings(max_examples=60)
def test_lattice_dp_equals_enumeration(seed):
    rng = np.random.default_rng(seed)
    M = int(rng.integers(1, 5))
    N = int(rng.integers(1, 5))
    q = rng.uniform(-1.0, 1.0, (M, N + 1))
    levels, value = minimize_monotone_lattice(q)
    ref_levels, ref_value = oracles.lattice_enumerate(q)
    assert levels == ref_levels
    assert value == ref_value


def test_lattice_tie_breaks_prefer_small_levels():
    # flat costs: every monotone vector ties at 0; want all-zero tail
    q = np.zeros((3, 4))
    levels, value = minimize_monotone_lattice(q)
    assert levels == [3, 0, 0]
    assert value == 0.0
    # symmetric two-block tie between levels 0 and N in the second block
    q2 = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
    levels2, _ = minimize_monotone_lattice(q2)
    assert levels2 == [2, 0]


def test_solve_discrete_matches_dp_table():
    for seed in range(5):
        view, cset, sigma2 = random_instance(seed)
        for N in (1, 2, 5):
            gamma = solve_discrete(view, cset, sigma2, N)
            assert gamma[0] == 1.0
            assert (np.diff(gamma) <= 0).all()
            scaled = gamma * N
            assert np.allclose(scaled, np.round(scaled), atol=1e-12)


def test_discrete_dominance_chain():
    # W(N) subset of W(2N): optimal criterion can only improve along the chain
    view, cset, sigma2 = random_instance(3)
    cont = mma_criterion(view, cset, solve_nested(view, cset, sigma2), sigma2)
    prev = math.inf
    for N in (1, 2, 4, 8, 16):
        val = mma_criterion(view, cset, solve_discrete(view, cset, sigma2, N), sigma2)
        assert val <= prev + 1e-12
        assert val >= cont - 1e-12
        prev = val


def test_discrete_large_n_approaches_continuous():
    for seed in range(3):
        view, cset, sigma2 = random_instance(seed)
        cont = mma_criterion(view, cset, solve_nested(view, cset, sigma2), sigma2)
        disc = mma_criterion(view, cset, solve_discrete(view, cset, sigma2, 10 ** 4), sigma2)
        assert disc - cont <= 1e-4


def test_discrete_n1_is_model_selection():
    view, cset, sigma2 = random_instance(4)
    gamma = solve_discrete(view, cset, sigma2, 1)
    vertex_values = [
        mma_criterion(view, cset, gamma_from_w(np.eye(len(cset))[m]), sigma2)
        for m in range(len(cset))
    ]
    assert mma_criterion(view, cset, gamma, sigma2) == pytest.approx(min(vertex_values))


def test_qp_agrees_with_pava_on_nested():
    for seed in range(10):
        view, cset, sigma2 = random_instance(seed)
        pava_val = mma_criterion(view, cset, solve_nested(view, cset, sigma2), sigma2)
        w = solve_qp(view, cset, sigma2)
        qp_val = mma_criterion(view, cset, gamma_from_w(w), sigma2)
        assert abs(qp_val - pava_val) <= 1e-7
        assert w.min() >= 0.0
        assert w.sum() == pytest.approx(1.0, abs=1e-9)


def test_simplex_qp_matches_fine_grid():
    rng = np.random.default_rng(8)
    for _ in range(3):
        H = rng.standard_normal((3, 3))
        Q = H.T @ H + 0.1 * np.eye(3)
        b = rng.standard_normal(3)
        w = simplex_qp(Q, b)
        mine = float(w @ Q @ w + b @ w)
        ref = oracles.simplex_grid_min(Q, b, steps=1000)
        assert mine <= ref + 1e-5


def test_simplex_qp_single_model():
    assert simplex_qp(np.array([[2.0]]), np.array([-1.0])).tolist() == [1.0]


def test_simplex_qp_iteration_cap():
    rng = np.random.default_rng(1)
    H = rng.standard_normal((6, 6))
    Q = H.T @ H
    b = -Q @ (np.ones(6) / 6)  # interior optimum, needs several exchanges
    with pytest.raises(RuntimeError, match="did not converge"):
        simplex_qp(Q, 2.0 * b, max_iter=1)


def test_qp_parts_subsets_match_direct():
    rng = np.random.default_rng(5)
    n, p = 30, 5
    X = rng.standard_normal((n, p))
    y = X @ (1.0 / np.arange(1, p + 1)) + rng.standard_normal(n)
    view = orthogonalize(RegressionData(X=X, y=y))
    cset = all_subsets(p)
    Q, b, const = criterion_qp_parts(view, cset, 1.0)
    w = solve_qp(view, cset, 1.0)
    # direct evaluation: subset fits keep the chosen orthogonalized coordinates
    fits = np.zeros((len(cset), n))
    for m, idx in enumerate(cset.index_sets):
        mask = np.zeros(p)
        mask[[i - 1 for i in idx]] = 1.0
        fits[m] = math.sqrt(n) * (view.phi @ (mask * view.theta_hat))
    favg = w @ fits
    sizes = np.array([len(s) for s in cset.index_sets])
    direct = float((y - favg) @ (y - favg)) / n + 2.0 * (w @ sizes) / n
    assert float(w @ Q @ w + b @ w + const) == pytest.approx(direct, abs=1e-12)


def test_solve_qp_model_cap():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((15, 12))
    view = orthogonalize(RegressionData(X=X, y=rng.standard_normal(15)))
    sets = tuple(
        frozenset(j + 1 for j in range(12) if mask >> j & 1) for mask in range(1, 2002)
    )
    big = CandidateSet(kind="subsets", p=12, index_sets=sets)
    with pytest.raises(ValueError, match="2000"):
        solve_qp(view, big, 1.0)
