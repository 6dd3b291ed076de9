"""Deterministic Monte Carlo engine for the regression experiments.

Scenario generation draws a fresh Gaussian design and noise per
replication from an RNG stream keyed by (master_seed, replication index),
so any replication is regenerable in isolation and reports are
byte-identical for a fixed seed no matter how many workers run. A method
registry wires the candidate-set constructions and weight solvers into the
named estimators the experiments compare, always relative to the
all-nested-models averaging baseline.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import candidates
from .risk import CoefficientProfile, best_ms
from .seqmodel import RegressionData, orthogonalize
from .variance import cp_select, sigma2_lsq, sigma2_rice
from .weights import solve_discrete, solve_monotone_blocks, solve_nested

__all__ = [
    "METHOD_IDS",
    "ScenarioConfig",
    "RiskReport",
    "design_dim",
    "coefficients",
    "noise_variance",
    "gen_replication",
    "population_m_star",
    "run_method",
    "run_scenario",
    "table2",
    "risk_ratio_curve",
    "cells_from_config",
]

BASELINE = "M-ALL"
ORACLE = "ORACLE"
METHOD_IDS = (
    "WR1",
    "WR2",
    "MR1",
    "MR2",
    "M-ALL",
    "M-G1",
    "M-G2",
    "M-MS1",
    "M-MS2",
    "ORACLE",
)

CSV_COLUMNS = ("case", "alpha", "n", "method", "mean", "se", "R", "seed")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: a decay case at one sample size."""

    case: str  # "poly" (theta_j ~ j^-alpha) or "exp" (theta_j ~ exp(-j^alpha))
    alpha: float
    n: int
    reps: int
    master_seed: int
    methods: tuple = METHOD_IDS[:5]
    snr: float = 1.0
    sigma2_mode: str = "known"
    redraw_design: bool = True

    def __post_init__(self):
        if self.case not in ("poly", "exp"):
            raise ValueError(f"unknown case {self.case!r}")
        if self.case == "poly" and not self.alpha > 0.5:
            raise ValueError("polynomial decay needs alpha > 0.5")
        if self.case == "exp" and not self.alpha > 0.0:
            raise ValueError("exponential decay needs alpha > 0")
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if not self.snr > 0.0:
            raise ValueError("snr must be positive")
        if self.sigma2_mode not in ("known", "lsq", "rice"):
            raise ValueError(f"unknown sigma2 mode {self.sigma2_mode!r}")
        object.__setattr__(self, "methods", tuple(self.methods))
        for mid in self.methods:
            if mid not in METHOD_IDS:
                raise ValueError(f"unknown method {mid!r}")


def design_dim(n: int) -> int:
    """Number of regressors used at sample size n: floor(2n/3)."""
    return (2 * n) // 3


def coefficients(case: str, alpha: float, p: int) -> np.ndarray:
    """True regression coefficients beta_j, j = 1..p, for the decay case."""
    j = np.arange(1, p + 1, dtype=float)
    if case == "poly":
        return j ** -alpha
    if case == "exp":
        return np.exp(-(j ** alpha))
    raise ValueError(f"unknown case {case!r}")


def noise_variance(case: str, alpha: float, n: int, snr: float = 1.0) -> float:
    """sigma2 making the signal-to-noise ratio sum_{j>=2} beta_j^2 / sigma2 = snr."""
    beta = coefficients(case, alpha, design_dim(n))
    return math.fsum(beta[1:] ** 2) / snr


def gen_replication(config: ScenarioConfig, rep_index: int) -> RegressionData:
    """Simulate one replication: intercept column, iid standard normal
    regressors, Gaussian noise. The RNG stream is keyed by
    (master_seed, rep_index); the design is drawn first, then the noise.
    With redraw_design=False the design comes from a stream keyed by the
    master seed alone, so every replication reuses the same X.
    """
    n, p = config.n, design_dim(config.n)
    beta = coefficients(config.case, config.alpha, p)
    sigma2 = noise_variance(config.case, config.alpha, config.n, config.snr)
    rng = np.random.default_rng([config.master_seed, rep_index])
    X = np.empty((n, p))
    X[:, 0] = 1.0
    if config.redraw_design:
        X[:, 1:] = rng.standard_normal((n, p - 1))
    else:
        X[:, 1:] = np.random.default_rng([config.master_seed]).standard_normal((n, p - 1))
    f = X @ beta
    y = f + math.sqrt(sigma2) * rng.standard_normal(n)
    return RegressionData(X=X, y=y, f=f, sigma2=sigma2)


def _sigma2_value(view, data, mode: str) -> float:
    if mode == "known":
        if data.sigma2 is None:
            raise ValueError("sigma2_mode 'known' needs the true variance")
        return data.sigma2
    if mode == "lsq":
        return sigma2_lsq(view).value
    if mode == "rice":
        return sigma2_rice(data.y).value
    raise ValueError(f"unknown sigma2 mode {mode!r}")


def population_m_star(config: ScenarioConfig) -> int:
    """Optimal single nested model of the data-generating process.

    Computed from the true coefficient decay with the idealized orthonormal
    design (the population Gram of an intercept plus iid standard normal
    regressors is the identity), so it is one fixed number per scenario and
    every replication of an MR method combines the same candidate set.
    """
    p = design_dim(config.n)
    beta = coefficients(config.case, config.alpha, p)
    sigma2 = noise_variance(config.case, config.alpha, config.n, config.snr)
    m, _ = best_ms(CoefficientProfile(beta, sigma2, config.n))
    return m


def _method_gamma(method_id: str, view, data, sigma2_hat: float, m_star: int | None = None):
    """Candidate set and cumulative weights for one registered method."""
    p, n = view.p, view.n
    if method_id in ("WR1", "WR2"):
        cset = candidates.all_nested(p)
        steps = 2 if method_id == "WR1" else 5
        return cset, solve_discrete(view, cset, sigma2_hat, steps)
    if method_id in ("MR1", "MR2"):
        if m_star is None:
            # fallback for data-only calls: the realized optimum of this
            # replication, from the true transformed coefficients
            if view.theta_true is None or data.sigma2 is None:
                raise ValueError(f"{method_id} needs the true mean and variance")
            m_star, _ = best_ms(CoefficientProfile(view.theta_true, data.sigma2, n))
        M = math.isqrt(m_star) if method_id == "MR1" else m_star // 2
        cset = candidates.successive(min(max(2, M), p), p)
        return cset, solve_nested(view, cset, sigma2_hat)
    if method_id == "M-ALL":
        cset = candidates.all_nested(p)
        return cset, solve_nested(view, cset, sigma2_hat)
    if method_id == "M-G1":
        cset = candidates.grouped_geometric(p, n=n)
        return cset, solve_nested(view, cset, sigma2_hat)
    if method_id == "M-G2":
        cset = candidates.grouped_equal(p, n=n)
        return cset, solve_nested(view, cset, sigma2_hat)
    if method_id in ("M-MS1", "M-MS2"):
        m_hat = min(max(1, cp_select(view, sigma2_hat)), p)
        if method_id == "M-MS1":
            kappa = math.log(n)
            cset = candidates.ms_centered(m_hat, kappa, kappa, p)
        else:
            cset = candidates.ms_window(m_hat, 5, p)
        return cset, solve_nested(view, cset, sigma2_hat)
    if method_id == "ORACLE":
        if view.theta_true is None:
            raise ValueError("ORACLE needs the true mean")
        cset = candidates.all_nested(p)
        A = view.theta_hat ** 2
        B = -2.0 * view.theta_hat * view.theta_true
        return cset, solve_monotone_blocks(A, B, pin_first=True)
    raise ValueError(f"unknown method {method_id!r}")


def _coord_loss(view, cset, gamma) -> float:
    # loss of the averaged fit measured inside the fitted span; exact up to
    # the span-orthogonal remainder of f, which is method-independent
    lo, hi = candidates.group_slices(cset)
    a = np.zeros(view.p)
    a[: hi[-1]] = np.repeat(gamma, hi - lo)
    v = a * view.theta_hat - view.theta_true
    return float(v @ v)


def _span_remainder(view) -> float:
    # ||f - P_p f||^2 / n, the part of the loss no candidate model can touch
    resid = view.f - math.sqrt(view.n) * (view.phi @ view.theta_true)
    return float(resid @ resid) / view.n


def run_method(
    method_id: str, data: RegressionData, sigma2_mode: str = "known", m_star: int | None = None
) -> float:
    """Loss n^-1 ||f - fhat||^2 of one registered method on one replication.

    m_star feeds the MR methods' candidate-count rule; the scenario engine
    passes the population value, bare calls fall back to the realized one.
    """
    view = orthogonalize(data)
    if view.theta_true is None:
        raise ValueError("loss needs the true mean")
    s2 = _sigma2_value(view, data, sigma2_mode)
    cset, gamma = _method_gamma(method_id, view, data, s2, m_star)
    return _coord_loss(view, cset, gamma) + _span_remainder(view)


def _replication_losses(task) -> list:
    config, rep_index = task
    data = gen_replication(config, rep_index)
    view = orthogonalize(data)
    s2 = _sigma2_value(view, data, config.sigma2_mode)
    m_star = population_m_star(config)
    r0 = _span_remainder(view)
    out = []
    for mid in config.methods:
        cset, gamma = _method_gamma(mid, view, data, s2, m_star)
        out.append(_coord_loss(view, cset, gamma) + r0)
    return out


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> np.ndarray:
    """Loss matrix (reps x methods) for one cell, replication order fixed."""
    tasks = [(config, r) for r in range(config.reps)]
    if jobs <= 1:
        rows = [_replication_losses(t) for t in tasks]
    else:
        # map() preserves task order, so aggregation below never depends on
        # scheduling; chunking only amortizes pickling
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_replication_losses, tasks, chunksize=8))
    return np.asarray(rows)


@dataclass
class RiskReport:
    """Tabular simulation output plus the provenance needed to rerun it."""

    rows: list
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row["case"],
                    repr(float(row["alpha"])),
                    row["n"],
                    row["method"],
                    repr(float(row["mean"])),
                    "" if row["se"] is None else repr(float(row["se"])),
                    row["R"],
                    row["seed"],
                ]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"schema": "mma-lab/risk-report/v1", "meta": self.meta, "rows": self.rows},
            indent=2,
            sort_keys=True,
        )


def _cell_rows(config: ScenarioConfig, losses: np.ndarray) -> list:
    if BASELINE not in config.methods:
        raise ValueError(f"cell must include the {BASELINE} baseline")
    base = losses[:, config.methods.index(BASELINE)]
    rows = []
    for i, mid in enumerate(config.methods):
        if mid == BASELINE:
            continue
        ratios = losses[:, i] / base
        mean = float(np.mean(ratios))
        se = float(np.std(ratios, ddof=1) / math.sqrt(config.reps))
        rows.append(
            {
                "case": config.case,
                "alpha": config.alpha,
                "n": config.n,
                "method": mid,
                "mean": mean,
                "se": se,
                "R": config.reps,
                "seed": config.master_seed,
                "mean_loss": float(np.mean(losses[:, i])),
            }
        )
    return rows


def table2(cells, jobs: int = 1) -> RiskReport:
    """Mean relative loss (and its standard error) per method and cell,
    each method's per-replication loss divided by the baseline's."""
    t0 = time.monotonic()
    rows = []
    for config in cells:
        rows.extend(_cell_rows(config, run_scenario(config, jobs)))
    meta = {
        "kind": "table2",
        "cells": [asdict(c) for c in cells],
        "wall_time_s": time.monotonic() - t0,
    }
    return RiskReport(rows=rows, meta=meta)


def risk_ratio_curve(base: ScenarioConfig, n_grid, jobs: int = 1) -> RiskReport:
    """Ratio of summed losses, baseline over per-replication oracle, per n.

    The ratio of sums (not the mean of ratios) is always >= 1 because the
    oracle minimizes each replication's loss over the same weight simplex.
    """
    t0 = time.monotonic()
    rows = []
    for n in n_grid:
        config = ScenarioConfig(
            case=base.case,
            alpha=base.alpha,
            n=int(n),
            reps=base.reps,
            master_seed=base.master_seed,
            methods=(BASELINE, ORACLE),
            snr=base.snr,
            sigma2_mode=base.sigma2_mode,
            redraw_design=base.redraw_design,
        )
        losses = run_scenario(config, jobs)
        num = math.fsum(losses[:, 0])
        den = math.fsum(losses[:, 1])
        rows.append(
            {
                "case": config.case,
                "alpha": config.alpha,
                "n": config.n,
                "method": "RATIO",
                "mean": num / den,
                "se": None,
                "R": config.reps,
                "seed": config.master_seed,
                "mean_loss": float(np.mean(losses[:, 0])),
            }
        )
    meta = {
        "kind": "risk_ratio",
        "base": asdict(base),
        "n_grid": [int(n) for n in n_grid],
        "wall_time_s": time.monotonic() - t0,
    }
    return RiskReport(rows=rows, meta=meta)


def cells_from_config(doc: dict) -> list:
    """Expand a config document into the list of simulation cells it names.

    Expected keys: cases (list of {case, alpha}), n (list), reps, seed,
    methods, and optional snr / sigma2_mode / redraw_design.
    """
    try:
        cases = doc["cases"]
        n_list = doc["n"]
        reps = int(doc["reps"])
        seed = int(doc["seed"])
    except KeyError as missing:
        raise ValueError(f"config missing key {missing.args[0]!r}") from None
    methods = tuple(doc.get("methods", METHOD_IDS[:5]))
    cells = []
    for case_doc in cases:
        for n in n_list:
            cells.append(
                ScenarioConfig(
                    case=case_doc["case"],
                    alpha=float(case_doc["alpha"]),
                    n=int(n),
                    reps=reps,
                    master_seed=seed,
                    methods=methods,
                    snr=float(doc.get("snr", 1.0)),
                    sigma2_mode=doc.get("sigma2_mode", "known"),
                    redraw_design=bool(doc.get("redraw_design", True)),
                )
            )
    return cells
