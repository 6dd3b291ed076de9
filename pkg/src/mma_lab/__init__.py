"""Mallows model averaging for linear regression.

The pieces: orthogonalize a design into a sequence model (`seqmodel`),
choose a family of candidate models (`candidates`), minimize the Mallows
criterion over simplex weights (`weights`), evaluate exact risks and
oracle weights for known coefficient profiles (`risk`), estimate the
noise variance (`variance`), and reproduce the Monte Carlo comparisons
(`sim`). The `mma-lab` script in `cli` fronts all of it.
"""

from .candidates import (
    CandidateSet,
    all_nested,
    all_subsets,
    grouped_equal,
    grouped_geometric,
    ms_centered,
    ms_window,
    successive,
)
from .risk import (
    CoefficientProfile,
    best_ms,
    hyperrect_minimax_risk,
    ideal_subset_ma_risk,
    ideal_subset_ms_risk,
    ma_risk,
    ms_risk,
    oracle_discrete,
    oracle_grouped,
    oracle_nested,
    pinsker_oracle,
    psi,
)
from .seqmodel import (
    RankDeficientError,
    RegressionData,
    SequenceView,
    loss,
    nested_fit,
    orthogonalize,
)
from .sim import RiskReport, ScenarioConfig, risk_ratio_curve, run_scenario, table2
from .variance import VarianceEstimate, cp_select, sigma2_lsq, sigma2_rice
from .weights import (
    gamma_from_w,
    mma_criterion,
    simplex_qp,
    solve_discrete,
    solve_nested,
    solve_qp,
    w_from_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "CoefficientProfile",
    "RankDeficientError",
    "RegressionData",
    "RiskReport",
    "ScenarioConfig",
    "SequenceView",
    "VarianceEstimate",
    "all_nested",
    "all_subsets",
    "best_ms",
    "cp_select",
    "gamma_from_w",
    "grouped_equal",
    "grouped_geometric",
    "hyperrect_minimax_risk",
    "ideal_subset_ma_risk",
    "ideal_subset_ms_risk",
    "loss",
    "ma_risk",
    "mma_criterion",
    "ms_centered",
    "ms_risk",
    "ms_window",
    "nested_fit",
    "oracle_discrete",
    "oracle_grouped",
    "oracle_nested",
    "orthogonalize",
    "pinsker_oracle",
    "psi",
    "risk_ratio_curve",
    "run_scenario",
    "sigma2_lsq",
    "sigma2_rice",
    "simplex_qp",
    "solve_discrete",
    "solve_nested",
    "solve_qp",
    "successive",
    "table2",
    "w_from_gamma",
]
