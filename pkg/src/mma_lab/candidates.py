"""Candidate-model sets: nested prefixes, grouped nested constructions,
selection-centered windows, and full subset enumeration at test scale.

Nested sets are described by their strictly increasing model sizes
k_1 < ... < k_M; model m uses the first k_m (orthogonalized) regressors.
Subset sets enumerate arbitrary index sets and exist for brute-force
oracles, not for production fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CandidateSet",
    "all_nested",
    "successive",
    "grouped_geometric",
    "grouped_equal",
    "ms_centered",
    "ms_window",
    "all_subsets",
    "group_slices",
]

MAX_SUBSET_P = 12


@dataclass(frozen=True)
class CandidateSet:
    """An ordered collection of candidate models inside an ambient dimension p.

    kind "nested": sizes holds k_1 < ... < k_M <= p.
    kind "subsets": index_sets holds distinct subsets of {1..p} (1-based).
    degenerate flags constructions that collapsed to the single full model
    because their group size already exceeded p.
    """

    kind: str
    p: int
    sizes: tuple = ()
    index_sets: tuple = ()
    degenerate: bool = False

    def __post_init__(self):
        if self.kind not in ("nested", "subsets"):
            raise ValueError(f"unknown candidate-set kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("ambient dimension must be >= 1")
        if self.kind == "nested":
            ks = tuple(int(k) for k in self.sizes)
            if len(ks) == 0:
                raise ValueError("nested set needs at least one model")
            if ks[0] < 1 or ks[-1] > self.p:
                raise ValueError("model sizes must lie in 1..p")
            if any(b <= a for a, b in zip(ks, ks[1:])):
                raise ValueError("model sizes must be strictly increasing")
            object.__setattr__(self, "sizes", ks)
        else:
            sets = tuple(frozenset(int(i) for i in s) for s in self.index_sets)
            if len(sets) == 0:
                raise ValueError("subset collection needs at least one model")
            if len(set(sets)) != len(sets):
                raise ValueError("duplicate subsets")
            for s in sets:
                if any(i < 1 or i > self.p for i in s):
                    raise ValueError("subset indices must lie in 1..p")
            object.__setattr__(self, "index_sets", sets)

    def __len__(self) -> int:
        return len(self.sizes) if self.kind == "nested" else len(self.index_sets)

    @property
    def M(self) -> int:
        return len(self)

    def model_sizes(self) -> np.ndarray:
        """Number of regressors per model, in model order."""
        if self.kind == "nested":
            return np.asarray(self.sizes, dtype=int)
        return np.asarray([len(s) for s in self.index_sets], dtype=int)

    def to_json_dict(self) -> dict:
        if self.kind == "nested":
            return {"kind": "nested", "p": self.p, "sizes": list(self.sizes)}
        return {
            "kind": "subsets",
            "p": self.p,
            "index_sets": [sorted(s) for s in self.index_sets],
        }


def group_slices(cset: CandidateSet):
    """(lo, hi) 0-based coordinate bounds per nested group: group j covers
    coordinates lo[j]..hi[j]-1, i.e. the increment from model j-1 to model j."""
    if cset.kind != "nested":
        raise ValueError("group structure requires a nested set")
    hi = np.asarray(cset.sizes, dtype=int)
    lo = np.concatenate(([0], hi[:-1]))
    return lo, hi


def all_nested(p: int) -> CandidateSet:
    """Every nested model 1..p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return CandidateSet(kind="nested", p=p, sizes=tuple(range(1, p + 1)))


def successive(M: int, p: int) -> CandidateSet:
    """The first M nested models 1..M inside ambient dimension p."""
    if not 1 <= M <= p:
        raise ValueError(f"need 1 <= M <= p, got M={M}, p={p}")
    return CandidateSet(kind="nested", p=p, sizes=tuple(range(1, M + 1)))


def _capped_tail(sizes: list, p: int) -> tuple:
    # force the last size to be exactly p, keeping strict increase
    sizes = [k for k in sizes if k < p]
    sizes.append(p)
    return tuple(sizes)


def grouped_geometric(p: int, n: int | None = None, t1: float = 1.0, t2: float = 1.0) -> CandidateSet:
    """Nested groups whose widths grow weakly geometrically.

    With rate zeta = t1/(log n)^t2: k_1 = ceil(1/zeta), then
    k_m = k_{m-1} + floor(k_1 (1+zeta)^{m-1}) while below p, and the last
    size is pinned to p. n defaults to p when the caller has no separate
    sample size.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be positive")
    n = p if n is None else int(n)
    if n < 2:
        raise ValueError("n must be >= 2 for a log-based group size")
    zeta = t1 / math.log(n) ** t2
    k1 = math.ceil(1.0 / zeta)
    if k1 >= p:
        return CandidateSet(kind="nested", p=p, sizes=(p,), degenerate=True)
    sizes = [k1]
    m = 2
    while True:
        step = math.floor(k1 * (1.0 + zeta) ** (m - 1))
        nxt = sizes[-1] + step
        if nxt >= p:
            break
        sizes.append(nxt)
        m += 1
    return CandidateSet(kind="nested", p=p, sizes=_capped_tail(sizes, p))


def grouped_equal(p: int, n: int | None = None, t: float = 1.0) -> CandidateSet:
    """Nested groups of equal width k_1 = ceil((log n)^t), last size pinned to p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if t <= 0:
        raise ValueError("t must be positive")
    n = p if n is None else int(n)
    if n < 2:
        raise ValueError("n must be >= 2 for a log-based group size")
    k1 = math.ceil(math.log(n) ** t)
    if k1 >= p:
        return CandidateSet(kind="nested", p=p, sizes=(p,), degenerate=True)
    sizes = list(range(k1, p, k1))
    return CandidateSet(kind="nested", p=p, sizes=_capped_tail(sizes, p))


def ms_centered(m_hat: int, kappa_l: float, kappa_u: float, p: int) -> CandidateSet:
    """All nested sizes in the multiplicative window around a selected size:
    max(1, floor(m_hat/kappa_l)) .. min(p, floor(kappa_u * m_hat))."""
    if not 1 <= m_hat <= p:
        raise ValueError(f"need 1 <= m_hat <= p, got m_hat={m_hat}, p={p}")
    if kappa_l <= 1 or kappa_u <= 1:
        raise ValueError("window factors must exceed 1")
    lo = max(1, math.floor(m_hat / kappa_l))
    hi = min(p, math.floor(kappa_u * m_hat))
    return CandidateSet(kind="nested", p=p, sizes=tuple(range(lo, hi + 1)))


def ms_window(m_hat: int, halfwidth: int, p: int) -> CandidateSet:
    """All nested sizes in the additive window max(1, m_hat-h) .. min(p, m_hat+h)."""
    if not 1 <= m_hat <= p:
        raise ValueError(f"need 1 <= m_hat <= p, got m_hat={m_hat}, p={p}")
    if halfwidth < 0:
        raise ValueError("halfwidth must be >= 0")
    lo = max(1, m_hat - halfwidth)
    hi = min(p, m_hat + halfwidth)
    return CandidateSet(kind="nested", p=p, sizes=tuple(range(lo, hi + 1)))


def all_subsets(p: int) -> CandidateSet:
    """All 2^p subsets of {1..p}, the empty model included.

    Exponential by definition, hence capped at p <= 12; this constructor
    exists so brute-force oracles can certify the ideal-risk formulas.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if p > MAX_SUBSET_P:
        raise ValueError(f"subset enumeration capped at p <= {MAX_SUBSET_P}")
    sets = tuple(
        frozenset(j + 1 for j in range(p) if mask >> j & 1)
        for mask in range(2 ** p)
    )
    return CandidateSet(kind="subsets", p=p, index_sets=sets)
