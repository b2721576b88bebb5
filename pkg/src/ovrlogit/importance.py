"""Coefficient-magnitude importance, sparsity summaries and rank agreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .dataset import _frozen
from .errors import ConfigError
from .ovr import OvrModel
from .solvers import ZERO_THRESHOLD, FittedBinaryModel, retained_features

AGGREGATE = "aggregate"


def rank_descending(values) -> np.ndarray:
    """Indices ordered by decreasing value; equal values keep ascending index order."""
    return np.argsort(-np.asarray(values, dtype=np.float64), kind="stable")


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    feature_names: tuple[str, ...]
    per_class: np.ndarray  # K x d, |w|
    signs: np.ndarray  # K x d in {-1, 0, 1}
    aggregate: np.ndarray
    class_rankings: np.ndarray  # K x d permutations
    aggregate_ranking: np.ndarray

    @property
    def class_count(self) -> int:
        return self.per_class.shape[0]

    @property
    def d(self) -> int:
        return self.per_class.shape[1]

    def ranking(self, which: Union[int, str]) -> np.ndarray:
        if which == AGGREGATE:
            return self.aggregate_ranking
        if isinstance(which, (int, np.integer)) and 0 <= which < self.class_count:
            return self.class_rankings[which]
        raise ConfigError(f"no ranking named {which!r}")


def importance_from_weights(weights, feature_names: Sequence[str]) -> ImportanceReport:
    W = np.asarray(weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != len(feature_names):
        raise ValueError(f"weight matrix shape {W.shape} does not match {len(feature_names)} names")
    mags = np.abs(W)
    aggregate = mags.sum(axis=0)
    return ImportanceReport(
        feature_names=tuple(feature_names),
        per_class=_frozen(mags),
        signs=_frozen(np.sign(W).astype(np.int64)),
        aggregate=_frozen(aggregate),
        class_rankings=_frozen(np.vstack([rank_descending(row) for row in mags])),
        aggregate_ranking=_frozen(rank_descending(aggregate)),
    )


def build_importance(m: OvrModel) -> ImportanceReport:
    return importance_from_weights(m.weight_matrix(), m.feature_names)


class RankedFeature(NamedTuple):
    name: str
    magnitude: float
    sign: Optional[int]  # None for aggregate rankings


def top_k(report: ImportanceReport, which: Union[int, str], k: int) -> list[RankedFeature]:
    """First ``k`` features of a class ranking or of the aggregate ranking."""
    if not 1 <= k <= report.d:
        raise ValueError(f"k must lie in 1..{report.d}, got {k}")
    order = report.ranking(which)[:k]
    if which == AGGREGATE:
        return [RankedFeature(report.feature_names[j], float(report.aggregate[j]), None) for j in order]
    return [
        RankedFeature(report.feature_names[j], float(report.per_class[which, j]), int(report.signs[which, j]))
        for j in order
    ]


@dataclass(frozen=True)
class SparsityReport:
    class_index: int
    retained_count: int
    zeroed_count: int
    retention_fraction: float
    retained_names: tuple[str, ...]  # by decreasing |w|
    top_feature: Optional[str]
    top_magnitude: float

    @property
    def sparsity(self) -> float:
        return 1.0 - self.retention_fraction


def sparsity_report(
    models: Sequence[FittedBinaryModel],
    feature_names: Sequence[str],
    threshold: float = ZERO_THRESHOLD,
) -> list[SparsityReport]:
    """Per-class retained/zeroed feature counts for L1-trained models."""
    reports = []
    for k, m in enumerate(models):
        if m.solver_tag != "l1":
            raise ValueError(f"class {k} model was trained by {m.solver_tag!r}, expected 'l1'")
        if m.d != len(feature_names):
            raise ValueError("feature_names length differs from model dimension")
        kept = retained_features(m, threshold)
        order = [j for j in rank_descending(np.abs(m.weights)) if j in kept]
        reports.append(
            SparsityReport(
                class_index=k,
                retained_count=len(kept),
                zeroed_count=m.d - len(kept),
                retention_fraction=len(kept) / m.d,
                retained_names=tuple(feature_names[j] for j in order),
                top_feature=feature_names[order[0]] if order else None,
                top_magnitude=float(abs(m.weights[order[0]])) if order else 0.0,
            )
        )
    return reports


def _rank_vector(ranking) -> np.ndarray:
    perm = np.asarray(ranking)
    d = perm.shape[0] if perm.ndim == 1 else -1
    if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(d)):
        raise ValueError("ranking must be a permutation of 0..d-1")
    ranks = np.empty(d, dtype=np.int64)
    ranks[perm] = np.arange(d)
    return ranks


def spearman_rho(ranking_a, ranking_b) -> float:
    """Spearman correlation between two strict rankings (no tie correction)."""
    if len(ranking_a) != len(ranking_b):
        raise ValueError("rankings differ in length")
    if len(ranking_a) < 2:
        raise ValueError("need at least two ranked items")
    ra = _rank_vector(ranking_a)
    rb = _rank_vector(ranking_b)
    d = ra.shape[0]
    diff = ra - rb
    return 1.0 - 6.0 * float(diff @ diff) / (d * (d * d - 1))


def consistency_matrix(rankings: Sequence) -> np.ndarray:
    m = len(rankings)
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = spearman_rho(rankings[i], rankings[j])
    return out


@dataclass(frozen=True)
class CostModel:
    """Per-assay cost and a two-anchor linear model of measurement time.

    Time runs linearly from ``anchor_minutes`` at ``anchor_features`` assays
    to ``minutes_full_panel`` for the full baseline panel.
    """

    cost_per_assay: float = 10.0
    minutes_full_panel: float = 45.0
    anchor_features: int = 5
    anchor_minutes: float = 20.0

    def __post_init__(self):
        if min(self.cost_per_assay, self.minutes_full_panel, self.anchor_features, self.anchor_minutes) <= 0:
            raise ConfigError("cost model parameters must be positive")

    def minutes_per_feature(self, baseline_d: int) -> float:
        if baseline_d == self.anchor_features:
            return 0.0
        return (self.minutes_full_panel - self.anchor_minutes) / (baseline_d - self.anchor_features)

    def minutes(self, count: int, baseline_d: int) -> float:
        return self.anchor_minutes + (count - self.anchor_features) * self.minutes_per_feature(baseline_d)


@dataclass(frozen=True)
class CostBenefit:
    selected_count: int
    baseline_d: int
    cost_full: float
    cost_selected: float
    saving: float
    complexity_reduction: float
    minutes_full: float
    minutes_selected: float

    @property
    def time_reduction(self) -> float:
        return 1.0 - self.minutes_selected / self.minutes_full


def cost_benefit(selected, cm: CostModel, baseline_d: int) -> CostBenefit:
    """Assay cost, saving and time estimate for measuring only ``selected``."""
    count = len(set(selected))
    if count == 0:
        raise ValueError("empty feature selection")
    if count > baseline_d:
        raise ValueError(f"{count} selected features exceed baseline of {baseline_d}")
    return CostBenefit(
        selected_count=count,
        baseline_d=baseline_d,
        cost_full=baseline_d * cm.cost_per_assay,
        cost_selected=count * cm.cost_per_assay,
        saving=(baseline_d - count) * cm.cost_per_assay,
        complexity_reduction=1.0 - count / baseline_d,
        minutes_full=cm.minutes_full_panel,
        minutes_selected=cm.minutes(count, baseline_d),
    )
