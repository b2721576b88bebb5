"""Binary confusion matrices, threshold metrics and Wilson intervals.

Ratios whose denominator is zero are reported as ``None`` rather than 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class ConfusionMatrix2:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsBundle:
    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]

    def undefined(self) -> list[str]:
        return [f.name for f in fields(self) if getattr(self, f.name) is None]


def confusion(true, pred) -> ConfusionMatrix2:
    t = np.asarray(true).astype(np.int64)
    p = np.asarray(pred).astype(np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise DimensionMismatchError(f"label vectors differ: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("cannot tabulate an empty prediction set")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("binary labels must be 0 or 1")
    return ConfusionMatrix2(
        tp=int(np.sum((t == 1) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fp=int(np.sum((t == 0) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def metrics_from_confusion(c: ConfusionMatrix2) -> MetricsBundle:
    if c.total == 0:
        raise ValueError("empty confusion matrix")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = None
    if precision is not None and recall is not None:
        f1 = _ratio(2 * precision * recall, precision + recall)
    return MetricsBundle((c.tp + c.tn) / c.total, precision, recall, f1)


def macro_average(bundles: Sequence[MetricsBundle]) -> MetricsBundle:
    """Unweighted per-metric mean; undefined entries are skipped with a warning."""
    if not bundles:
        raise ValueError("macro average of an empty list")
    out = {}
    for f in fields(MetricsBundle):
        values = [getattr(b, f.name) for b in bundles]
        defined = [v for v in values if v is not None]
        skipped = len(values) - len(defined)
        if skipped:
            warnings.warn(
                f"macro {f.name}: {skipped} of {len(values)} values undefined and excluded",
                RuntimeWarning,
                stacklevel=2,
            )
        out[f.name] = math.fsum(defined) / len(defined) if defined else None
    return MetricsBundle(**out)


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF (Wichura's AS241 via :mod:`statistics`)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return NormalDist().inv_cdf(p)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials > 0, got {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = normal_quantile(0.5 + confidence / 2.0)
    phat = successes / trials
    z2n = z * z / trials
    center = (phat + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    # the endpoints cancel exactly at k = 0 and k = n; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi
