"""End-to-end experiment: load, split, standardize, train, evaluate, report."""

from __future__ import annotations

import logging
import os
import shutil
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import reports
from .dataset import DEFAULT_LABEL_COLUMN, LabeledDataset, SplitPair, default_wine_path, load_csv, stratified_split
from .errors import ConfigError, OvrLogitError
from .importance import (
    AGGREGATE,
    CostBenefit,
    CostModel,
    ImportanceReport,
    SparsityReport,
    build_importance,
    consistency_matrix,
    cost_benefit,
    sparsity_report,
)
from .metrics import ConfusionMatrix2, MetricsBundle, confusion, macro_average, metrics_from_confusion
from .ovr import OvrModel, predict, predict_proba, train_ovr
from .preprocess import Standardizer, fit_standardizer, transform
from .solvers import SOLVER_TAGS, GdConfig, L1Config, ReferenceConfig, retained_features

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConsistencyConfig:
    """One configuration in the rank-consistency study."""

    solver: str
    seed: int
    C: Optional[float] = None

    def __post_init__(self):
        if self.solver not in SOLVER_TAGS:
            raise ConfigError(f"unknown solver {self.solver!r} in consistency configuration")
        if self.solver == "l1" and self.C is None:
            raise ConfigError("l1 consistency configurations need a C value")

    @property
    def label(self) -> str:
        if self.solver == "l1":
            return f"l1_seed{self.seed}_C{self.C:g}"
        return f"{self.solver}_seed{self.seed}"

    @classmethod
    def parse(cls, text: str) -> "ConsistencyConfig":
        """Parse ``solver:seed`` or ``l1:seed:C``."""
        parts = text.strip().split(":")
        try:
            if len(parts) == 2:
                return cls(parts[0], int(parts[1]))
            if len(parts) == 3:
                return cls(parts[0], int(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ConfigError(f"bad consistency configuration {text!r}: {exc}") from None
        raise ConfigError(f"bad consistency configuration {text!r}")


DEFAULT_CONSISTENCY = tuple(
    ConsistencyConfig.parse(s)
    for s in ("gd:1", "gd:2", "gd:3", "gd:15", "gd:42", "gd:100", "l1:15:0.1", "l1:15:0.5", "l1:15:1.0")
)


@dataclass(frozen=True)
class RunConfig:
    data_path: Path = field(default_factory=default_wine_path)
    label_column: str = DEFAULT_LABEL_COLUMN
    seed: int = 15
    test_fraction: float = 0.2
    gd: GdConfig = GdConfig()
    reference: ReferenceConfig = ReferenceConfig()
    l1: L1Config = L1Config()
    solvers: tuple[str, ...] = SOLVER_TAGS
    output_dir: Path = Path("results")
    c_grid: tuple[float, ...] = (0.01, 0.05, 0.1, 0.5, 1.0)
    consistency: tuple[ConsistencyConfig, ...] = DEFAULT_CONSISTENCY
    subset_size: int = 5
    cost_model: CostModel = CostModel()

    def validate(self) -> None:
        if not self.solvers:
            raise ConfigError("no solver selected")
        unknown = [s for s in self.solvers if s not in SOLVER_TAGS]
        if unknown:
            raise ConfigError(f"unknown solver(s): {', '.join(unknown)}")
        if len(set(self.solvers)) != len(self.solvers):
            raise ConfigError("duplicate solver in selection")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if any(not c > 0 for c in self.c_grid):
            raise ConfigError("C grid values must be positive")
        if self.subset_size < 1:
            raise ConfigError("subset_size must be at least 1")
        if not -(2**63) <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    def solver_config(self, solver: str, C: Optional[float] = None):
        if solver == "gd":
            return self.gd
        if solver == "reference":
            return self.reference
        if C is None:
            return self.l1
        return L1Config(C, self.l1.max_iterations, self.l1.tolerance, self.l1.max_inner_sweeps)

    @property
    def ordered_solvers(self) -> tuple[str, ...]:
        return tuple(s for s in SOLVER_TAGS if s in self.solvers)


class PipelineError(OvrLogitError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True, eq=False)
class Prepared:
    dataset: LabeledDataset
    split: SplitPair
    standardizer: Standardizer
    train: LabeledDataset  # standardized
    test: LabeledDataset  # standardized


@dataclass(frozen=True, eq=False)
class SolverResult:
    solver: str
    model: OvrModel
    train_confusion: tuple[ConfusionMatrix2, ...]
    test_confusion: tuple[ConfusionMatrix2, ...]
    test_metrics: tuple[MetricsBundle, ...]
    test_macro: MetricsBundle
    train_accuracy: tuple[float, ...]
    test_labels: np.ndarray
    test_probs: np.ndarray  # n_test x K
    test_pred: np.ndarray  # argmax predictions
    importance: ImportanceReport
    seconds: float

    @property
    def test_accuracy(self) -> tuple[float, ...]:
        return tuple(b.accuracy for b in self.test_metrics)

    @property
    def mean_test_accuracy(self) -> float:
        return float(self.test_macro.accuracy)

    @property
    def mean_train_accuracy(self) -> float:
        return float(np.mean(self.train_accuracy))

    @property
    def multiclass_correct(self) -> int:
        return int(np.sum(self.test_pred == self.test_labels))


@dataclass(frozen=True)
class SweepRow:
    C: float
    mean_retained: float
    mean_test_accuracy: float
    retained: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PipelineResult:
    config: RunConfig
    prepared: Prepared
    solvers: dict
    sparsity: Optional[list[SparsityReport]]
    sweep: list[SweepRow]
    consistency_labels: tuple[str, ...]
    consistency: np.ndarray
    importance_solver: str
    subset: tuple[str, ...]
    subset_accuracy: float
    costs: CostBenefit
    timings: dict


def prepare(cfg: RunConfig) -> Prepared:
    ds = load_csv(cfg.data_path, cfg.label_column)
    return prepare_split(ds, cfg.test_fraction, cfg.seed)


def prepare_split(ds: LabeledDataset, test_fraction: float, seed: int) -> Prepared:
    split = stratified_split(ds, test_fraction, seed)
    scaler = fit_standardizer(split.train)
    return Prepared(ds, split, scaler, transform(scaler, split.train), transform(scaler, split.test))


def evaluate(solver: str, model: OvrModel, prep: Prepared, seconds: float = 0.0) -> SolverResult:
    """Per-class binary metrics (threshold 0.5) and argmax predictions."""
    train_cm, test_cm = [], []
    for k, bm in enumerate(model.models):
        train_cm.append(confusion(prep.train.labels == k, bm.predict(prep.train.features)))
        test_cm.append(confusion(prep.test.labels == k, bm.predict(prep.test.features)))
    test_metrics = tuple(metrics_from_confusion(c) for c in test_cm)
    raw_test = prep.split.test.features
    return SolverResult(
        solver=solver,
        model=model,
        train_confusion=tuple(train_cm),
        test_confusion=tuple(test_cm),
        test_metrics=test_metrics,
        test_macro=_quiet_macro(test_metrics),
        train_accuracy=tuple((c.tp + c.tn) / c.total for c in train_cm),
        test_labels=prep.test.labels,
        test_probs=predict_proba(model, raw_test),
        test_pred=predict(model, raw_test),
        importance=build_importance(model),
        seconds=seconds,
    )


def _quiet_macro(bundles) -> MetricsBundle:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return macro_average(bundles)


def fit_and_evaluate(cfg: RunConfig, prep: Prepared, solver: str, C: Optional[float] = None) -> SolverResult:
    start = time.perf_counter()
    model = train_ovr(prep.train, solver, cfg.solver_config(solver, C), prep.standardizer)
    return evaluate(solver, model, prep, time.perf_counter() - start)


def sweep_c(cfg: RunConfig, prep: Optional[Prepared] = None) -> list[SweepRow]:
    """Mean retained-feature count and mean per-class test accuracy for each C."""
    if not cfg.c_grid:
        raise ConfigError("C grid is empty")
    prep = prep or prepare(cfg)
    rows = []
    for C in sorted(set(cfg.c_grid)):
        try:
            res = fit_and_evaluate(cfg, prep, "l1", C)
        except OvrLogitError as exc:
            exc.args = (f"C={C:g}: {exc.args[0]}",) + exc.args[1:]
            exc.C = C
            raise
        counts = tuple(len(retained_features(m)) for m in res.model.models)
        rows.append(SweepRow(C, float(np.mean(counts)), res.mean_test_accuracy, counts))
    return rows


def aggregate_ranking(cfg: RunConfig, ds: LabeledDataset, cc: ConsistencyConfig) -> np.ndarray:
    prep = prepare_split(ds, cfg.test_fraction, cc.seed)
    model = train_ovr(prep.train, cc.solver, cfg.solver_config(cc.solver, cc.C), prep.standardizer)
    return build_importance(model).aggregate_ranking


def run_analysis(cfg: RunConfig) -> PipelineResult:
    """Run every stage in memory; each failure is re-raised as a stage-tagged ``PipelineError``."""
    cfg.validate()
    timings: dict[str, float] = {}
    stage = "load"

    def mark(name, start):
        timings[name] = time.perf_counter() - start

    try:
        t0 = time.perf_counter()
        ds = load_csv(cfg.data_path, cfg.label_column)
        mark("load", t0)

        stage = "split"
        t0 = time.perf_counter()
        prep = prepare_split(ds, cfg.test_fraction, cfg.seed)
        mark("split+standardize", t0)

        results = {}
        for solver in cfg.ordered_solvers:
            stage = f"train:{solver}"
            results[solver] = fit_and_evaluate(cfg, prep, solver)
            timings[f"train:{solver}"] = results[solver].seconds

        stage = "sparsity"
        sparsity = None
        if "l1" in results:
            sparsity = sparsity_report(results["l1"].model.models, ds.feature_names)

        stage = "sweep"
        t0 = time.perf_counter()
        sweep = sweep_c(cfg, prep) if cfg.c_grid else []
        mark("sweep", t0)

        stage = "consistency"
        t0 = time.perf_counter()
        rankings = [aggregate_ranking(cfg, ds, cc) for cc in cfg.consistency]
        matrix = consistency_matrix(rankings) if len(rankings) >= 2 else np.eye(len(rankings))
        mark("consistency", t0)

        stage = "cost"
        t0 = time.perf_counter()
        primary = next(s for s in ("reference", "gd", "l1") if s in results)
        report = results[primary].importance
        k = min(cfg.subset_size, ds.d)
        cols = sorted(int(j) for j in report.ranking(AGGREGATE)[:k])
        subset = tuple(ds.feature_names[j] for j in report.ranking(AGGREGATE)[:k])
        sub_prep = prepare_split(ds.select_features(cols), cfg.test_fraction, cfg.seed)
        subset_acc = fit_and_evaluate(cfg, sub_prep, primary).mean_test_accuracy
        costs = cost_benefit(subset, cfg.cost_model, ds.d)
        mark("cost", t0)
    except OvrLogitError as exc:
        raise PipelineError(stage, exc) from exc
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        raise PipelineError(stage, exc) from exc

    return PipelineResult(
        config=cfg,
        prepared=prep,
        solvers=results,
        sparsity=sparsity,
        sweep=sweep,
        consistency_labels=tuple(cc.label for cc in cfg.consistency),
        consistency=matrix,
        importance_solver=primary,
        subset=subset,
        subset_accuracy=subset_acc,
        costs=costs,
        timings=timings,
    )


def _check_output_dir(out: Path) -> None:
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"output path {out} exists and is not a directory")
        if any(out.iterdir()) and not (out / "summary.txt").is_file():
            raise ConfigError(f"refusing to replace non-empty directory {out} that holds no previous run")


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Run the experiment and write the full artifact set to ``cfg.output_dir``.

    Files are written to a staging directory next to the destination and
    moved into place only after every stage succeeded, so a failed run leaves
    no partial output behind.
    """
    out = Path(cfg.output_dir)
    try:
        cfg.validate()
        _check_output_dir(out)
    except ConfigError as exc:
        raise PipelineError("config", exc) from exc

    result = run_analysis(cfg)

    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.staging-", dir=out.parent))
    try:
        reports.write_all(result, staging)
        if out.exists():
            shutil.rmtree(out)
        os.replace(staging, out)
    except BaseException as exc:
        shutil.rmtree(staging, ignore_errors=True)
        if isinstance(exc, OSError):
            raise PipelineError("write", exc) from exc
        raise
    log.info("wrote results to %s", out)
    return result
