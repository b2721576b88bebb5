"""Serialisation of pipeline results.

All numbers are written with six decimals so reruns are byte-identical.
Timings are confined to ``timings.txt``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from .dataset import write_split_indices
from .importance import AGGREGATE, top_k
from .metrics import wilson_interval
from .preprocess import write_scaler_params

if TYPE_CHECKING:
    from .pipeline import PipelineResult, SolverResult

SOLVER_PART = {"gd": "part_2", "reference": "part_3", "l1": "part_4"}


def fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "undefined"
    return f"{x:.6f}"


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, float) or v is None else str(v) for v in row) + "\n")


def write_loss_trace(model, path: Path) -> None:
    _write_rows(path, ("iteration", "loss"), ((it, loss) for it, loss in model.loss_trace))


def write_model(model, feature_names: Sequence[str], path: Path) -> None:
    rows = [(name, float(w)) for name, w in zip(feature_names, model.weights)]
    rows.append(("bias", float(model.bias)))
    _write_rows(path, ("feature_name", "weight"), rows)


def write_predictions(res: "SolverResult", row_index: np.ndarray, path: Path) -> None:
    K = res.test_probs.shape[1]
    header = ["row_index", "true_class", "predicted_class"] + [f"prob_{k}" for k in range(K)]
    rows = (
        [int(i), int(t), int(p)] + [float(v) for v in probs]
        for i, t, p, probs in zip(row_index, res.test_labels, res.test_pred, res.test_probs)
    )
    _write_rows(path, header, rows)


def write_confusion(res: "SolverResult", k: int, path: Path) -> None:
    rows = []
    for split, c in (("train", res.train_confusion[k]), ("test", res.test_confusion[k])):
        rows.append((split, c.tp, c.tn, c.fp, c.fn))
    _write_rows(path, ("split", "tp", "tn", "fp", "fn"), rows)


def write_metrics_summary(results: dict, path: Path) -> None:
    rows = []
    for solver, res in results.items():
        for k, b in enumerate(res.test_metrics):
            rows.append((solver, k, b.accuracy, b.precision, b.recall, b.f1))
        m = res.test_macro
        rows.append((solver, "mean", m.accuracy, m.precision, m.recall, m.f1))
    _write_rows(path, ("solver", "class", "accuracy", "precision", "recall", "f1"), rows)


def write_importance(results: dict, per_class_path: Path, aggregate_path: Path) -> None:
    per_class, aggregate = [], []
    for solver, res in results.items():
        rep = res.importance
        W = res.model.weight_matrix()
        for k in range(rep.class_count):
            for rank, j in enumerate(rep.class_rankings[k], start=1):
                per_class.append((solver, k, rank, rep.feature_names[j], float(W[k, j]), float(rep.per_class[k, j])))
        for rank, j in enumerate(rep.aggregate_ranking, start=1):
            aggregate.append((solver, rank, rep.feature_names[j], float(rep.aggregate[j])))
    _write_rows(per_class_path, ("solver", "class", "rank", "feature", "weight", "abs_weight"), per_class)
    _write_rows(aggregate_path, ("solver", "rank", "feature", "aggregate"), aggregate)


def write_sparsity(reports_, path: Path) -> None:
    rows = [
        (
            r.class_index,
            r.retained_count,
            r.zeroed_count,
            float(r.retention_fraction),
            float(r.sparsity),
            r.top_feature or "",
            float(r.top_magnitude),
            ";".join(r.retained_names),
        )
        for r in reports_
    ]
    header = ("class", "retained", "zeroed", "retention", "sparsity", "top_feature", "top_abs_weight", "retained_features")
    _write_rows(path, header, rows)


def write_sweep(rows_, path: Path) -> None:
    K = len(rows_[0].retained) if rows_ else 0
    header = ["C", "mean_retained", "mean_test_accuracy"] + [f"retained_class{k}" for k in range(K)]
    _write_rows(path, header, ([float(r.C), float(r.mean_retained), float(r.mean_test_accuracy), *r.retained] for r in rows_))


def write_consistency(labels: Sequence[str], matrix: np.ndarray, path: Path) -> None:
    rows = ([label] + [float(v) for v in row] for label, row in zip(labels, matrix))
    _write_rows(path, ["config", *labels], rows)


def cost_benefit_text(result: "PipelineResult") -> str:
    c = result.costs
    cm = result.config.cost_model
    lines = [
        f"selected features ({c.selected_count} of {c.baseline_d}, by aggregate importance of the {result.importance_solver} model):",
        *(f"  {name}" for name in result.subset),
        f"cost per assay: {fmt(cm.cost_per_assay)}",
        f"full panel cost per sample: {fmt(c.cost_full)}",
        f"subset cost per sample: {fmt(c.cost_selected)}",
        f"saving per sample: {fmt(c.saving)}",
        f"complexity reduction: {fmt(c.complexity_reduction)}",
        f"measurement minutes: {fmt(c.minutes_full)} -> {fmt(c.minutes_selected)}",
        f"time reduction: {fmt(c.time_reduction)}",
        f"measured mean test accuracy retrained on subset: {fmt(result.subset_accuracy)}",
    ]
    return "\n".join(lines) + "\n"


def _pct(x: float) -> str:
    return f"{100.0 * x:6.2f}"


def summary_text(result: "PipelineResult") -> str:
    cfg = result.config
    prep = result.prepared
    ds = prep.dataset
    out: list[str] = []
    add = out.append

    add("Dataset")
    add(f"  samples={ds.n} features={ds.d} classes={ds.class_count} counts={list(map(int, ds.class_counts()))}")
    add(f"  split seed={cfg.seed} test_fraction={cfg.test_fraction}: train={prep.train.n} test={prep.test.n}")
    add(f"  train counts={list(map(int, prep.train.class_counts()))} test counts={list(map(int, prep.test.class_counts()))}")
    mu = np.abs(prep.train.features.mean(axis=0)).max()
    sd = np.abs(prep.train.features.std(axis=0) - 1.0).max()
    add(f"  standardized train: max|mean|={mu:.3e} max|std-1|={sd:.3e}")
    add("")

    add("Per-class binary performance (accuracy %, threshold 0.5)")
    add(f"  {'solver':<10} {'class':>5} {'train':>7} {'test':>7} {'final_loss':>10}  test 95% Wilson")
    for solver, res in result.solvers.items():
        for k in range(ds.class_count):
            trace = res.model.models[k].loss_trace
            loss = fmt(trace[-1][1]) if trace else "-"
            c = res.test_confusion[k]
            lo, hi = wilson_interval(c.tp + c.tn, c.total)
            add(
                f"  {solver:<10} {k:>5} {_pct(res.train_accuracy[k]):>7} {_pct(res.test_accuracy[k]):>7}"
                f" {loss:>10}  [{_pct(lo)}, {_pct(hi)}]"
            )
        add(f"  {solver:<10} {'mean':>5} {_pct(res.mean_train_accuracy):>7} {_pct(res.mean_test_accuracy):>7}")
        add(f"  {solver:<10} multiclass argmax test: {res.multiclass_correct}/{len(res.test_labels)}")
    add("")

    add("Top-3 features per class (|weight|, sign)")
    for solver, res in result.solvers.items():
        for k in range(ds.class_count):
            items = ", ".join(f"{f.name} ({f.magnitude:.2f}, {'+' if f.sign > 0 else '-' if f.sign < 0 else '0'})" for f in top_k(res.importance, k, min(3, ds.d)))
            add(f"  {solver:<10} class {k}: {items}")
    add("")

    if result.sparsity is not None:
        add(f"L1 sparsity (C={cfg.l1.C:g})")
        for r in result.sparsity:
            add(
                f"  class {r.class_index}: retained {r.retained_count}/{r.retained_count + r.zeroed_count}"
                f" sparsity {_pct(r.sparsity)}% top {r.top_feature} ({r.top_magnitude:.2f})"
            )
            add(f"    retained: {', '.join(r.retained_names)}")
        mean_sparsity = float(np.mean([r.sparsity for r in result.sparsity]))
        add(f"  mean sparsity {_pct(mean_sparsity)}%")
        add("")

    if result.sweep:
        add("C sweep (L1)")
        for row in result.sweep:
            add(f"  C={row.C:<8g} mean retained {row.mean_retained:5.2f}  mean test accuracy {_pct(row.mean_test_accuracy)}%")
        add("")

    add(f"Aggregate importance ({result.importance_solver} model)")
    rep = result.solvers[result.importance_solver].importance
    for rank, f in enumerate(top_k(rep, AGGREGATE, ds.d), start=1):
        mark = " *" if f.name in result.subset else ""
        add(f"  {rank:>2}. {f.name:<30} {f.magnitude:8.2f}{mark}")
    add("")

    add("Rank consistency (Spearman rho between aggregate rankings)")
    m = result.consistency
    if m.shape[0] >= 2:
        off = m[~np.eye(m.shape[0], dtype=bool)]
        add(f"  configurations: {', '.join(result.consistency_labels)}")
        add(f"  min rho {off.min():.3f}  max rho {off.max():.3f}")
    add("")

    add("Cost-benefit")
    add("".join("  " + line + "\n" for line in cost_benefit_text(result).splitlines()).rstrip("\n"))
    return "\n".join(out) + "\n"


def write_all(result: "PipelineResult", root: Path) -> None:
    root = Path(root)
    parts = {name: root / name for name in ("part_1", "part_2", "part_3", "part_4", "part_5")}
    for p in parts.values():
        p.mkdir(parents=True, exist_ok=True)
    prep = result.prepared
    names = prep.dataset.feature_names

    write_split_indices(prep.split, parts["part_1"])
    write_scaler_params(prep.standardizer, parts["part_1"] / "scaler_params.csv")

    for solver, res in result.solvers.items():
        part = parts[SOLVER_PART[solver]]
        for k, m in enumerate(res.model.models):
            write_model(m, names, part / f"model_{solver}_class{k}.csv")
            write_confusion(res, k, part / f"confusion_{solver}_class{k}.csv")
            if solver == "gd":
                write_loss_trace(m, part / f"loss_trace_class{k}.csv")
        write_predictions(res, prep.split.test_indices, part / f"predictions_{solver}.csv")

    write_metrics_summary(result.solvers, parts["part_3"] / "metrics_summary.csv")
    if result.sparsity is not None:
        write_sparsity(result.sparsity, parts["part_4"] / "sparsity_report.csv")
    if result.sweep:
        write_sweep(result.sweep, parts["part_4"] / "c_sweep.csv")

    write_importance(
        result.solvers,
        parts["part_5"] / "importance_per_class.csv",
        parts["part_5"] / "importance_aggregate.csv",
    )
    write_consistency(result.consistency_labels, result.consistency, parts["part_5"] / "consistency_matrix.csv")
    (parts["part_5"] / "cost_benefit.txt").write_text(cost_benefit_text(result), encoding="utf-8")

    (root / "summary.txt").write_text(summary_text(result), encoding="utf-8")
    timing_lines = "".join(f"{stage}\t{seconds:.3f}s\n" for stage, seconds in result.timings.items())
    (root / "timings.txt").write_text(timing_lines, encoding="utf-8")
