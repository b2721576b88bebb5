import dataclasses
import filecmp

import numpy as np
import pytest

from ovrlogit import cli, reports
from ovrlogit.errors import ConfigError
from ovrlogit.pipeline import (
    ConsistencyConfig,
    PipelineError,
    RunConfig,
    run_pipeline,
    sweep_c,
)
from ovrlogit.solvers import GdConfig

FAST = dict(
    gd=GdConfig(iterations=2000),
    c_grid=(0.1, 1.0),
    consistency=(ConsistencyConfig("gd", 1), ConsistencyConfig("gd", 2)),
)

EXPECTED_FILES = {
    "summary.txt",
    "timings.txt",
    "part_1/train_indices.csv",
    "part_1/test_indices.csv",
    "part_1/scaler_params.csv",
    "part_3/metrics_summary.csv",
    "part_4/sparsity_report.csv",
    "part_4/c_sweep.csv",
    "part_5/importance_per_class.csv",
    "part_5/importance_aggregate.csv",
    "part_5/consistency_matrix.csv",
    "part_5/cost_benefit.txt",
}
for _k in range(3):
    EXPECTED_FILES.add(f"part_2/loss_trace_class{_k}.csv")
    for _solver, _part in reports.SOLVER_PART.items():
        EXPECTED_FILES.add(f"{_part}/model_{_solver}_class{_k}.csv")
        EXPECTED_FILES.add(f"{_part}/confusion_{_solver}_class{_k}.csv")
for _solver, _part in reports.SOLVER_PART.items():
    EXPECTED_FILES.add(f"{_part}/predictions_{_solver}.csv")


def _files(root):
    return {str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()}


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("runs")
    results = []
    for name in ("first", "second"):
        cfg = RunConfig(output_dir=base / name, **FAST)
        results.append(run_pipeline(cfg))
    return base / "first", base / "second", results[0]


def test_artifact_set(two_runs):
    first, _, _ = two_runs
    assert _files(first) == EXPECTED_FILES


def test_byte_identical_reruns(two_runs):
    first, second, _ = two_runs
    outputs = sorted(f for f in EXPECTED_FILES if f != "timings.txt")
    match, mismatch, errors = filecmp.cmpfiles(first, second, outputs, shallow=False)
    assert mismatch == [] and errors == []
    assert len(match) == len(outputs)


def test_summary_contents(two_runs):
    first, _, result = two_runs
    text = (first / "summary.txt").read_text()
    assert "train=142 test=36" in text
    assert "test counts=[12, 14, 10]" in text
    assert "reference  multiclass argmax test:" in text
    assert result.solvers["reference"].mean_test_accuracy >= 0.94
    assert result.solvers["l1"].mean_test_accuracy >= 0.86


def test_csv_formats(two_runs):
    first, _, _ = two_runs
    trace = (first / "part_2/loss_trace_class0.csv").read_text().splitlines()
    assert trace[0] == "iteration,loss"
    assert trace[1] == "0,0.693147"
    assert len(trace) == 1 + 21
    model = (first / "part_3/model_reference_class0.csv").read_text().splitlines()
    assert model[0] == "feature_name,weight" and model[-1].startswith("bias,")
    assert len(model) == 15
    conf = (first / "part_3/confusion_reference_class0.csv").read_text().splitlines()
    assert conf[0] == "split,tp,tn,fp,fn"
    assert [r.split(",")[0] for r in conf[1:]] == ["train", "test"]
    preds = (first / "part_3/predictions_reference.csv").read_text().splitlines()
    assert preds[0] == "row_index,true_class,predicted_class,prob_0,prob_1,prob_2"
    assert len(preds) == 37
    sweep = (first / "part_4/c_sweep.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in sweep[1:]] == ["0.100000", "1.000000"]


def test_rerun_replaces_previous_output(two_runs):
    first, _, _ = two_runs
    before = (first / "summary.txt").read_bytes()
    run_pipeline(RunConfig(output_dir=first, solvers=("gd",), **FAST))
    assert (first / "summary.txt").read_bytes() != before
    assert not (first / "part_3/model_reference_class0.csv").exists()
    assert not list(first.parent.glob(".first.staging-*"))


def test_no_solver_selected(tmp_path):
    with pytest.raises(PipelineError, match="no solver selected") as info:
        run_pipeline(RunConfig(output_dir=tmp_path / "out", solvers=()))
    assert info.value.stage == "config"


def test_refuses_foreign_directory(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    (out / "keep.txt").write_text("mine")
    with pytest.raises(PipelineError, match="refusing"):
        run_pipeline(RunConfig(output_dir=out, **FAST))
    assert (out / "keep.txt").read_text() == "mine"


def test_failed_write_leaves_nothing(tmp_path, monkeypatch):
    def boom(result, root):
        (root / "partial.csv").write_text("x")
        raise OSError("disk full")

    monkeypatch.setattr(reports, "write_all", boom)
    out = tmp_path / "out"
    cfg = RunConfig(output_dir=out, solvers=("reference",), c_grid=(), consistency=())
    with pytest.raises(PipelineError, match=r"^\[write\] disk full") as info:
        run_pipeline(cfg)
    assert info.value.stage == "write"
    assert list(tmp_path.iterdir()) == []


def test_stage_tag_for_bad_data(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,target\n1,0\nx,1\n")
    with pytest.raises(PipelineError) as info:
        run_pipeline(RunConfig(data_path=bad, output_dir=tmp_path / "out"))
    assert info.value.stage == "load"
    assert not (tmp_path / "out").exists()


def test_sweep_singleton_and_large_c(wine_prep, wine_results):
    rows = sweep_c(RunConfig(c_grid=(0.1,)), wine_prep)
    assert len(rows) == 1 and rows[0].C == 0.1
    assert rows[0].retained == tuple(
        int(np.sum(np.abs(m.weights) > 1e-10)) for m in wine_results["l1"].model.models
    )
    big = sweep_c(RunConfig(c_grid=(1e6,)), wine_prep)[0]
    assert abs(big.mean_test_accuracy - wine_results["reference"].mean_test_accuracy) <= 0.01


def test_sweep_sorted_and_monotone(wine_prep):
    rows = sweep_c(RunConfig(c_grid=(1.0, 0.1, 0.5)), wine_prep)
    assert [r.C for r in rows] == [0.1, 0.5, 1.0]
    for k in range(3):
        counts = [r.retained[k] for r in rows]
        assert counts == sorted(counts)


def test_sweep_empty_grid():
    with pytest.raises(ConfigError):
        sweep_c(RunConfig(c_grid=()))


def test_consistency_parse():
    assert ConsistencyConfig.parse("gd:3") == ConsistencyConfig("gd", 3)
    assert ConsistencyConfig.parse("l1:15:0.5").label == "l1_seed15_C0.5"
    for bad in ("gd", "l1:15", "svm:1", "gd:x"):
        with pytest.raises(ConfigError):
            ConsistencyConfig.parse(bad)


# -- CLI ---------------------------------------------------------------------


def _cfg(argv):
    parser = cli.build_parser()
    return cli.config_from_args(parser.parse_args(argv), parser)


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# experiment\nseed = 3\nlr = 0.001\nc_grid = 0.1, 0.5\nsolvers = gd,l1  # two\n")
    cfg = _cfg(["--config", str(conf), "--seed", "7", "--out", str(tmp_path / "o")])
    assert cfg.seed == 7
    assert cfg.gd.learning_rate == 0.001 and cfg.gd.iterations == 10_000
    assert cfg.c_grid == (0.1, 0.5)
    assert cfg.solvers == ("gd", "l1")
    assert cfg.output_dir == tmp_path / "o"


def test_config_file_errors(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="unknown key"):
        _cfg(["--config", str(conf)])
    conf.write_text("seed = abc\n")
    with pytest.raises(ConfigError, match="bad value"):
        _cfg(["--config", str(conf)])
    with pytest.raises(ConfigError, match="not found"):
        _cfg(["--config", str(tmp_path / "missing.conf")])


def test_cli_defaults():
    cfg = _cfg([])
    assert cfg == RunConfig()


def test_cli_success(tmp_path, capsys):
    out = tmp_path / "res"
    argv = [
        "--out", str(out), "--solvers", "reference", "--c-grid", "0.1",
        "--consistency", "reference:1,reference:2", "--subset-size", "4",
    ]
    assert cli.main(argv) == 0
    stdout = capsys.readouterr().out
    assert "reference  mean test accuracy" in stdout
    assert (out / "summary.txt").is_file()
    assert "4 of 13" in (out / "part_5/cost_benefit.txt").read_text()


def test_cli_failure_is_stage_tagged(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert cli.main(["--data", str(missing), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error [load]")
    assert cli.main(["--solvers", "", "--out", str(tmp_path / "o")]) == 1
    assert "error [config] no solver selected" in capsys.readouterr().err


def test_cli_bad_flag_value(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--c-grid", "a,b"])
    assert info.value.code == 2


def test_runconfig_replace_keeps_validation():
    cfg = dataclasses.replace(RunConfig(), solvers=("gd", "gd"))
    with pytest.raises(ConfigError):
        cfg.validate()
