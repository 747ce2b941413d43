import math

import pytest

from autooia.cli import OIACLI, prediction_line, write_global_map
from autooia.const import ExitCode, FileName, Split
from autooia.data.dataset import load_split, read_manifest
from autooia.data.synthetic import CausalRuleTable
from autooia.exceptions.exception import (
    BadMagicError, ConfigError, DataError, NumericAbortError, OIAError, UnknownGridError,
)
from autooia.manager.report import parse_csv, parse_markdown
from autooia.model.checkpoint import load_checkpoint
from autooia.trainer.trainer import ScenePrediction, evaluate
from oia import exit_code_for, main

import numpy as np

QUICK = ["--epochs", "1", "--batch-size", "8", "--k", "2"]


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("OIA_THREADS", raising=False)


def run(*argv):
    main(list(map(str, argv)))


def exit_code(*argv) -> int:
    with pytest.raises(SystemExit) as info:
        run(*argv)
    return info.value.code


def snapshot(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "gen"
    run("gen-data", "--out", out, "--scenes", 30, "--seed", 7)
    return out


class TestGenData:
    def test_deterministic(self, tmp_path):
        run("gen-data", "--out", tmp_path / "a", "--scenes", 12, "--seed", 7)
        run("gen-data", "--out", tmp_path / "b", "--scenes", 12, "--seed", 7)
        assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")

    def test_default_split_sizes(self, tmp_path):
        run("gen-data", "--out", tmp_path / "d", "--scenes", 100, "--seed", 7)
        dataset = read_manifest(tmp_path / "d")["dataset"]
        assert (dataset["train_scenes"], dataset["val_scenes"], dataset["test_scenes"]) == ("70", "10", "20")

    def test_manifest_hash(self, generated):
        assert read_manifest(generated)["rules"]["hash"] == CausalRuleTable.default().hash()

    def test_synthetic_section_of_config_file(self, tmp_path):
        (tmp_path / "oia.ini").write_text("[synthetic]\nnoise = 0.0\ndistractor_max = 1\n", encoding="utf-8")
        run("gen-data", "--out", tmp_path / "d", "--scenes", 4)
        dataset = read_manifest(tmp_path / "d")["dataset"]
        assert dataset["noise"] == "0" and dataset["distractor_range"] == "0,1"

    def test_paper_profile(self, tmp_path):
        run("gen-data", "--out", tmp_path / "p", "--scenes", 1, "--profile", "paper")
        dataset = read_manifest(tmp_path / "p")["dataset"]
        assert dataset["profile"] == "paper" and dataset["backbone_size"] == "24,40"

    def test_bad_fractions(self, tmp_path):
        assert exit_code("gen-data", "--out", tmp_path / "d", "--fractions", "0.5,0.5") == ExitCode.USAGE

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        assert exit_code("gen-data", "--out", blocker / "sub", "--scenes", 2) == ExitCode.DATA


class TestTrainEval:
    def test_train_writes_artifacts(self, generated, tmp_path):
        out = tmp_path / "run"
        run("train", "--data", generated, "--out", out, *QUICK)
        for name in (FileName.FINAL_CHECKPOINT, FileName.BEST_CHECKPOINT, FileName.TRAIN_LOG):
            assert (out / name).is_file()
        log = parse_csv((out / FileName.TRAIN_LOG).read_text(encoding="utf-8"))
        assert log.layout == "train-log" and len(log.rows) == 1

    def test_zero_lambda_marks_explanations_absent(self, generated, tmp_path):
        run("train", "--data", generated, "--out", tmp_path / "run", "--lambda", 0, *QUICK)
        row = parse_csv((tmp_path / "run" / FileName.TRAIN_LOG).read_text(encoding="utf-8")).rows[0]
        assert row["expl_mF1"] == row["expl_F1all"] == "-"
        assert row["action_mF1"] != "-"

    def test_infinite_lambda_flag(self, generated, tmp_path):
        run("train", "--data", generated, "--out", tmp_path / "run", "--lambda", "inf", *QUICK)
        params, extra = load_checkpoint(tmp_path / "run" / FileName.FINAL_CHECKPOINT)
        assert params.config.lambda_ == math.inf
        assert extra["run"]["lambda_"] == math.inf

    def test_checkpoint_reproduces_logged_metrics(self, generated, tmp_path):
        out = tmp_path / "run"
        run("train", "--data", generated, "--out", out, "--epochs", 2, "--batch-size", 8, "--k", 2)
        logged = parse_csv((out / FileName.TRAIN_LOG).read_text(encoding="utf-8")).rows[-1]
        params, _ = load_checkpoint(out / FileName.FINAL_CHECKPOINT)
        metrics = evaluate(load_split(generated, Split.VAL, params.config), params).metrics
        assert all(logged[column] == value for column, value in metrics.cells().items() if column in logged)

    def test_eval_dumps(self, generated, tmp_path):
        out = tmp_path / "run"
        run("train", "--data", generated, "--out", out, *QUICK)
        predictions, maps = tmp_path / "pred.tsv", tmp_path / "maps"
        run("eval", "--data", generated, "--checkpoint", out / FileName.BEST_CHECKPOINT,
            "--dump-predictions", predictions, "--dump-global-map", maps)
        lines = predictions.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 6
        scene_id, action, explanation, selected = lines[0].split("\t")
        assert len(action) == 4 and len(explanation) == 21 and set(action + explanation) <= {"0", "1"}
        assert 1 <= len(selected.split(",")) <= 2
        graymap = (maps / f"{scene_id}.pgm").read_text(encoding="ascii").split()
        assert graymap[:4] == ["P2", "3", "3", "255"]
        pixels = [int(v) for v in graymap[4:]]
        assert len(pixels) == 9 and all(0 <= v <= 255 for v in pixels)

    def test_eval_is_deterministic(self, generated, tmp_path):
        run("train", "--data", generated, "--out", tmp_path / "run", *QUICK)
        for name in ("a.tsv", "b.tsv"):
            run("eval", "--data", generated, "--checkpoint", tmp_path / "run" / FileName.FINAL_CHECKPOINT,
                "--dump-predictions", tmp_path / name)
        assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()

    def test_eval_does_not_touch_dataset(self, generated, tmp_path):
        run("train", "--data", generated, "--out", tmp_path / "run", *QUICK)
        before = snapshot(generated)
        run("eval", "--data", generated, "--checkpoint", tmp_path / "run" / FileName.FINAL_CHECKPOINT)
        assert snapshot(generated) == before

    def test_missing_dataset(self, tmp_path):
        assert exit_code("train", "--data", tmp_path / "none", "--out", tmp_path / "run", *QUICK) == ExitCode.DATA

    def test_missing_checkpoint(self, generated, tmp_path):
        assert exit_code("eval", "--data", generated, "--checkpoint", tmp_path / "x.oiac") == ExitCode.DATA

    def test_checkpoint_profile_mismatch(self, generated, tmp_path):
        paper = tmp_path / "paper"
        run("gen-data", "--out", paper, "--scenes", 2, "--profile", "paper")
        run("train", "--data", generated, "--out", tmp_path / "run", *QUICK)
        code = exit_code("eval", "--data", paper, "--checkpoint", tmp_path / "run" / FileName.FINAL_CHECKPOINT,
                         "--split", "train")
        assert code == ExitCode.DATA

    def test_train_section_of_config_file(self, generated, tmp_path):
        config = tmp_path / "custom.ini"
        config.write_text("[train]\nepochs = 2\nk = 2\nbatch_size = 8\n", encoding="utf-8")
        run("--config-file", config, "train", "--data", generated, "--out", tmp_path / "run")
        assert len(parse_csv((tmp_path / "run" / FileName.TRAIN_LOG).read_text(encoding="utf-8")).rows) == 2

    def test_unknown_config_key(self, generated, tmp_path):
        (tmp_path / "oia.ini").write_text("[train]\nepoch = 2\n", encoding="utf-8")
        assert exit_code("train", "--data", generated, "--out", tmp_path / "run") == ExitCode.USAGE


class TestAblateReport:
    def test_lambda_sweep(self, generated, tmp_path):
        out = tmp_path / "sweep"
        run("ablate", "--grid", "lambda-sweep", "--data", generated, "--seeds", "0", "--out", out, "--epochs", 1,
            "--batch-size", 8)
        summary = parse_csv((out / FileName.AGGREGATE_CSV).read_text(encoding="utf-8"))
        assert summary.layout == "aggregate"
        assert [row["lambda"] for row in summary.rows] == ["0", "0.01", "0.1", "1", "inf"]

    def test_unknown_grid(self, generated, tmp_path):
        assert exit_code("ablate", "--grid", "nope", "--data", generated) == ExitCode.USAGE

    def test_bad_seeds(self, generated):
        assert exit_code("ablate", "--grid", "lambda-sweep", "--data", generated, "--seeds", "a,b") == ExitCode.USAGE

    def test_report_round_trip(self, tmp_path):
        csv_path = tmp_path / "runs.csv"
        csv_path.write_text("config,lambda,k,F,S,L,R,action_mF1,action_F1all,expl_mF1,expl_F1all,wall_time_s\n"
                            "lambda=0,0,10,0.783,0.758,0.419,0.568,0.632,0.711,-,-,1.00\n", encoding="utf-8")
        run("report", "--in", csv_path, "--format", "markdown", "--out", tmp_path / "runs.md")
        table = parse_markdown((tmp_path / "runs.md").read_text(encoding="utf-8"))
        assert table.rows == parse_csv(csv_path.read_text(encoding="utf-8")).rows

    def test_report_to_stdout(self, tmp_path, capsys):
        csv_path = tmp_path / "empty.csv"
        csv_path.write_text("", encoding="utf-8")
        run("report", "--in", csv_path)
        assert capsys.readouterr().out.startswith("| config | lambda | k |")

    def test_report_malformed(self, tmp_path):
        csv_path = tmp_path / "bad.csv"
        csv_path.write_text("config,lambda\n", encoding="utf-8")
        assert exit_code("report", "--in", csv_path) == ExitCode.DATA

    def test_report_missing_input(self, tmp_path):
        assert exit_code("report", "--in", tmp_path / "none.csv") == ExitCode.DATA


class TestMisc:
    def test_stats(self, generated, capsys):
        run("stats", "--data", generated, "--split", "test")
        out = capsys.readouterr().out
        assert "6 scenes" in out and "Move forward" in out

    def test_list_grids(self, capsys):
        run("--list-grids")
        out = capsys.readouterr().out
        assert "lambda-sweep" in out and "model-comparison" in out

    def test_no_command_prints_help(self, capsys):
        run()
        assert "gen-data" in capsys.readouterr().out

    def test_missing_config_file(self, tmp_path):
        assert exit_code("--config-file", tmp_path / "none.ini", "--list-grids") == ExitCode.USAGE

    def test_threads_flag(self):
        cli = OIACLI(argv=["--threads", "3"])
        assert cli.settings.threads == 3
        assert cli.workers(2) == 2

    def test_restart_flag(self):
        assert OIACLI(argv=["ablate", "--grid", "lambda-sweep", "--data", "d", "--restart"]).args.restart
        assert not OIACLI(argv=["ablate", "--grid", "lambda-sweep", "--data", "d"]).args.restart

    def test_label_prior_flag(self, generated):
        assert OIACLI(argv=["train", "--data", str(generated), "--out", "r"]).run_config(generated).label_prior_bias
        cli = OIACLI(argv=["train", "--data", str(generated), "--out", "r", "--no-label-prior"])
        assert not cli.run_config(generated).label_prior_bias

    def test_threads_environment(self, monkeypatch):
        monkeypatch.setenv("OIA_THREADS", "4")
        assert OIACLI(argv=[]).settings.threads == 4


@pytest.mark.parametrize("error, code", [
    (ConfigError("x"), ExitCode.USAGE),
    (UnknownGridError("x"), ExitCode.USAGE),
    (DataError("x"), ExitCode.DATA),
    (BadMagicError("x"), ExitCode.DATA),
    (NumericAbortError("x", epoch=1, scene_id="s"), ExitCode.NUMERIC),
    (OIAError("x"), ExitCode.ERROR),
    (RuntimeError("x"), ExitCode.ERROR),
    (KeyboardInterrupt(), ExitCode.INTERRUPTED),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_exit_codes_are_distinct():
    codes = [ExitCode.OK, ExitCode.ERROR, ExitCode.USAGE, ExitCode.DATA, ExitCode.NUMERIC]
    assert len(set(codes)) == len(codes) and ExitCode.OK == 0


def test_write_global_map_scales(tmp_path):
    global_map = np.zeros((2, 2, 3))
    global_map[:, 0, 0] = -1.0
    global_map[:, 1, 2] = 3.0
    write_global_map(tmp_path / "m.pgm", global_map)
    values = (tmp_path / "m.pgm").read_text(encoding="ascii").split()
    assert values[:4] == ["P2", "3", "2", "255"]
    assert values[4] == "0" and values[-1] == "255"


def test_constant_global_map_is_black(tmp_path):
    write_global_map(tmp_path / "m.pgm", np.ones((1, 3, 3)))
    assert set((tmp_path / "m.pgm").read_text(encoding="ascii").split()[4:]) == {"0"}


def test_prediction_line():
    prediction = ScenePrediction("s1", np.array([0, 1, 1, 0]), np.zeros(21, dtype=np.int8), (2, 0),
                                 np.array([0.25, 0.05, 0.7]), np.zeros((1, 3, 3)))
    assert prediction_line(prediction) == "s1\t0110\t" + "0" * 21 + "\t2:0.700000,0:0.250000"
