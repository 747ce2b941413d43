import argparse
import configparser
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table as RichTable
from rich.text import Text

from autooia import utils
from autooia.base import Base
from autooia.const import (
    Ablation, Command, EXPLANATIONS, FileName, Split, TRAIN_LOG_COLUMNS,
)
from autooia.data.annotations import load_annotations
from autooia.data.dataset import (
    dataset_profile, load_split, split_records, write_manifest, write_split,
)
from autooia.data.stats import dataset_stats
from autooia.data.synthetic import CausalRuleTable, SyntheticConfig, generate_synthetic
from autooia.exceptions.exception import ConfigError, DataError
from autooia.manager.grid import GRIDS, GridRunner, get_grid
from autooia.manager.report import ReportRow, Table, read_table, report_table, to_csv, to_markdown, write_csv
from autooia.model.checkpoint import load_checkpoint, save_checkpoint
from autooia.settings import load_settings, read_config_file, section_overrides
from autooia.trainer.trainer import EpochLog, Evaluation, Trainer, TrainRunConfig, evaluate
from autooia.validation import validate_fractions, validate_seeds
from autooia.version import AUTHOR, DESCRIPTION, LICENSE, TITLE, VERSION_TEXT

logger = logging.getLogger("autooia")


def setup_logging(level: int, console) -> None:
    """Routes the autooia logger through a single RichHandler."""
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    logger.addHandler(RichHandler(console=console, show_path=False, markup=False))
    logger.setLevel(level)
    logger.propagate = False


def write_global_map(path: Path, global_map: np.ndarray) -> None:
    """
    Writes the channel mean of a C×H×W map as a plain-text graymap, min-max scaled to 0-255.
    A constant map is written as zeros.
    """
    mean = np.asarray(global_map, dtype=np.float64).mean(axis=0)
    low, high = float(mean.min()), float(mean.max())
    scaled = np.zeros_like(mean) if high == low else (mean - low) / (high - low) * 255.0
    pixels = np.rint(scaled).astype(np.int64)
    height, width = pixels.shape
    lines = ["P2", f"{width} {height}", "255"] + [" ".join(str(v) for v in row) for row in pixels]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def prediction_line(prediction) -> str:
    """scene_id, action mask, explanation mask and index:score pairs of the selected objects, tab separated."""
    selected = ",".join(f"{i}:{prediction.scores[i]:.6f}" for i in prediction.selected_indices)
    return "\t".join([prediction.scene_id, utils.mask_to_text(prediction.action),
                      utils.mask_to_text(prediction.explanation), selected])


@dataclass
class OIACLI(Base):
    """
    Command line interface for generating data, training, evaluating and running ablation grids.

    Attributes:
        argv (Optional[List[str]]): Arguments to parse; sys.argv when None.
        parser (argparse.ArgumentParser): Command line argument parser.
        args (argparse.Namespace): Parsed command line arguments.
        config (configparser.ConfigParser): Optional ini file with [settings], [train] and [synthetic] sections.
    """
    argv: Optional[List[str]] = None
    parser: argparse.ArgumentParser = field(init=False, repr=False)
    args: argparse.Namespace = field(init=False)
    config: configparser.ConfigParser = field(init=False, repr=False)

    def __post_init__(self):
        self.parser = self._create_parser()
        self.args = self.parser.parse_args(self.argv)
        config_file = self.args.config_file
        if config_file is None and utils.get_config_file().is_file():
            config_file = utils.get_config_file()
        self.config = read_config_file(config_file)
        self.settings = load_settings(self.config)
        if self.args.threads is not None:
            self.settings = replace(self.settings, threads=self.args.threads)
        super().__post_init__()
        level = logging.DEBUG if self.args.verbose else logging.WARNING if self.args.quiet else logging.INFO
        setup_logging(level, self.console)

    def display_app_info(self) -> None:
        self.console.print(Text(TITLE, style="bold red"))
        self.console.print(Text(f"Version: {VERSION_TEXT}", style="bold blue"))
        self.console.print(Text(DESCRIPTION, style="dim"))
        self.console.print(Text(f"Author: {AUTHOR}", style="green"))
        self.console.print(Text(f"License: {LICENSE}", style="red"))

    @classmethod
    def _create_parser(cls) -> argparse.ArgumentParser:
        """
        Creates and configures the argument parser with all necessary subparsers and options.

        Returns:
            argparse.ArgumentParser: Configured argument parser.
        """
        parser = argparse.ArgumentParser(prog="oia", description=DESCRIPTION)
        parser.add_argument("--config-file", type=Path, help=f"Ini file (default: ./{FileName.CONFIG_INI} if present)")
        parser.add_argument("--threads", type=int, help="Maximum worker count (overrides OIA_THREADS)")
        parser.add_argument("--list-grids", action="store_true", help="List the shipped experiment grids")
        verbosity = parser.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
        verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
        subparsers = parser.add_subparsers(dest="action")

        gen = subparsers.add_parser(Command.GEN_DATA, help="Generate a synthetic planted-causality dataset")
        gen.add_argument("--out", type=Path, required=True, help="Output dataset directory")
        gen.add_argument("--scenes", type=int, help="Number of scenes (default 100)")
        gen.add_argument("--seed", type=int, help="Dataset seed (default 0)")
        gen.add_argument("--profile", choices=["desk", "paper"], help="Channel profile (default desk)")
        gen.add_argument("--noise", type=float, help="Feature noise standard deviation (default 0.1)")
        gen.add_argument("--fractions", default="0.7,0.1,0.2", help="train,val,test fractions")

        train = subparsers.add_parser(Command.TRAIN, help="Train one configuration")
        train.add_argument("--data", type=Path, required=True, help="Dataset directory")
        train.add_argument("--out", type=Path, required=True, help="Run output directory")
        cls._add_run_arguments(train)
        train.add_argument("--lambda", dest="lambda_", type=utils.parse_float, help="Explanation loss weight, 'inf' for explanations only")
        train.add_argument("--k", type=int, help="Number of selected objects")
        train.add_argument("--ablation", choices=Ablation.choices(), help="Model variant")
        train.add_argument("--seed", type=int, help="Run seed")

        evaluate_parser = subparsers.add_parser(Command.EVAL, help="Evaluate a checkpoint on a split")
        evaluate_parser.add_argument("--data", type=Path, required=True, help="Dataset directory")
        evaluate_parser.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file")
        evaluate_parser.add_argument("--split", choices=Split.choices(), default=Split.TEST)
        evaluate_parser.add_argument("--dump-predictions", type=Path, help="Write one prediction line per scene")
        evaluate_parser.add_argument("--dump-global-map", type=Path, help="Directory for per-scene graymaps")

        ablate = subparsers.add_parser(Command.ABLATE, help="Run a named experiment grid over seeds")
        ablate.add_argument("--grid", required=True, help=f"One of {', '.join(GRIDS)}")
        ablate.add_argument("--data", type=Path, required=True, help="Dataset directory")
        ablate.add_argument("--seeds", default="0", help="Comma separated seeds")
        ablate.add_argument("--out", type=Path, help="Output directory (default runs/<grid>)")
        ablate.add_argument("--restart", action="store_true", help="Retrain runs already completed in the output directory")
        cls._add_run_arguments(ablate)

        report = subparsers.add_parser(Command.REPORT, help="Render a CSV or markdown table")
        report.add_argument("--in", dest="input", type=Path, required=True, help="Run, aggregate or training-log table")
        report.add_argument("--format", choices=["markdown", "csv", "table"], default="markdown")
        report.add_argument("--out", type=Path, help="Write to a file instead of standard output")

        stats = subparsers.add_parser(Command.STATS, help="Label counts of a split")
        stats.add_argument("--data", type=Path, required=True, help="Dataset directory")
        stats.add_argument("--split", choices=Split.choices(), default=Split.TRAIN)

        return parser

    @staticmethod
    def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--epochs", type=int, help="Epochs (default 50)")
        parser.add_argument("--batch-size", type=int, help="Scenes per optimizer step (default 16)")
        parser.add_argument("--lr", dest="base_lr", type=float, help="Initial learning rate (default 0.001)")
        parser.add_argument("--weight-decay", type=float, help="Weight decay (default 0.0001)")
        parser.add_argument("--decay-every", type=int, help="Epochs between learning-rate drops (default 10)")
        parser.add_argument("--decoupled-weight-decay", action="store_true", default=None,
                            help="Decay weights directly instead of through the gradient")
        parser.add_argument("--no-label-prior", dest="label_prior_bias", action="store_false", default=None,
                            help="Start output biases at zero instead of the training label rates")

    def run_config(self, data_dir: Path) -> TrainRunConfig:
        """TrainRunConfig from defaults, the [train] ini section, then command line flags."""
        values: Dict[str, object] = {"profile": dataset_profile(data_dir), "dtype": self.settings.dtype}
        values.update(section_overrides(self.config, "train", TrainRunConfig))
        for name in ("epochs", "batch_size", "base_lr", "weight_decay", "decay_every", "decoupled_weight_decay",
                     "label_prior_bias", "lambda_", "k", "ablation", "seed"):
            value = getattr(self.args, name, None)
            if value is not None:
                values[name] = value
        return TrainRunConfig(**values)

    def synthetic_config(self) -> SyntheticConfig:
        values = section_overrides(self.config, "synthetic", SyntheticConfig)
        if "prior" in values:
            values["prior"] = tuple(float(p) for p in str(values["prior"]).split(","))
        for name in ("scenes", "seed", "profile", "noise"):
            value = getattr(self.args, name)
            if value is not None:
                values[name] = value
        return SyntheticConfig(**values)

    def handle_gen_data(self) -> None:
        if not validate_fractions(self.args.fractions):
            raise ConfigError(f"--fractions needs three non-negative numbers summing to 1, got {self.args.fractions!r}")
        fractions = tuple(float(p) for p in self.args.fractions.split(","))
        synthetic = self.synthetic_config()
        rules = CausalRuleTable.default()
        scenes = generate_synthetic(synthetic, rules)
        splits = split_records(scenes, fractions)
        out = self.args.out
        try:
            out.mkdir(parents=True, exist_ok=True)
            for split, records in splits.items():
                write_split(out, split, records)
            write_manifest(out, synthetic, rules, {s: len(r) for s, r in splits.items()}, fractions)
        except OSError as e:
            raise DataError(f"cannot write dataset to {out}: {e}") from e
        sizes = ", ".join(f"{split} {len(records)}" for split, records in splits.items())
        self.say(f"Wrote {len(scenes)} scenes to {out} ({sizes})", "success")

    def _train_with_progress(self, trainer: Trainer, train_set, val_set):
        with Progress(TextColumn("[bold blue]{task.description}"), BarColumn(),
                      TextColumn("{task.completed}/{task.total}"), TimeElapsedColumn(),
                      console=self.console, transient=True) as progress:
            task = progress.add_task("training", total=trainer.config.epochs)

            def advance(entry: EpochLog) -> None:
                progress.update(task, advance=1, description=f"epoch {entry.epoch} loss {entry.train_loss:.4f}")

            trainer.on_epoch = advance
            return trainer.train(train_set, val_set)

    def handle_train(self) -> None:
        config = self.run_config(self.args.data)
        model_config = config.model_config()
        train_set = load_split(self.args.data, Split.TRAIN, model_config)
        val_set = load_split(self.args.data, Split.VAL, model_config, allow_empty=True)
        trainer = Trainer(config, workers=self.workers(len(val_set) or 1))
        result = self._train_with_progress(trainer, train_set, val_set)

        out = self.args.out
        run = asdict(config)
        save_checkpoint(out / FileName.FINAL_CHECKPOINT, result.params, {"run": run, "epoch": config.epochs - 1})
        save_checkpoint(out / FileName.BEST_CHECKPOINT, result.best_params(), {"run": run, "epoch": result.best_epoch})
        write_csv(out / FileName.TRAIN_LOG, Table(TRAIN_LOG_COLUMNS, [entry.row() for entry in result.log]))

        last = result.log[-1]
        if last.metrics is not None:
            self.print_rows([ReportRow(config.ablation, config.lambda_, config.k, last.metrics)], "final validation")
        self.say(f"Saved {FileName.FINAL_CHECKPOINT}, {FileName.BEST_CHECKPOINT} (epoch {result.best_epoch}) "
                 f"and {FileName.TRAIN_LOG} to {out}", "success")

    def handle_eval(self) -> None:
        params, extra = load_checkpoint(self.args.checkpoint)
        scenes = load_split(self.args.data, self.args.split, params.config)
        evaluation, elapsed = utils.timed(evaluate)(scenes, params, self.workers(len(scenes)))
        config = params.config
        self.print_rows([ReportRow(config.ablation, config.lambda_, config.k, evaluation.metrics, elapsed)],
                        f"{self.args.split} split")
        self._dump(evaluation)

    def _dump(self, evaluation: Evaluation) -> None:
        if self.args.dump_predictions is not None:
            path = self.args.dump_predictions
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("".join(prediction_line(p) + "\n" for p in evaluation.predictions), encoding="utf-8")
            self.say(f"Wrote {len(evaluation.predictions)} predictions to {path}", "success")
        if self.args.dump_global_map is not None:
            for prediction in evaluation.predictions:
                write_global_map(self.args.dump_global_map / f"{prediction.scene_id}.pgm", prediction.global_map)
            self.say(f"Wrote {len(evaluation.predictions)} graymaps to {self.args.dump_global_map}", "success")

    def handle_ablate(self) -> None:
        grid = get_grid(self.args.grid)
        if not validate_seeds(self.args.seeds):
            raise ConfigError(f"--seeds needs comma separated non-negative integers, got {self.args.seeds!r}")
        seeds = utils.parse_int_list(self.args.seeds)
        out = self.args.out or Path("runs") / grid.name
        base = self.run_config(self.args.data)
        runner = GridRunner(grid, self.args.data, out, base, workers=self.workers(len(grid.rows) * len(seeds)),
                            resume=not self.args.restart,
                            on_row=lambda row: self.say(f"{row.config} seed {row.seed}: "
                                                        f"{row.metrics.cells()['action_F1all']} action F1_all", "info"))
        _, summary = runner.run(seeds)
        self.print_table(summary, f"{grid.name} over seeds {self.args.seeds}")
        self.say(f"Wrote {FileName.RUNS_CSV}, {FileName.AGGREGATE_CSV} and {FileName.AGGREGATE_MD} to {out}", "success")

    def handle_report(self) -> None:
        if not self.args.input.is_file():
            raise DataError(f"Report input not found: {self.args.input}")
        table = read_table(self.args.input)
        if self.args.format == "table":
            self.print_table(table, str(self.args.input))
            return
        rendered = to_markdown(table) if self.args.format == "markdown" else to_csv(table)
        if self.args.out is not None:
            self.args.out.write_text(rendered, encoding="utf-8")
            self.say(f"Wrote {self.args.out}", "success")
        else:
            self.console.print(rendered, end="", markup=False, highlight=False, soft_wrap=True)

    def handle_stats(self) -> None:
        path = utils.annotation_path(self.args.data, self.args.split)
        if not path.is_file():
            raise DataError(f"Annotation file not found: {path}")
        counts = dataset_stats(load_annotations(path))
        actions = RichTable(title=f"{self.args.split}: {counts.scenes} scenes")
        actions.add_column("Action", style="cyan")
        actions.add_column("Count", justify="right", style="magenta")
        for name, count in counts.action_table().items():
            actions.add_row(name, str(count))
        explanations = RichTable()
        explanations.add_column("#", justify="right", style="dim")
        explanations.add_column("Explanation", style="cyan")
        explanations.add_column("Count", justify="right", style="magenta")
        for index, name in enumerate(EXPLANATIONS):
            explanations.add_row(str(index), name, str(counts.explanation_table()[name]))
        self.console.print(actions)
        self.console.print(explanations)

    def handle_list_grids(self) -> None:
        table = RichTable(title="Experiment grids")
        table.add_column("Grid", style="cyan", no_wrap=True)
        table.add_column("Rows", style="magenta")
        table.add_column("Description", style="dim")
        for grid in GRIDS.values():
            table.add_row(grid.name, ", ".join(row.name for row in grid.rows), grid.description)
        self.console.print(table)

    def print_rows(self, rows: Sequence[ReportRow], title: str) -> None:
        self.print_table(report_table(rows), title)

    def print_table(self, table: Table, title: str) -> None:
        rich_table = RichTable(title=title)
        for column in table.columns:
            rich_table.add_column(column, style="cyan" if column == "config" else None, no_wrap=True)
        for row in table.rows:
            rich_table.add_row(*(row[column] for column in table.columns))
        self.console.print(rich_table)

    def run(self) -> None:
        """
        Main entry point for handling command line arguments and dispatching the sub-command.
        """
        if self.args.list_grids:
            self.handle_list_grids()
            return

        actions: Dict[str, Callable[[], None]] = {
            Command.GEN_DATA: self.handle_gen_data,
            Command.TRAIN: self.handle_train,
            Command.EVAL: self.handle_eval,
            Command.ABLATE: self.handle_ablate,
            Command.REPORT: self.handle_report,
            Command.STATS: self.handle_stats,
        }
        action_func = actions.get(self.args.action)
        if action_func is None:
            self.display_app_info()
            self.parser.print_help()
            return
        action_func()
