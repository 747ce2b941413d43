"""
Named experiment grids and their runner.

Every (row, seed) pair trains on the train split, keeps the best validation checkpoint and is
scored on the test split. Results go to a RunStore; aggregation reads only completed rows.
"""
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from autooia.const import ABSENT, AGGREGATE_COLUMNS, Ablation, FileName, GridName, Split, TRAIN_LOG_COLUMNS
from autooia.data.dataset import load_split
from autooia.exceptions.exception import OIAError, UnknownGridError
from autooia.manager.report import ReportRow, Table, report_table, to_markdown, write_csv
from autooia.manager.sqllite import RunStore
from autooia.model.checkpoint import save_checkpoint
from autooia.trainer.trainer import Trainer, TrainRunConfig, evaluate
from autooia.utils import digest, format_float, timed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridRow:
    """One configuration of a grid: a name plus the TrainRunConfig fields it overrides."""
    name: str
    overrides: Tuple[Tuple[str, object], ...] = ()

    def apply(self, base: TrainRunConfig, seed: int) -> TrainRunConfig:
        return replace(base, seed=seed, **dict(self.overrides))


@dataclass(frozen=True)
class ExperimentGrid:
    name: str
    description: str
    rows: Tuple[GridRow, ...]

    def configs(self, base: TrainRunConfig, seed: int) -> List[TrainRunConfig]:
        return [row.apply(base, seed) for row in self.rows]


def _lambda_row(value: float) -> GridRow:
    return GridRow(f"lambda={format_float(value)}", (("lambda_", value), ("ablation", Ablation.FULL)))


GRIDS: Dict[str, ExperimentGrid] = {
    GridName.LAMBDA_SWEEP: ExperimentGrid(
        GridName.LAMBDA_SWEEP, "Action and explanation F1 as a function of the explanation loss weight",
        tuple(_lambda_row(value) for value in (0.0, 0.01, 0.1, 1.0, math.inf)),
    ),
    GridName.BRANCH_ABLATION: ExperimentGrid(
        GridName.BRANCH_ABLATION, "Contribution of the local and global branches and of the selector",
        (
            GridRow("local-only", (("ablation", Ablation.LOCAL_ONLY),)),
            GridRow("global-only", (("ablation", Ablation.GLOBAL_ONLY),)),
            GridRow("random-selector", (("ablation", Ablation.RANDOM_SELECTOR),)),
            GridRow("top-5", (("ablation", Ablation.FULL), ("k", 5))),
            GridRow("top-10", (("ablation", Ablation.FULL), ("k", 10))),
        ),
    ),
    GridName.SINGLE_VS_MULTI: ExperimentGrid(
        GridName.SINGLE_VS_MULTI, "Single driver intent versus multiple admissible actions",
        (
            GridRow("single-action", (("ablation", Ablation.SINGLE_ACTION),)),
            GridRow("multi-action", (("ablation", Ablation.FULL),)),
        ),
    ),
    GridName.MODEL_COMPARISON: ExperimentGrid(
        GridName.MODEL_COMPARISON, "Purely global, purely local selector and the full model",
        (
            GridRow("global-only", (("ablation", Ablation.GLOBAL_ONLY),)),
            GridRow("local-selector", (("ablation", Ablation.LOCAL_SELECTOR),)),
            GridRow("full", (("ablation", Ablation.FULL),)),
        ),
    ),
}


def get_grid(name: str) -> ExperimentGrid:
    """
    Raises:
        UnknownGridError: Naming the available grids.
    """
    if name not in GRIDS:
        raise UnknownGridError(f"Unknown grid '{name}'. Available grids: {', '.join(GRIDS)}")
    return GRIDS[name]


@dataclass(frozen=True)
class GridJob:
    grid: str
    row: GridRow
    seed: int
    data_dir: Path
    out_dir: Path
    base: TrainRunConfig

    @property
    def run_dir(self) -> Path:
        return self.out_dir / self.row.name / f"seed{self.seed}"

    @property
    def config_digest(self) -> str:
        """Digest of the resolved run configuration and the dataset it trains on."""
        config = asdict(self.row.apply(self.base, self.seed))
        text = json.dumps({"run": config, "data": str(self.data_dir.resolve())}, sort_keys=True)
        return digest(text.encode("utf-8"))


def run_job(job: GridJob) -> ReportRow:
    """Trains and tests one (row, seed) pair. Module-level so process pools can pickle it."""
    config = job.row.apply(job.base, job.seed)
    model_config = config.model_config()

    def fit_and_score():
        train_set = load_split(job.data_dir, Split.TRAIN, model_config)
        val_set = load_split(job.data_dir, Split.VAL, model_config, allow_empty=True)
        test_set = load_split(job.data_dir, Split.TEST, model_config)
        result = Trainer(config).train(train_set, val_set)
        best = result.best_params()
        return result, best, evaluate(test_set, best).metrics

    (result, best, metrics), elapsed = timed(fit_and_score)()
    save_checkpoint(job.run_dir / FileName.BEST_CHECKPOINT, best,
                    {"grid": job.grid, "row": job.row.name, "best_epoch": result.best_epoch})
    write_csv(job.run_dir / FileName.TRAIN_LOG, Table(TRAIN_LOG_COLUMNS, [entry.row() for entry in result.log]))
    logger.info("%s/%s seed %d finished in %.1fs", job.grid, job.row.name, job.seed, elapsed)
    return ReportRow(job.row.name, config.lambda_, config.k, metrics, elapsed, job.seed)


def _cell(values: Sequence[Optional[float]], digits: int = 4) -> str:
    if not values or any(v is None for v in values):
        return ABSENT
    data = np.asarray(values, dtype=np.float64)
    if data.size == 1:
        return f"{data[0]:.{digits}f}"
    return f"{data.mean():.{digits}f} ± {data.std(ddof=1):.{digits}f}"


def aggregate(grid: ExperimentGrid, rows: Sequence[ReportRow]) -> Table:
    """
    Mean ± sample standard deviation over seeds for every metric cell, one line per grid row
    in grid order. Wall time is left out.
    """
    table = Table(AGGREGATE_COLUMNS)
    for grid_row in grid.rows:
        group = [row for row in rows if row.config == grid_row.name]
        if not group:
            continue
        metric_values = [row.metrics.values() for row in group]
        line = {"config": grid_row.name, "lambda": format_float(group[0].lambda_), "k": str(group[0].k)}
        for column in AGGREGATE_COLUMNS[3:-1]:
            line[column] = _cell([values[column] for values in metric_values])
        line["seeds"] = str(len(group))
        table.rows.append(line)
    return table


@dataclass
class GridRunner:
    """
    Runs a grid over seeds, in worker processes when ``workers`` > 1. Each job owns its run
    directory; only the parent writes to the run store. With ``resume`` a (row, seed) pair that
    already completed with the same configuration is read back instead of retrained.
    """
    grid: ExperimentGrid
    data_dir: Path
    out_dir: Path
    base: TrainRunConfig = field(default_factory=TrainRunConfig)
    workers: int = 1
    on_row: Optional[Callable[[ReportRow], None]] = field(default=None, repr=False)
    resume: bool = True

    def jobs(self, seeds: Sequence[int]) -> List[GridJob]:
        return [GridJob(self.grid.name, row, seed, Path(self.data_dir), Path(self.out_dir), self.base)
                for seed in seeds for row in self.grid.rows]

    def run(self, seeds: Sequence[int]) -> Tuple[List[ReportRow], Table]:
        out_dir = Path(self.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        store = RunStore(out_dir / FileName.RUNS_DB)
        try:
            jobs = self.pending(store, seeds)
            if self.workers > 1:
                with ProcessPoolExecutor(max_workers=self.workers) as pool:
                    futures = [pool.submit(run_job, job) for job in jobs]
                    for job, future in zip(jobs, futures):
                        self._collect(store, job, future.result)
            else:
                for job in jobs:
                    self._collect(store, job, lambda job=job: run_job(job))

            completed = store.completed(self.grid.name, list(seeds))
        finally:
            store.close()
        order = {row.name: index for index, row in enumerate(self.grid.rows)}
        completed.sort(key=lambda row: (row.seed, order.get(row.config, len(order))))
        summary = aggregate(self.grid, completed)
        write_csv(out_dir / FileName.RUNS_CSV, report_table(completed))
        write_csv(out_dir / FileName.AGGREGATE_CSV, summary)
        (out_dir / FileName.AGGREGATE_MD).write_text(to_markdown(summary), encoding="utf-8")
        return completed, summary

    def pending(self, store: RunStore, seeds: Sequence[int]) -> List[GridJob]:
        jobs = self.jobs(seeds)
        if not self.resume:
            return jobs
        pending = [job for job in jobs
                   if not store.is_completed(job.grid, job.row.name, job.seed, job.config_digest)]
        if len(pending) < len(jobs):
            logger.info("Resuming %s: %d of %d run(s) already completed", self.grid.name,
                        len(jobs) - len(pending), len(jobs))
        return pending

    def _collect(self, store: RunStore, job: GridJob, result: Callable[[], ReportRow]) -> None:
        try:
            row = result()
        except OIAError:
            config = job.row.apply(job.base, job.seed)
            store.record_failure(job.grid, job.row.name, job.seed, config.lambda_, config.k, job.config_digest)
            raise
        store.record(job.grid, row, config_digest=job.config_digest)
        if self.on_row is not None:
            self.on_row(row)
