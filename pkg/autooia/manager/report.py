"""
Report rows and their CSV / markdown renderings.

Three layouts are recognised by their header: per-run report rows, aggregated rows and
training logs. Column order is fixed by autooia.const.
"""
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from autooia.const import AGGREGATE_COLUMNS, REPORT_COLUMNS, TRAIN_LOG_COLUMNS
from autooia.exceptions.exception import ReportFormatError
from autooia.metrics import MetricsBundle
from autooia.utils import format_float

LAYOUTS: Dict[str, Tuple[str, ...]] = {
    "report": REPORT_COLUMNS,
    "aggregate": AGGREGATE_COLUMNS,
    "train-log": TRAIN_LOG_COLUMNS,
}


@dataclass
class ReportRow:
    """
    Result of one trained configuration on one seed.

    Attributes:
        config (str): Grid row name.
        lambda_ (float): Explanation loss weight.
        k (int): Selected objects.
        metrics (MetricsBundle): Test-split scores.
        wall_time_s (float): Training plus evaluation time.
        seed (int): Run seed; kept out of the CSV layout.
    """
    config: str
    lambda_: float
    k: int
    metrics: MetricsBundle
    wall_time_s: float = 0.0
    seed: int = field(default=0, compare=False)

    def cells(self) -> Dict[str, str]:
        return {
            "config": self.config,
            "lambda": format_float(self.lambda_),
            "k": str(self.k),
            **self.metrics.cells(),
            "wall_time_s": f"{self.wall_time_s:.2f}",
        }


@dataclass
class Table:
    columns: Tuple[str, ...]
    rows: List[Dict[str, str]] = field(default_factory=list)

    @property
    def layout(self) -> Optional[str]:
        return next((name for name, columns in LAYOUTS.items() if columns == self.columns), None)


def to_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(table.columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(table.rows)
    return buffer.getvalue()


def write_csv(path: Path, table: Table) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(table), encoding="utf-8")


def to_markdown(table: Table) -> str:
    lines = ["| " + " | ".join(table.columns) + " |",
             "|" + "|".join("---" for _ in table.columns) + "|"]
    for row in table.rows:
        lines.append("| " + " | ".join(row[column] for column in table.columns) + " |")
    return "\n".join(lines) + "\n"


def parse_csv(text: str, default_columns: Sequence[str] = REPORT_COLUMNS) -> Table:
    """
    Parses one of the known CSV layouts. Empty input yields a header-only table with
    ``default_columns``.

    Raises:
        ReportFormatError: On an unknown header or a row with the wrong number of fields.
    """
    records = list(csv.reader(io.StringIO(text)))
    if not records:
        return Table(tuple(default_columns))
    header = tuple(records[0])
    if header not in LAYOUTS.values():
        raise ReportFormatError(1, f"unrecognised header {','.join(header)}")
    table = Table(header)
    for line_no, values in enumerate(records[1:], start=2):
        if not values:
            continue
        if len(values) != len(header):
            raise ReportFormatError(line_no, f"expected {len(header)} fields, got {len(values)}")
        table.rows.append(dict(zip(header, values)))
    return table


def parse_markdown(text: str) -> Table:
    """
    Inverse of to_markdown.

    Raises:
        ReportFormatError: On a missing separator line or a ragged row.
    """
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        return Table(REPORT_COLUMNS)

    def cells(line: str, line_no: int) -> List[str]:
        if not (line.startswith("|") and line.endswith("|")):
            raise ReportFormatError(line_no, "table lines must start and end with '|'")
        return [cell.strip() for cell in line[1:-1].split("|")]

    header = tuple(cells(lines[0], 1))
    if len(lines) < 2 or set(lines[1].replace("|", "")) != {"-"}:
        raise ReportFormatError(2, "missing header separator")
    table = Table(header)
    for line_no, line in enumerate(lines[2:], start=3):
        values = cells(line, line_no)
        if len(values) != len(header):
            raise ReportFormatError(line_no, f"expected {len(header)} cells, got {len(values)}")
        table.rows.append(dict(zip(header, values)))
    return table


def read_table(path: Path) -> Table:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".md":
        return parse_markdown(text)
    return parse_csv(text)


def report_table(rows: Iterable[ReportRow]) -> Table:
    return Table(REPORT_COLUMNS, [row.cells() for row in rows])
