import json
import sqlite3
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from autooia.manager.report import ReportRow
from autooia.metrics import MetricsBundle
from autooia.utils import generate_uuid5

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"


@dataclass
class RunStore:
    """Class for recording ablation runs in a SQLite database.

    Attributes:
        db_path (Path): The filesystem path to the SQLite database file.
        conn (sqlite3.Connection): SQLite connection object, initialized post-instantiation.
    """
    db_path: Path
    conn: sqlite3.Connection = field(init=False, default=None)

    def __post_init__(self) -> None:
        """Opens the database and creates the run_result table if it does not exist."""
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(self.db_path)
        self.create_table()

    def create_table(self) -> None:
        query = '''
        CREATE TABLE IF NOT EXISTS run_result (
            id TEXT PRIMARY KEY,
            grid TEXT NOT NULL,
            config_name TEXT NOT NULL,
            seed INTEGER NOT NULL,
            lambda REAL NOT NULL,
            k INTEGER NOT NULL,
            metrics TEXT NOT NULL,
            wall_time REAL NOT NULL,
            status TEXT NOT NULL,
            config_digest TEXT NOT NULL DEFAULT '',
            created_at DATETIME DEFAULT CURRENT_TIMESTAMP,
            updated_at DATETIME DEFAULT CURRENT_TIMESTAMP
        );
        '''
        self.conn.execute(query)
        self.conn.commit()

    @staticmethod
    def run_id(grid: str, config_name: str, seed: int) -> str:
        return generate_uuid5(f"{grid}/{config_name}/{seed}")

    def record(self, grid: str, row: ReportRow, status: str = STATUS_COMPLETED, config_digest: str = "") -> None:
        """
        Inserts or replaces the result of (grid, row, seed). ``config_digest`` identifies the full run
        configuration so a resumed grid only reuses results trained with the same settings.

        Raises:
            ValueError: If the database connection is not initialized.
        """
        if self.conn is None:
            raise ValueError("Database connection is not initialized.")
        query = '''
        INSERT OR REPLACE INTO run_result
            (id, grid, config_name, seed, lambda, k, metrics, wall_time, status, config_digest, updated_at)
        VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?);
        '''
        metrics = json.dumps(asdict(row.metrics))
        updated_at = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        self.conn.execute(query, (self.run_id(grid, row.config, row.seed), grid, row.config, row.seed,
                                  row.lambda_, row.k, metrics, row.wall_time_s, status, config_digest, updated_at))
        self.conn.commit()

    def record_failure(self, grid: str, config_name: str, seed: int, lambda_: float, k: int,
                       config_digest: str = "") -> None:
        empty = MetricsBundle(None, None, None, None, None)
        self.record(grid, ReportRow(config_name, lambda_, k, empty, seed=seed), STATUS_FAILED, config_digest)

    def is_completed(self, grid: str, config_name: str, seed: int, config_digest: str) -> bool:
        query = 'SELECT 1 FROM run_result WHERE id = ? AND status = ? AND config_digest = ?;'
        cursor = self.conn.execute(query, (self.run_id(grid, config_name, seed), STATUS_COMPLETED, config_digest))
        return cursor.fetchone() is not None

    def completed(self, grid: str, seeds: Optional[List[int]] = None) -> List[ReportRow]:
        """Completed rows of ``grid`` (optionally restricted to ``seeds``), ordered by config name and seed."""
        query = '''
        SELECT config_name, seed, lambda, k, metrics, wall_time FROM run_result
        WHERE grid = ? AND status = ? ORDER BY config_name, seed;
        '''
        rows = []
        for config_name, seed, lambda_, k, metrics, wall_time in self.conn.execute(query, (grid, STATUS_COMPLETED)):
            if seeds is not None and seed not in seeds:
                continue
            values = json.loads(metrics)
            if values.get("action_f1") is not None:
                values["action_f1"] = tuple(values["action_f1"])
            rows.append(ReportRow(config_name, lambda_, k, MetricsBundle(**values), wall_time, seed))
        return rows

    def close(self) -> None:
        """Closes the database connection."""
        if self.conn:
            self.conn.close()
