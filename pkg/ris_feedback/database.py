import logging
from pathlib import Path

import duckdb
import pandas as pd

logger = logging.getLogger(__name__)


class RunLedger:
    def __init__(self, path: str | Path):
        """Initialize the ledger for a local DuckDB file (or ':memory:')."""
        self.path = str(path)
        self.conn = None

    def connect(self):
        """Open the database and make sure both tables exist."""
        try:
            if not self.conn:
                if self.path != ":memory:":
                    Path(self.path).parent.mkdir(parents=True, exist_ok=True)
                self.conn = duckdb.connect(self.path)
                self._ensure_tables_exist()
                logger.debug(f"✓ Connected to run ledger: {self.path}")
            return self
        except duckdb.Error as e:
            raise RuntimeError(f"Failed to open run ledger {self.path}: {e}")

    def _ensure_tables_exist(self):
        """One row per CLI run, one row per sweep point."""
        self.conn.execute("CREATE SEQUENCE IF NOT EXISTS run_ids START 1")
        self.conn.execute("""
        CREATE TABLE IF NOT EXISTS runs (
            run_id BIGINT PRIMARY KEY DEFAULT nextval('run_ids'),
            created_at TIMESTAMP,  -- UTC
            command VARCHAR,
            version VARCHAR,
            scenario JSON,
            csv_path VARCHAR
        )
        """)
        self.conn.execute("""
        CREATE TABLE IF NOT EXISTS sweep_points (
            run_id BIGINT,
            scheme VARCHAR,
            l INTEGER,
            d INTEGER,
            b INTEGER,
            t_bits INTEGER,
            trials INTEGER,
            seed UBIGINT,
            mean_snr_db DOUBLE,
            mean_snr_linear DOUBLE,
            std DOUBLE,
            ci95 DOUBLE
        )
        """)

    def log_run(self, manifest, frame: pd.DataFrame) -> int:
        """Store a manifest and its sweep rows; returns the new run id."""
        if not self.conn:
            self.connect()

        scenario_json = manifest.scenario.model_dump_json()
        run_id = self.conn.execute(
            """
            INSERT INTO runs (created_at, command, version, scenario, csv_path)
            VALUES (?, ?, ?, ?, ?)
            RETURNING run_id
            """,
            (manifest.timestamp.replace(tzinfo=None), manifest.command, manifest.version, scenario_json, manifest.csv_path),
        ).fetchone()[0]

        points = frame.copy()
        points.insert(0, "run_id", run_id)
        self.conn.register("points_view", points)
        try:
            self.conn.execute("INSERT INTO sweep_points SELECT * FROM points_view")
        finally:
            self.conn.unregister("points_view")
        logger.info(f"✓ Logged run {run_id} ({len(points)} points) to {self.path}")
        return run_id

    def runs(self) -> pd.DataFrame:
        if not self.conn:
            self.connect()
        return self.conn.execute("SELECT * FROM runs ORDER BY run_id").df()

    def points(self, run_id: int) -> pd.DataFrame:
        if not self.conn:
            self.connect()
        return self.conn.execute(
            "SELECT * EXCLUDE (run_id) FROM sweep_points WHERE run_id = ? ORDER BY rowid", (run_id,)
        ).df()

    def close(self):
        if self.conn:
            self.conn.close()
            self.conn = None
