from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from llmhg.utils import retry_call


@dataclass
class RunRow:
    run_id: str
    command: str
    hypergraph: str
    seed: Optional[int]
    status: str
    created_at: float
    updated_at: float
    metrics: Optional[str]
    error: Optional[str]

    def metric_values(self) -> Dict[str, float]:
        return json.loads(self.metrics) if self.metrics else {}


class RunStore:
    """Registry of experiment runs (one row per command invocation or per seed)."""

    def __init__(self, db_path: Path | str) -> None:
        self._db_path = Path(db_path)
        self._db_path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._connection = sqlite3.connect(self._db_path, check_same_thread=False)
        self._connection.row_factory = sqlite3.Row
        self._ensure_schema()

    @property
    def path(self) -> Path:
        return self._db_path

    def _ensure_schema(self) -> None:
        with self._connection:
            self._connection.execute(
                """
                CREATE TABLE IF NOT EXISTS runs (
                    run_id TEXT PRIMARY KEY,
                    command TEXT NOT NULL,
                    hypergraph TEXT NOT NULL,
                    seed INTEGER,
                    status TEXT NOT NULL,
                    created_at REAL NOT NULL,
                    updated_at REAL NOT NULL,
                    metrics TEXT,
                    error TEXT
                )
                """
            )

    def start(self, *, command: str, hypergraph: str, seed: Optional[int] = None) -> str:
        run_id = uuid.uuid4().hex[:12]
        now = time.time()

        def _op() -> None:
            with self._lock, self._connection:
                self._connection.execute(
                    """
                    INSERT INTO runs (run_id, command, hypergraph, seed, status, created_at, updated_at, metrics, error)
                    VALUES (?, ?, ?, ?, 'running', ?, ?, NULL, NULL)
                    """,
                    (run_id, command, hypergraph, seed, now, now),
                )

        retry_call(_op, attempts=3, delay=0.2, exceptions=(sqlite3.OperationalError,), label="runs.insert")
        return run_id

    def finish(
        self,
        run_id: str,
        *,
        status: str = "completed",
        metrics: Optional[Dict[str, float]] = None,
        error: Optional[str] = None,
    ) -> None:
        payload = json.dumps(metrics, sort_keys=True) if metrics is not None else None

        def _op() -> None:
            with self._lock, self._connection:
                self._connection.execute(
                    "UPDATE runs SET status = ?, metrics = ?, error = ?, updated_at = ? WHERE run_id = ?",
                    (status, payload, error, time.time(), run_id),
                )

        retry_call(_op, attempts=3, delay=0.2, exceptions=(sqlite3.OperationalError,), label="runs.update")

    def get(self, run_id: str) -> Optional[RunRow]:
        cursor = self._connection.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,))
        row = cursor.fetchone()
        if not row:
            return None
        return RunRow(**row)

    def list(self, limit: Optional[int] = None) -> List[RunRow]:
        query = "SELECT * FROM runs ORDER BY created_at DESC, run_id"
        if limit is not None:
            query += f" LIMIT {int(limit)}"
        return [RunRow(**row) for row in self._connection.execute(query).fetchall()]

    def close(self) -> None:
        with self._lock:
            self._connection.close()
