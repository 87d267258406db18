from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional

from llmhg.errors import DataIoError, ParseError
from llmhg.event_bus import EVENT_BUS

logger = logging.getLogger(__name__)


def fixture_key(purpose: str, model_id: str, rendered_text: str) -> str:
    payload = json.dumps([purpose, model_id, rendered_text], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FixtureRecord:
    key: str
    purpose: str
    model_id: str
    prompt: str
    response: str
    prompt_tokens: int
    completion_tokens: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=False)


class FixtureStore:
    """Append-only JSONL of recorded LLM exchanges.

    Reads are served from an in-memory index; appends are serialized. Several records may
    share a key (a retried prompt): the n-th lookup of a key returns its n-th record and
    sticks to the last one afterwards, so a replay walks the recorded session in order.
    """

    def __init__(self, path: Path | str, *, create: bool = False) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: Dict[str, List[FixtureRecord]] = defaultdict(list)
        self._cursors: Dict[str, int] = defaultdict(int)
        if self.path.exists():
            self._load()
        elif create:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
        else:
            raise DataIoError(f"Fixture file not found: {self.path}")

    def _load(self) -> None:
        text = self.path.read_text(encoding="utf-8")
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                record = FixtureRecord(
                    key=str(payload["key"]),
                    purpose=str(payload["purpose"]),
                    model_id=str(payload["model_id"]),
                    prompt=str(payload["prompt"]),
                    response=str(payload["response"]),
                    prompt_tokens=int(payload["prompt_tokens"]),
                    completion_tokens=int(payload["completion_tokens"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad fixture record ({exc})", line_number=number, path=str(self.path)) from exc
            self._records[record.key].append(record)
        logger.debug("loaded %d fixture keys from %s", len(self._records), self.path)

    def __len__(self) -> int:
        with self._lock:
            return sum(len(records) for records in self._records.values())

    def __contains__(self, key: object) -> bool:
        with self._lock:
            return key in self._records

    def lookup(self, key: str) -> Optional[FixtureRecord]:
        with self._lock:
            records = self._records.get(key)
            if not records:
                return None
            position = min(self._cursors[key], len(records) - 1)
            self._cursors[key] += 1
            return records[position]

    def append(self, record: FixtureRecord) -> None:
        line = record.to_json()
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fp:
                fp.write(line)
                fp.write("\n")
            self._records[record.key].append(record)
        EVENT_BUS.emit("profile.fixture_recorded", {"key": record.key, "purpose": record.purpose})
