from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Callable, Dict, Optional

from llmhg.event_bus import EVENT_BUS, WILDCARD, EventBus

EVENTS_FILE = "events.ndjson"


class RunLog:
    """Mirror every bus event of a command into ``<run_dir>/events.ndjson``.

    Use as a context manager around the command body; lines are ``{ts, event, payload}``.
    """

    def __init__(self, run_dir: Path | str, *, bus: EventBus = EVENT_BUS) -> None:
        self.path = Path(run_dir) / EVENTS_FILE
        self._bus = bus
        self._lock = threading.Lock()
        self._unsubscribe: Optional[Callable[[], None]] = None

    def __enter__(self) -> "RunLog":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._unsubscribe = self._bus.subscribe(WILDCARD, self._write)
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._unsubscribe is not None:
            self._unsubscribe()
            self._unsubscribe = None

    def _write(self, message: Dict[str, object]) -> None:
        payload = {key: value for key, value in message.items() if key != "event"}
        line = json.dumps({"ts": time.time(), "event": message.get("event"), "payload": payload}, ensure_ascii=False, default=str)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fp:
                fp.write(line)
                fp.write("\n")
