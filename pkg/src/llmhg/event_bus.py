from __future__ import annotations

import logging
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

logger = logging.getLogger(__name__)

EventHandler = Callable[[Dict[str, object]], None]

WILDCARD = "*"


@dataclass
class EventStats:
    event: str
    count: int
    last_emitted: Optional[float]


class EventBus:
    """In-process pub/sub for pipeline progress (epochs, fixtures, seeds) with counters.

    Handlers subscribed to ``"*"`` receive every event, with its name under ``"event"``.
    """

    def __init__(self) -> None:
        self._listeners: Dict[str, List[EventHandler]] = defaultdict(list)
        self._lock = threading.RLock()
        self._counts: Dict[str, int] = defaultdict(int)
        self._last_emitted: Dict[str, float] = {}

    def emit(self, event: str, payload: Optional[Dict[str, object]] = None) -> None:
        if payload is None:
            payload = {}
        with self._lock:
            listeners = list(self._listeners.get(event, []))
            catch_all = list(self._listeners.get(WILDCARD, []))
            self._counts[event] += 1
            self._last_emitted[event] = time.time()
        logger.debug("%s %s", event, payload)
        calls = [(handler, payload) for handler in listeners]
        calls += [(handler, {"event": event, **payload}) for handler in catch_all]
        for handler, message in calls:
            try:
                handler(message)
            except Exception:  # noqa: BLE001
                # listener errors never reach the emitter
                logger.exception("listener failed on %s", event)

    def subscribe(self, event: str, handler: EventHandler) -> Callable[[], None]:
        with self._lock:
            self._listeners[event].append(handler)

        def unsubscribe() -> None:
            with self._lock:
                handlers = self._listeners.get(event)
                if handlers and handler in handlers:
                    handlers.remove(handler)

        return unsubscribe

    def count(self, event: str) -> int:
        with self._lock:
            return self._counts.get(event, 0)

    def get_stats(self) -> List[EventStats]:
        with self._lock:
            return [
                EventStats(event=event, count=count, last_emitted=self._last_emitted.get(event))
                for event, count in sorted(self._counts.items())
            ]

    def reset(self) -> None:
        with self._lock:
            self._counts.clear()
            self._last_emitted.clear()


# Singleton partagé par tous les modules
EVENT_BUS = EventBus()
