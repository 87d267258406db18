from __future__ import annotations

import logging
import time
from typing import Callable, Iterable, Optional, Type, TypeVar

from llmhg.event_bus import EVENT_BUS

T = TypeVar("T")

logger = logging.getLogger(__name__)


class CircuitBreakerOpen(RuntimeError):
    """Raised when a circuit breaker is open."""


class CircuitBreaker:
    """Stops hammering an endpoint after ``threshold`` consecutive failures."""

    def __init__(
        self,
        name: str,
        *,
        threshold: int = 3,
        cooldown: float = 30.0,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.name = name
        self.threshold = threshold
        self.cooldown = cooldown
        self._clock = clock
        self._failure_count = 0
        self._opened_until: float = 0.0

    @property
    def is_open(self) -> bool:
        return self._clock() < self._opened_until

    def allow(self) -> None:
        if self.is_open:
            raise CircuitBreakerOpen(f"Circuit '{self.name}' open for {self._opened_until - self._clock():.1f}s")

    def record_success(self) -> None:
        self._failure_count = 0
        self._opened_until = 0.0

    def record_failure(self) -> None:
        self._failure_count += 1
        if self._failure_count >= self.threshold:
            self._opened_until = self._clock() + self.cooldown
            self._failure_count = 0
            logger.warning("circuit %s opened for %.0fs", self.name, self.cooldown)


def retry_call(
    func: Callable[[], T],
    *,
    attempts: int = 3,
    delay: float = 0.5,
    backoff: float = 2.0,
    exceptions: Optional[Iterable[Type[BaseException]]] = None,
    label: str = "call",
    event: Optional[str] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Call ``func`` until it succeeds, sleeping ``delay * backoff**k`` between attempts.

    Each retry is logged and, when ``event`` is set, emitted on the bus with ``label``.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    catches = tuple(exceptions or (Exception,))
    current_delay = delay
    for attempt in range(1, attempts + 1):
        try:
            return func()
        except catches as exc:  # type: ignore[misc]
            if attempt == attempts:
                raise
            logger.info("%s failed (%s), retry %d/%d", label, exc, attempt, attempts - 1)
            if event:
                EVENT_BUS.emit(event, {"label": label, "attempt": attempt, "error": str(exc)})
            if current_delay > 0:
                sleep(current_delay)
            current_delay *= backoff
    raise AssertionError("unreachable")
