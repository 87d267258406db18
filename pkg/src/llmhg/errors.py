from __future__ import annotations

from typing import Optional


class LlmhgError(RuntimeError):
    """Base error; ``exit_code`` is what the CLI returns when it escapes a command."""

    exit_code = 1


class DataIoError(LlmhgError):
    """Raised when an input file is missing or unreadable."""

    exit_code = 2


class ParseError(LlmhgError):
    exit_code = 2

    def __init__(self, message: str, *, line_number: Optional[int] = None, path: Optional[str] = None) -> None:
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location = f"{location}{line_number}: "
        elif location:
            location = f"{location} "
        super().__init__(f"{location}{message}")
        self.line_number = line_number
        self.path = path


class EmptyDataset(LlmhgError):
    exit_code = 2


class InvalidConfig(LlmhgError):
    exit_code = 2


class InternalInvariantViolation(LlmhgError):
    """A contract that preprocessing should have guaranteed does not hold."""


class EmptyHistory(LlmhgError):
    pass


class LlmParseError(LlmhgError):
    pass


class LlmUnavailable(LlmhgError):
    """The LLM endpoint gave no usable answer after retries, or its circuit breaker is open."""

    exit_code = 3


class FixtureMiss(LlmhgError):
    exit_code = 3

    def __init__(self, key: str, purpose: str) -> None:
        super().__init__(f"No recorded response for {purpose} request {key[:12]}")
        self.key = key
        self.purpose = purpose


class InvalidUsage(LlmhgError):
    pass


class DegenerateHypergraph(LlmhgError):
    pass


class NumericalError(LlmhgError):
    pass


class ShapeError(LlmhgError):
    pass


class TrainingDiverged(LlmhgError):
    exit_code = 4

    def __init__(self, epoch: int, detail: str = "loss is not finite") -> None:
        super().__init__(f"Training diverged at epoch {epoch}: {detail}")
        self.epoch = epoch


class UnknownItem(LlmhgError):
    pass


class UnknownUser(LlmhgError):
    exit_code = 5
