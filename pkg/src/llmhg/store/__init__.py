from .sqlite import RunRow, RunStore

__all__ = ["RunRow", "RunStore"]
