from __future__ import annotations

from llmhg.cli.app import main

__all__ = ["main"]
