"""Entrée de paquet hglab."""

from .cli import main

__all__ = ["main"]
