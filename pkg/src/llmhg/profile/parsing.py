from __future__ import annotations

import re
from typing import Dict, List, Mapping, Sequence, Tuple

from llmhg.profile.types import UNKNOWN, HistoryItem

_LIST_LINE = re.compile(r"^\s*(?:\d+\s*[.)]|[-*•])\s*(?P<body>.+?)\s*$")
_BULLET = re.compile(r"^\s*(?:\d+\s*[.)]|[-*•])\s*")
_WRAPPERS = "\"'`*_ "
_TRAILING = ".;,!"


def _squash(text: str) -> str:
    return " ".join(text.split())


def normalize_angle(raw: str) -> str:
    """Lowercase, drop markdown/quotes and any ``: description`` tail. Idempotent."""
    text = raw.split(":", 1)[0]
    text = text.split(" — ", 1)[0].split(" - ", 1)[0]
    text = _squash(text).strip(_WRAPPERS).rstrip(_TRAILING).strip(_WRAPPERS)
    return _squash(text.lower())


def normalize_label(raw: str) -> str:
    text = _squash(raw).strip(_WRAPPERS).rstrip(_TRAILING).strip(_WRAPPERS)
    return _squash(text.lower())


def parse_angle_list(text: str, max_angles: int) -> List[str]:
    """Angles from a numbered or dash list, normalized, deduplicated in order, capped."""
    angles: List[str] = []
    for line in text.splitlines():
        match = _LIST_LINE.match(line)
        if not match:
            continue
        angle = normalize_angle(match.group("body"))
        if angle and angle not in angles:
            angles.append(angle)
        if len(angles) >= max_angles:
            break
    return angles


def _item_key(name: str) -> str:
    return _squash(name).strip(_WRAPPERS).lower()


def parse_categories(text: str, items: Sequence[HistoryItem]) -> Tuple[Dict[str, Tuple[str, ...]], int]:
    """Parse ``item -> label[, label]*`` lines.

    Returns the mapping for every input item (``unknown`` when absent) and the number of
    ``->`` lines seen, so callers can tell an unparseable reply from a partial one.
    """
    by_name: Dict[str, List[str]] = {}
    for item in items:
        for name in {item.title, item.item_id}:
            by_name.setdefault(_item_key(name), []).append(item.item_id)

    found: Dict[str, List[str]] = {}
    arrows = 0
    for line in text.splitlines():
        if "->" not in line:
            continue
        arrows += 1
        left, right = line.rsplit("->", 1)
        key = _item_key(_BULLET.sub("", left, count=1))
        targets = by_name.get(key)
        if not targets:
            continue
        labels = [normalize_label(part) for part in right.split(",")]
        for item_id in dict.fromkeys(targets):
            bucket = found.setdefault(item_id, [])
            for label in labels:
                if label and label not in bucket:
                    bucket.append(label)

    mapping: Dict[str, Tuple[str, ...]] = {}
    for item in items:
        labels = found.get(item.item_id) or [UNKNOWN]
        mapping[item.item_id] = tuple(labels)
    return mapping, arrows


def render_categories(mapping: Mapping[str, Sequence[str]], titles: Mapping[str, str]) -> str:
    """Inverse of :func:`parse_categories`, used to fabricate fixtures in tests and demos."""
    return "\n".join(f"{titles.get(item, item)} -> {', '.join(labels)}" for item, labels in mapping.items())
