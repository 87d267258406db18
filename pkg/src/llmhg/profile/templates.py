from __future__ import annotations

import textwrap
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence

from llmhg.errors import DataIoError, InvalidConfig
from llmhg.profile.types import HistoryItem

ANGLES_TEMPLATE = textwrap.dedent(
    """
    LLMHG_ANGLES V1
    A user interacted with the following items, oldest first:
    {history}

    Which interest angles (facets such as genre, director, era, country, brand) best explain
    these choices? Give at most {max_angles} angles.
    Answer ONLY with a numbered list, one short angle name per line, for example:
    1. genre
    2. director
    """
).strip()

CATEGORIZE_TEMPLATE = textwrap.dedent(
    """
    LLMHG_CATEGORIZE V1
    Interest angle: {angle}
    Group each item below into one or more categories along this angle.
    Items:
    {items}

    Answer ONLY with one line per item, using the item name exactly as given:
    item name -> category[, category]
    """
).strip()


@dataclass(frozen=True)
class PromptTemplates:
    angles: str = ANGLES_TEMPLATE
    categorize: str = CATEGORIZE_TEMPLATE

    def render_angles(self, history: Sequence[HistoryItem], max_angles: int) -> str:
        lines = []
        for item in history:
            suffix = f" ({', '.join(item.attributes)})" if item.attributes else ""
            lines.append(f"- {item.title}{suffix}")
        return self._render(self.angles, history="\n".join(lines), max_angles=max_angles)

    def render_categorize(self, angle: str, items: Sequence[HistoryItem]) -> str:
        listing = "\n".join(f"- {item.title}" for item in items)
        return self._render(self.categorize, angle=angle, items=listing)

    @staticmethod
    def _render(template: str, **values: object) -> str:
        try:
            text = template.format(**values)
        except (KeyError, IndexError) as exc:
            raise InvalidConfig(f"template placeholder not provided: {exc}") from exc
        return text


def load_templates(path: Optional[Path | str]) -> PromptTemplates:
    """Read ``[angles]`` / ``[categorize]`` sections; missing sections keep the defaults."""
    if path is None:
        return PromptTemplates()
    source = Path(path)
    if not source.is_file():
        raise DataIoError(f"Template file not found: {source}")
    sections: Dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in source.read_text(encoding="utf-8").splitlines():
        header = line.strip()
        if header.startswith("[") and header.endswith("]"):
            current = header[1:-1].strip().lower()
            sections[current] = []
            continue
        if current is not None:
            sections[current].append(line)
    unknown = set(sections) - {"angles", "categorize"}
    if unknown:
        raise InvalidConfig(f"unknown template sections: {sorted(unknown)}")
    defaults = PromptTemplates()
    return PromptTemplates(
        angles="\n".join(sections["angles"]).strip() if "angles" in sections else defaults.angles,
        categorize="\n".join(sections["categorize"]).strip() if "categorize" in sections else defaults.categorize,
    )
