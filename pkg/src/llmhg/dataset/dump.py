from __future__ import annotations

from pathlib import Path
from typing import Dict, Tuple

from llmhg.dataset.types import MIN_SEQUENCE_LENGTH, InteractionDataset, ItemCatalog
from llmhg.errors import DataIoError, EmptyDataset, ParseError
from llmhg.utils import write_text_atomic

SEQUENCES_FILE = "sequences.tsv"
CATALOG_FILE = "catalog.tsv"


def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def write_dump(dataset: InteractionDataset, directory: Path | str) -> Path:
    """Canonical dump: ``user<TAB>item,item,...`` plus ``item<TAB>title<TAB>attr|attr``."""
    target = Path(directory)
    sequence_lines = [f"{user}\t{','.join(sequence)}" for user, sequence in dataset.sequences.items()]
    catalog = dataset.catalog
    catalog_lines = [f"#default_angle\t{catalog.default_angle}"]
    for item in dataset.items:
        title = catalog.titles.get(item, "")
        attrs = "|".join(_clean(attr) for attr in catalog.attributes_of(item))
        catalog_lines.append(f"{item}\t{_clean(title)}\t{attrs}")
    write_text_atomic(target / SEQUENCES_FILE, "\n".join(sequence_lines) + "\n")
    write_text_atomic(target / CATALOG_FILE, "\n".join(catalog_lines) + "\n")
    return target


def read_dump(directory: Path | str) -> InteractionDataset:
    source = Path(directory)
    sequences_path = source / SEQUENCES_FILE
    catalog_path = source / CATALOG_FILE
    for path in (sequences_path, catalog_path):
        if not path.is_file():
            raise DataIoError(f"Dump file not found: {path}")

    default_angle = "genre"
    attributes: Dict[str, Tuple[str, ...]] = {}
    titles: Dict[str, str] = {}
    for number, line in enumerate(catalog_path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if parts[0] == "#default_angle":
            default_angle = parts[1] if len(parts) > 1 else default_angle
            continue
        if len(parts) != 3:
            raise ParseError("expected item<TAB>title<TAB>attributes", line_number=number, path=str(catalog_path))
        item, title, attrs = parts
        attributes[item] = tuple(attr for attr in attrs.split("|") if attr)
        if title:
            titles[item] = title

    sequences: Dict[str, Tuple[str, ...]] = {}
    for number, line in enumerate(sequences_path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            raise ParseError("expected user<TAB>item,item,...", line_number=number, path=str(sequences_path))
        items = tuple(item for item in parts[1].split(",") if item)
        if len(items) < MIN_SEQUENCE_LENGTH:
            raise ParseError(f"sequence shorter than {MIN_SEQUENCE_LENGTH}", line_number=number, path=str(sequences_path))
        unknown = [item for item in items if item not in attributes]
        if unknown:
            raise ParseError(f"item {unknown[0]} missing from catalog", line_number=number, path=str(sequences_path))
        sequences[parts[0]] = items
    if not sequences:
        raise EmptyDataset(f"{sequences_path} holds no users")
    return InteractionDataset(
        sequences=sequences,
        catalog=ItemCatalog(attributes=attributes, titles=titles, default_angle=default_angle),
    )
