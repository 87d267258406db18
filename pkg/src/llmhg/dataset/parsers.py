from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from llmhg.dataset.types import MIN_SEQUENCE_LENGTH, InteractionDataset, ItemCatalog
from llmhg.errors import DataIoError, EmptyDataset, ParseError
from llmhg.event_bus import EVENT_BUS

logger = logging.getLogger(__name__)

COLUMNS = ["user_id", "item_id", "rating", "timestamp"]


def _require(path: Path | str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise DataIoError(f"Input file not found: {resolved}")
    return resolved


def _split_lines(path: Path, delimiter: str, width: int, *, encoding: str) -> List[Tuple[int, List[str]]]:
    """Split every nonblank line into exactly ``width`` fields, keeping 1-based line numbers."""
    rows: List[Tuple[int, List[str]]] = []
    try:
        text = path.read_text(encoding=encoding)
    except OSError as exc:
        raise DataIoError(f"Cannot read {path}: {exc}") from exc
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(delimiter, width - 1) if width > 1 else [line]
        if len(parts) != width:
            raise ParseError(f"expected {width} fields separated by {delimiter!r}", line_number=number, path=str(path))
        rows.append((number, [part.strip() for part in parts]))
    return rows


def _interactions_frame(rows: List[Tuple[int, List[str]]], path: Path) -> pd.DataFrame:
    frame = pd.DataFrame([fields for _, fields in rows], columns=COLUMNS)
    frame["line"] = [number for number, _ in rows]
    timestamps = pd.to_numeric(frame["timestamp"], errors="coerce")
    bad = frame[timestamps.isna() | (timestamps < 0) | (frame["user_id"] == "") | (frame["item_id"] == "")]
    if not bad.empty:
        raise ParseError("malformed interaction (empty id or bad timestamp)", line_number=int(bad["line"].iloc[0]), path=str(path))
    frame["timestamp"] = timestamps.astype("int64")
    ratings = pd.to_numeric(frame["rating"], errors="coerce")
    if ratings.isna().any():
        raise ParseError("rating is not numeric", line_number=int(frame.loc[ratings.isna(), "line"].iloc[0]), path=str(path))
    return frame[["user_id", "item_id", "timestamp"]]


def preprocess_interactions(frame: pd.DataFrame, catalog: ItemCatalog, *, min_length: int = MIN_SEQUENCE_LENGTH) -> InteractionDataset:
    """Implicit-feedback preprocessing shared by every format.

    Stable sort by timestamp (file order breaks ties), keep the earliest copy of each
    (user, item), drop users under ``min_length`` and items only they touched.
    """
    if frame.empty:
        raise EmptyDataset("no interactions in input")
    ordered = frame.reset_index(drop=True)
    ordered["order"] = range(len(ordered))
    ordered = ordered.sort_values(["user_id", "timestamp", "order"], kind="mergesort")
    ordered = ordered.drop_duplicates(["user_id", "item_id"], keep="first")
    lengths = ordered.groupby("user_id", sort=False)["item_id"].transform("size")
    ordered = ordered[lengths >= min_length]
    if ordered.empty:
        raise EmptyDataset(f"no user keeps >= {min_length} interactions after preprocessing")

    sequences: Dict[str, Tuple[str, ...]] = {}
    for user_id, group in ordered.groupby("user_id", sort=False):
        sequences[str(user_id)] = tuple(str(item) for item in group["item_id"])
    users = sorted(sequences, key=_natural_key)
    sequences = {user: sequences[user] for user in users}
    kept_items = sorted({item for sequence in sequences.values() for item in sequence})
    dataset = InteractionDataset(sequences=sequences, catalog=catalog.restricted_to(kept_items))
    EVENT_BUS.emit(
        "dataset.ingested",
        {"users": dataset.n_users, "items": dataset.n_items, "actions": dataset.n_actions},
    )
    return dataset


def _natural_key(value: str) -> Tuple[int, object]:
    return (0, int(value)) if value.isdigit() else (1, value)


def parse_movielens(ratings_path: Path | str, movies_path: Path | str) -> InteractionDataset:
    """Read ML-1M ``ratings.dat`` / ``movies.dat`` (``::``-delimited, Latin-1 titles)."""
    ratings = _require(ratings_path)
    movies = _require(movies_path)
    attributes: Dict[str, Tuple[str, ...]] = {}
    titles: Dict[str, str] = {}
    for number, (movie_id, title, genres) in _split_lines(movies, "::", 3, encoding="latin-1"):
        if not movie_id:
            raise ParseError("empty MovieID", line_number=number, path=str(movies))
        titles[movie_id] = title
        attributes[movie_id] = tuple(genre.strip() for genre in genres.split("|") if genre.strip())

    frame = _interactions_frame(_split_lines(ratings, "::", 4, encoding="latin-1"), ratings)
    missing = sorted(set(frame["item_id"]) - set(attributes), key=_natural_key)
    if missing:
        logger.warning("%d rated movies missing from %s; kept with empty attributes", len(missing), movies.name)
        for movie_id in missing:
            attributes[movie_id] = ()
    catalog = ItemCatalog(attributes=attributes, titles=titles, default_angle="genre")
    return preprocess_interactions(frame, catalog)


def parse_amazon_csv(path: Path | str, metadata_path: Optional[Path | str] = None) -> InteractionDataset:
    """Read ``user,item,rating,timestamp`` rows; optional ``item<TAB>category<TAB>brand`` metadata."""
    source = _require(path)
    rows = _split_lines(source, ",", 4, encoding="utf-8")
    if rows and not _looks_numeric(rows[0][1][3]):
        rows = rows[1:]  # header
    if not rows:
        raise EmptyDataset(f"{source} holds no interactions")
    frame = _interactions_frame(rows, source)

    attributes: Dict[str, Tuple[str, ...]] = {}
    if metadata_path is not None:
        meta = _require(metadata_path)
        for number, fields in _split_lines(meta, "\t", 3, encoding="utf-8"):
            item_id, category, brand = fields
            if not item_id:
                raise ParseError("empty item id", line_number=number, path=str(meta))
            values = []
            if category:
                values.append(f"category:{category}")
            if brand:
                values.append(f"brand:{brand}")
            attributes[item_id] = tuple(values)
    for item_id in set(frame["item_id"]) - set(attributes):
        attributes[item_id] = ()
    catalog = ItemCatalog(attributes=attributes, default_angle="category")
    return preprocess_interactions(frame, catalog)


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
