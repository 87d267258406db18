from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from llmhg.errors import DataIoError, ParseError
from llmhg.hypergraph.ops import edge_id
from llmhg.hypergraph.types import Hyperedge, MultiViewHypergraph
from llmhg.utils import write_text_atomic

VERTICES_HEADER = "#vertices"
COMMENT = "#"


def render_hypergraph(hg: MultiViewHypergraph) -> str:
    """``view<TAB>label<TAB>item,item,...`` lines after a ``#vertices`` comment line.

    The comment keeps isolated vertices, which no edge line mentions. Readers treat every
    other ``#`` line as a comment and, without the vertices line, take the vertices from the
    edges in order of first appearance.
    """
    lines = [f"{VERTICES_HEADER}\t{','.join(hg.vertices)}"]
    lines.extend(f"{edge.angle}\t{edge.label}\t{','.join(edge.members)}" for edge in hg.edges)
    return "\n".join(lines) + "\n"


def write_hypergraph_dump(hg: MultiViewHypergraph, path: Path | str) -> Path:
    return write_text_atomic(path, render_hypergraph(hg))


def read_hypergraph_dump(path: Path | str, user_id: Optional[str] = None) -> MultiViewHypergraph:
    source = Path(path)
    if not source.is_file():
        raise DataIoError(f"Hypergraph dump not found: {source}")
    vertices: List[str] = []
    edges: List[Hyperedge] = []
    for number, line in enumerate(source.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if parts[0] == VERTICES_HEADER:
            vertices = [item for item in (parts[1] if len(parts) > 1 else "").split(",") if item]
            continue
        if line.startswith(COMMENT):
            continue
        if len(parts) != 3 or not parts[2]:
            raise ParseError("expected view<TAB>label<TAB>item,item,...", line_number=number, path=str(source))
        angle, label, members = parts
        edges.append(Hyperedge(edge_id(angle, label), angle, label, tuple(members.split(","))))
    if not vertices:
        vertices = list(dict.fromkeys(item for edge in edges for item in edge.members))
    return MultiViewHypergraph(user_id=user_id or source.stem, vertices=tuple(vertices), edges=tuple(edges))


def render_weights(edges: Sequence[Hyperedge], weights: Sequence[float]) -> str:
    """``edge_id<TAB>label<TAB>w(e)`` lines, heaviest edge first."""
    rows: List[Tuple[float, str, str]] = sorted(
        ((float(weight), edge.edge_id, edge.label) for edge, weight in zip(edges, weights)),
        key=lambda row: (-row[0], row[1]),
    )
    return "".join(f"{eid}\t{label}\t{weight:.10g}\n" for weight, eid, label in rows)


def parse_weights(text: str) -> Dict[str, float]:
    weights: Dict[str, float] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        try:
            weights[parts[0]] = float(parts[2])
        except (IndexError, ValueError) as exc:
            raise ParseError("expected edge_id<TAB>label<TAB>weight", line_number=number) from exc
    return weights
