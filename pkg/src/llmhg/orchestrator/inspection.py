from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from llmhg.errors import DataIoError, ParseError, UnknownUser
from llmhg.fusion import ModelSettings, build_context, mean_lambda, read_checkpoint
from llmhg.fusion.model import structure_state
from llmhg.hypergraph import MultiViewHypergraph, parse_weights, read_hypergraph_dump
from llmhg.orchestrator import pipeline
from llmhg.orchestrator.experiment import BANDWIDTHS_FILE, WEIGHTS_DIR
from llmhg.structure import structure_forward


@dataclass(frozen=True)
class EdgeRow:
    edge_id: str
    angle: str
    label: str
    members: Tuple[str, ...]
    weight: float
    lam: float
    prototype_shift: float


@dataclass
class UserInspection:
    user_id: str
    angles: List[str]
    isolated: List[str]
    mu: float
    mean_lambda: float
    rows: List[EdgeRow] = field(default_factory=list)
    recorded: Dict[str, float] = field(default_factory=dict)

    @property
    def max_weight_gap(self) -> Optional[float]:
        """Largest |recomputed - dumped| weight; None when the run wrote no weight dump."""
        if not self.recorded:
            return None
        return max(abs(row.weight - self.recorded.get(row.edge_id, np.nan)) for row in self.rows)


def _read_bandwidths(path: Path) -> Dict[str, float]:
    if not path.is_file():
        return {}
    values: Dict[str, float] = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        try:
            user, mu = line.split("\t")
            values[user] = float(mu)
        except ValueError as exc:
            raise ParseError("expected user<TAB>bandwidth", line_number=number, path=str(path)) from exc
    return values


def _with_label_text(hypergraph: MultiViewHypergraph, d_f: int) -> MultiViewHypergraph:
    embeddings = pipeline.label_embeddings([edge.label for edge in hypergraph.edges], d_f)
    edges = tuple(dataclasses.replace(edge, text_embedding=embeddings[edge.label]) for edge in hypergraph.edges)
    return dataclasses.replace(hypergraph, edges=edges)


def inspect_user(run_dir: Path | str, user_id: str) -> UserInspection:
    """Recompute one user's hyperedge weights and prototypes from a seed directory."""
    seed_dir = Path(run_dir)
    params, manifest = read_checkpoint(seed_dir)
    hypergraph_dir = seed_dir.parent / pipeline.HYPERGRAPH_DIR
    if not hypergraph_dir.is_dir():
        raise DataIoError(f"No hypergraph dumps next to {seed_dir} (base-encoder run?)")
    dump = hypergraph_dir / f"{user_id}.tsv"
    if not dump.is_file():
        raise UnknownUser(f"no hypergraph for user {user_id!r} in {hypergraph_dir}")

    d_f = int(manifest["d_f"])
    hypergraph = read_hypergraph_dump(dump, user_id)
    if manifest.get("text_edges"):
        hypergraph = _with_label_text(hypergraph, d_f)
    settings = ModelSettings(**manifest["settings"])
    mu = _read_bandwidths(seed_dir / BANDWIDTHS_FILE).get(user_id, 1.0)
    index = {item: position for position, item in enumerate(manifest["items"])}

    ctx = build_context(user_id, hypergraph, hypergraph.vertices, None, index, d_f=d_f, mu=mu)
    tape = structure_forward(structure_state(params, ctx, settings, with_loss=False))
    prototypes = tape.prototypes(ctx.edge_ids)
    rows = [
        EdgeRow(edge.edge_id, edge.angle, edge.label, edge.members, float(weight), float(lam), float(shift))
        for edge, weight, lam, shift in zip(hypergraph.edges, tape.w, prototypes.lam, prototypes.shifts)
    ]
    rows.sort(key=lambda row: (-row.weight, row.edge_id))

    weights_path = seed_dir / WEIGHTS_DIR / f"{user_id}.tsv"
    recorded = parse_weights(weights_path.read_text(encoding="utf-8")) if weights_path.is_file() else {}
    return UserInspection(
        user_id=user_id,
        angles=list(hypergraph.views),
        isolated=sorted(hypergraph.isolated),
        mu=mu,
        mean_lambda=mean_lambda(tape),
        rows=rows,
        recorded=recorded,
    )


def render_inspection(inspection: UserInspection) -> str:
    lines = [
        f"user {inspection.user_id}",
        f"angles: {', '.join(inspection.angles) or '-'}",
        f"bandwidth mu: {inspection.mu:.6g}    mean lambda: {inspection.mean_lambda:.4f}",
    ]
    if inspection.isolated:
        lines.append(f"isolated items: {','.join(inspection.isolated)}")
    lines.append("")
    lines.append(f"{'edge':<32} {'size':>4} {'w(e)':>10} {'lambda':>7} {'|p-p0|':>8}  items")
    for row in inspection.rows:
        lines.append(
            f"{row.edge_id:<32} {len(row.members):>4} {row.weight:>10.5f} {row.lam:>7.4f} {row.prototype_shift:>8.4f}  {','.join(row.members)}"
        )
    gap = inspection.max_weight_gap
    if gap is not None:
        lines.append("")
        lines.append(f"max |w - dumped w|: {gap:.3g}")
    return "\n".join(lines) + "\n"
