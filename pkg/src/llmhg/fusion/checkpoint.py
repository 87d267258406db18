"""Binary checkpoint ``checkpoint.bin`` plus its shape manifest ``model.json``.

Layout: magic ``LHG1``, d_f (u32), n_items (u32), then every tensor of PARAM_ORDER as
row-major little-endian float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, Sequence, Tuple

import numpy as np

from llmhg.errors import DataIoError, ParseError
from llmhg.fusion.params import PARAM_ORDER, ModelParams
from llmhg.utils import write_bytes_atomic, write_text_atomic

MAGIC = b"LHG1"
HEADER = struct.Struct("<4sII")
CHECKPOINT_FILE = "checkpoint.bin"
MANIFEST_FILE = "model.json"


def checkpoint_bytes(params: ModelParams) -> bytes:
    chunks = [HEADER.pack(MAGIC, params.d_f, params.n_items)]
    for _, array in params.items():
        chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(chunks)


def _shapes(d_f: int, n_items: int, head_width: int, n_layers: int) -> Dict[str, Tuple[int, ...]]:
    return {
        "E": (n_items, d_f),
        "phi": (d_f, d_f),
        "gate_vector": (d_f,),
        "gate_bias": (1,),
        "cut_head": (d_f, head_width),
        "cut_bias": (head_width,),
        "theta": (n_layers, d_f, d_f),
        "fusion": (d_f, 2 * d_f),
        "fusion_bias": (d_f,),
        "decay_logit": (1,),
    }


def params_from_bytes(data: bytes, *, head_width: int, n_layers: int) -> ModelParams:
    if len(data) < HEADER.size:
        raise ParseError("checkpoint shorter than its header")
    magic, d_f, n_items = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad checkpoint magic {magic!r}")
    shapes = _shapes(d_f, n_items, head_width, n_layers)
    expected = HEADER.size + 8 * sum(int(np.prod(shapes[name])) for name in PARAM_ORDER)
    if len(data) != expected:
        raise ParseError(f"checkpoint is {len(data)} bytes, manifest implies {expected}")
    offset = HEADER.size
    tensors = {}
    for name in PARAM_ORDER:
        count = int(np.prod(shapes[name]))
        tensors[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shapes[name])
        offset += 8 * count
    return ModelParams(**tensors)


def write_checkpoint(directory: Path | str, params: ModelParams, item_order: Sequence[str], **extra: object) -> Path:
    target = Path(directory)
    manifest = {
        "d_f": params.d_f,
        "n_items": params.n_items,
        "head_width": params.head_width,
        "n_layers": params.n_layers,
        "param_order": list(PARAM_ORDER),
        "items": list(item_order),
        **extra,
    }
    write_bytes_atomic(target / CHECKPOINT_FILE, checkpoint_bytes(params))
    write_text_atomic(target / MANIFEST_FILE, json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")
    return target / CHECKPOINT_FILE


def read_checkpoint(directory: Path | str) -> Tuple[ModelParams, Dict[str, object]]:
    source = Path(directory)
    binary, manifest_path = source / CHECKPOINT_FILE, source / MANIFEST_FILE
    for path in (binary, manifest_path):
        if not path.is_file():
            raise DataIoError(f"Checkpoint file not found: {path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        head_width, n_layers = int(manifest["head_width"]), int(manifest["n_layers"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad model manifest ({exc})", path=str(manifest_path)) from exc
    params = params_from_bytes(binary.read_bytes(), head_width=head_width, n_layers=n_layers)
    if len(manifest.get("items", [])) != params.n_items:
        raise ParseError("manifest item order does not match the embedding table", path=str(manifest_path))
    return params, manifest
