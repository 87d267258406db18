from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from llmhg.errors import DataIoError, InvalidConfig

DATASET_FORMATS = ("movielens", "amazon", "dump", "planted")
LLM_MODES = ("live", "record", "replay", "synthetic")
HYPERGRAPH_KINDS = ("llm", "transition", "contextual", "intent", "none", "llm-augment")
ABLATIONS = ("none", "no_angles", "no_intra", "no_inter", "no_procor", "no_sl")
MU_POLICIES = ("median", "fixed")
ACTIVATIONS = ("relu", "none")

API_BASE_ENV = "LLMHG_API_BASE"
API_KEY_ENV = "LLMHG_API_KEY"
STORE_PATH_ENV = "LLMHG_STORE_PATH"


@dataclass
class RunConfig:
    dataset_format: str = "planted"
    ratings_path: Optional[str] = None
    movies_path: Optional[str] = None
    interactions_path: Optional[str] = None
    metadata_path: Optional[str] = None
    dump_dir: Optional[str] = None
    planted_users: int = 500
    planted_items: int = 200
    planted_clusters: int = 8
    planted_seed: int = 7
    l_tru: int = 20

    llm_mode: str = "synthetic"
    model_id: str = "gpt-3.5-turbo"
    fixture_path: Optional[str] = None
    templates_path: Optional[str] = None
    max_angles: int = 6
    llm_retries: int = 2
    llm_workers: int = 4
    llm_timeout: float = 60.0
    usd_per_1k_prompt: float = 0.0015
    usd_per_1k_completion: float = 0.002
    # model_id:usd_per_1k_prompt:usd_per_1k_completion, overriding the two prices above for that model
    model_prices: Tuple[str, ...] = ()

    d_f: int = 64
    beta: float = 0.7
    # L_pre averages over 1 + negatives candidates
    alpha: float = 100.0
    mu_policy: str = "median"
    mu: float = 1.0
    negatives: int = 100
    epochs: int = 100
    learning_rate: float = 0.05
    weight_refresh_every: int = 1
    conv_layers: int = 1
    conv_activation: str = "relu"
    patience: int = 10
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    hypergraph: str = "llm"
    text_augment: bool = False
    context_windows: Tuple[int, ...] = (2, 3)
    intent_count: int = 4
    intent_top_n: int = 3
    ablation: str = "none"
    eval_workers: int = 1
    output_dir: str = "runs"

    @property
    def effective_beta(self) -> float:
        if self.ablation == "no_intra":
            return 0.0
        if self.ablation == "no_inter":
            return 1.0
        return self.beta

    def price_overrides(self) -> Dict[str, Tuple[float, float]]:
        prices: Dict[str, Tuple[float, float]] = {}
        for entry in self.model_prices:
            model_id, sep, rest = entry.rpartition(":")
            model_id, sep2, prompt = model_id.rpartition(":")
            if not (sep and sep2 and model_id):
                raise InvalidConfig(f"model price must be model_id:prompt:completion, got {entry!r}")
            try:
                pair = (float(prompt), float(rest))
            except ValueError as exc:
                raise InvalidConfig(f"model price for {model_id!r} is not numeric: {entry!r}") from exc
            if min(pair) < 0:
                raise InvalidConfig(f"model price for {model_id!r} must be >= 0")
            prices[model_id] = pair
        return prices

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def replace(self, **changes: object) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_lines(self) -> List[str]:
        lines = []
        for spec in fields(self):
            value = getattr(self, spec.name)
            if value is None:
                continue
            lines.append(f"{spec.name}={_render(value)}")
        return lines

    def validate(self) -> "RunConfig":
        _choice("dataset_format", self.dataset_format, DATASET_FORMATS)
        _choice("llm_mode", self.llm_mode, LLM_MODES)
        _choice("hypergraph", self.hypergraph, HYPERGRAPH_KINDS)
        _choice("ablation", self.ablation, ABLATIONS)
        _choice("mu_policy", self.mu_policy, MU_POLICIES)
        _choice("conv_activation", self.conv_activation, ACTIVATIONS)
        if self.l_tru < 3:
            raise InvalidConfig(f"l_tru must be >= 3, got {self.l_tru}")
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidConfig(f"beta must lie in [0, 1], got {self.beta}")
        if self.alpha < 0:
            raise InvalidConfig(f"alpha must be >= 0, got {self.alpha}")
        if self.mu <= 0:
            raise InvalidConfig(f"mu must be > 0, got {self.mu}")
        if self.learning_rate <= 0:
            raise InvalidConfig("learning_rate must be > 0")
        for name in ("epochs", "weight_refresh_every", "negatives", "conv_layers", "max_angles", "llm_workers", "eval_workers", "intent_count"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if self.d_f < 2:
            raise InvalidConfig(f"d_f must be >= 2, got {self.d_f}")
        if self.intent_top_n < 2:
            raise InvalidConfig("intent_top_n must be >= 2")
        if self.llm_retries < 0 or self.patience < 0:
            raise InvalidConfig("llm_retries and patience must be >= 0")
        if not self.seeds:
            raise InvalidConfig("at least one seed is required")
        if any(window < 2 for window in self.context_windows):
            raise InvalidConfig("context windows must be >= 2")
        if self.usd_per_1k_prompt < 0 or self.usd_per_1k_completion < 0:
            raise InvalidConfig("prices must be >= 0")
        self.price_overrides()
        if self.llm_mode == "replay":
            if not self.fixture_path or not Path(self.fixture_path).exists():
                raise InvalidConfig(f"replay mode requires an existing fixture file (fixture_path={self.fixture_path})")
        if self.llm_mode in ("record",) and not self.fixture_path:
            raise InvalidConfig("record mode requires fixture_path")
        if self.dataset_format == "movielens" and not (self.ratings_path and self.movies_path):
            raise InvalidConfig("movielens format needs ratings_path and movies_path")
        if self.dataset_format == "amazon" and not self.interactions_path:
            raise InvalidConfig("amazon format needs interactions_path")
        if self.dataset_format == "dump" and not self.dump_dir:
            raise InvalidConfig("dump format needs dump_dir")
        return self


def _choice(name: str, value: str, allowed: Iterable[str]) -> None:
    if value not in allowed:
        raise InvalidConfig(f"{name}={value!r} not in {sorted(allowed)}")


def _render(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


_FIELD_TYPES = {spec.name: spec.type for spec in fields(RunConfig)}


def _coerce(name: str, raw: str) -> object:
    kind = _FIELD_TYPES[name]
    text = raw.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
        if kind.startswith("Tuple[int"):
            return tuple(int(part) for part in text.split(",") if part.strip())
        if kind.startswith("Tuple[str"):
            return tuple(part.strip() for part in text.split(",") if part.strip())
        if kind.startswith("Optional"):
            return text or None
    except ValueError as exc:
        raise InvalidConfig(f"{name}: cannot parse {raw!r}") from exc
    return text


def apply_overrides(config: RunConfig, assignments: Iterable[str]) -> RunConfig:
    changes: Dict[str, object] = {}
    for assignment in assignments:
        if "=" not in assignment:
            raise InvalidConfig(f"override must be key=value, got {assignment!r}")
        key, value = assignment.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise InvalidConfig(f"unknown config key {key!r}")
        changes[key] = _coerce(key, value)
    return dataclasses.replace(config, **changes)


def load_config(path: Optional[Path | str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read a flat ``key=value`` file (``#`` comments), then apply command-line overrides."""
    config = RunConfig()
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise DataIoError(f"Config file not found: {config_path}")
        assignments: List[str] = []
        for number, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise InvalidConfig(f"{config_path}:{number}: expected key=value")
            assignments.append(stripped)
        config = apply_overrides(config, assignments)
    config = apply_overrides(config, overrides)
    return config.validate()


def api_credentials() -> Tuple[str, str]:
    base = os.environ.get(API_BASE_ENV, "").strip()
    key = os.environ.get(API_KEY_ENV, "").strip()
    if not base or not key:
        raise InvalidConfig(f"live mode requires {API_BASE_ENV} and {API_KEY_ENV}")
    return base.rstrip("/"), key


def store_path(config: RunConfig) -> Path:
    return Path(os.environ.get(STORE_PATH_ENV, str(config.output_path / "runs.db")))


def parse_grid(assignments: Iterable[str]) -> Dict[str, List[object]]:
    """``key=v1,v2,...`` axes for sensitivity sweeps; only scalar keys can be swept."""
    grid: Dict[str, List[object]] = {}
    for assignment in assignments:
        if "=" not in assignment:
            raise InvalidConfig(f"grid axis must be key=v1,v2,..., got {assignment!r}")
        key, values = assignment.split("=", 1)
        key = key.strip()
        kind = _FIELD_TYPES.get(key)
        if kind is None or kind.startswith("Tuple"):
            raise InvalidConfig(f"cannot sweep config key {key!r}")
        grid[key] = [_coerce(key, value) for value in values.split(",") if value.strip()]
        if not grid[key]:
            raise InvalidConfig(f"grid axis {key!r} has no values")
    return grid
