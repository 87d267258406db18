"""Ingest, profile and build stages, shared by every command."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np

from llmhg.config import RunConfig, api_credentials
from llmhg.dataset import (
    CorpusStats,
    InteractionDataset,
    SplitDataset,
    corpus_stats,
    leave_one_out,
    parse_amazon_csv,
    parse_movielens,
    planted_corpus,
    read_dump,
    truncate_sequences,
    write_dump,
)
from llmhg.errors import DegenerateHypergraph
from llmhg.hypergraph import (
    MultiViewHypergraph,
    assemble,
    contextual_hyperedges,
    edgeless,
    intent_hyperedges,
    intent_prototypes,
    transition_hyperedges,
    write_hypergraph_dump,
)
from llmhg.profile import (
    AttributeProfiler,
    CostSummary,
    FixtureStore,
    HashEmbeddingProvider,
    LiveClient,
    LlmClient,
    LlmProfiler,
    ModelPrice,
    PriceTable,
    RecordingClient,
    ReplayClient,
    TextEmbedding,
    TokenUsage,
    UserProfile,
    account_cost,
    embed_label,
    history_items,
    label_text_table,
    load_profiles,
    load_templates,
    profile_users,
    save_profiles,
)
from llmhg.profile.profiler import Profiler
from llmhg.utils import write_text_atomic

logger = logging.getLogger(__name__)

DATASET_DIR = "dataset"
PROFILE_DIR = "profile"
PROFILES_FILE = "profiles.jsonl"
PROFILE_META_FILE = "meta.json"
HYPERGRAPH_DIR = "hypergraphs"
TEXT_EDGE_KINDS = ("llm",)

# a single provider keeps label vectors identical across commands
EMBEDDINGS = HashEmbeddingProvider(seed=0)


def load_dataset(config: RunConfig) -> InteractionDataset:
    if config.dataset_format == "movielens":
        return parse_movielens(config.ratings_path, config.movies_path)
    if config.dataset_format == "amazon":
        return parse_amazon_csv(config.interactions_path, config.metadata_path)
    if config.dataset_format == "dump":
        return read_dump(config.dump_dir)
    return planted_corpus(
        n_users=config.planted_users,
        n_items=config.planted_items,
        n_clusters=config.planted_clusters,
        seed=config.planted_seed,
    )


def prepare_split(config: RunConfig, dataset: Optional[InteractionDataset] = None) -> SplitDataset:
    dataset = dataset if dataset is not None else load_dataset(config)
    return leave_one_out(truncate_sequences(dataset, config.l_tru))


def price_table(config: RunConfig) -> PriceTable:
    """Per-model prices from ``model_prices``; any other model pays the two global prices."""
    prices = {model_id: ModelPrice(*pair) for model_id, pair in config.price_overrides().items()}
    return PriceTable(prices=prices, default=ModelPrice(config.usd_per_1k_prompt, config.usd_per_1k_completion))


def make_client(config: RunConfig) -> LlmClient:
    if config.llm_mode == "replay":
        return ReplayClient(FixtureStore(config.fixture_path))
    base, key = api_credentials()
    live = LiveClient(api_base=base, api_key=key, timeout=config.llm_timeout, max_in_flight=config.llm_workers)
    if config.llm_mode == "record":
        return RecordingClient(live, FixtureStore(config.fixture_path, create=True))
    return live


def make_profiler(config: RunConfig, split: SplitDataset, client: Optional[LlmClient] = None) -> Profiler:
    use_angles = config.ablation != "no_angles"
    if config.llm_mode == "synthetic":
        return AttributeProfiler(split.catalog, max_angles=config.max_angles, use_angles=use_angles)
    return LlmProfiler(
        client or make_client(config),
        model_id=config.model_id,
        templates=load_templates(config.templates_path),
        max_angles=config.max_angles,
        retries=config.llm_retries,
        price_table=price_table(config),
        use_angles=use_angles,
    )


def profile_split(config: RunConfig, split: SplitDataset, *, client: Optional[LlmClient] = None) -> Dict[str, UserProfile]:
    """Profile every user's history (train + validation item, never the test item)."""
    profiler = make_profiler(config, split, client)
    histories = {user: history_items(split.catalog, user_split.history) for user, user_split in split.users.items()}
    workers = 1 if config.llm_mode == "synthetic" else config.llm_workers
    return profile_users(profiler, histories, workers=workers)


def _profile_signature(config: RunConfig) -> Dict[str, object]:
    return {
        "dataset_format": config.dataset_format,
        "sources": [config.ratings_path, config.movies_path, config.interactions_path, config.metadata_path, config.dump_dir],
        "planted": [config.planted_users, config.planted_items, config.planted_clusters, config.planted_seed],
        "l_tru": config.l_tru,
        "llm_mode": config.llm_mode,
        "model_id": config.model_id,
        "fixture_path": config.fixture_path,
        "templates": [config.templates_path, _file_digest(config.templates_path)],
        "llm_retries": config.llm_retries,
        "max_angles": config.max_angles,
        "use_angles": config.ablation != "no_angles",
    }


def _file_digest(path: Optional[str]) -> Optional[str]:
    if not path or not Path(path).is_file():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def profile_dir(config: RunConfig) -> Path:
    return config.output_path / PROFILE_DIR


def load_or_profile(config: RunConfig, split: SplitDataset, *, client: Optional[LlmClient] = None) -> Dict[str, UserProfile]:
    """Reuse ``<output>/profile`` when it was produced under the same settings."""
    directory = profile_dir(config)
    profiles_path, meta_path = directory / PROFILES_FILE, directory / PROFILE_META_FILE
    signature = _profile_signature(config)
    if profiles_path.is_file() and meta_path.is_file():
        try:
            cached = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            cached = None
        if cached == signature:
            profiles = load_profiles(profiles_path)
            if set(profiles) == set(split.users):
                logger.info("reusing %d profiles from %s", len(profiles), profiles_path)
                return profiles
    profiles = profile_split(config, split, client=client)
    save_profiles(profiles_path, profiles)
    write_text_atomic(meta_path, json.dumps(signature, indent=2) + "\n")
    return profiles


def profile_usages(profiles: Mapping[str, UserProfile]) -> List[TokenUsage]:
    return [usage for profile in profiles.values() for usage in profile.usages]


def label_embeddings(labels: Iterable[str], d_f: int) -> Dict[str, TextEmbedding]:
    return {label: embed_label(EMBEDDINGS, label, d_f) for label in sorted(set(labels))}


def llm_hypergraph(user_id: str, history: Iterable[str], profile: UserProfile, d_f: int) -> MultiViewHypergraph:
    labels = [label for assignment in profile.assignments for label in assignment.categories()]
    return assemble(user_id, list(history), profile.angles.angles, profile.assignments, label_embeddings(labels, d_f))


def item_text_table(split: SplitDataset, d_f: int) -> np.ndarray:
    return label_text_table(split.catalog, split.item_order, EMBEDDINGS, d_f)


def build_hypergraphs(
    config: RunConfig,
    split: SplitDataset,
    profiles: Optional[Mapping[str, UserProfile]] = None,
) -> Dict[str, MultiViewHypergraph]:
    """One hypergraph per user over the full history; empty for the base-encoder-only kinds."""
    kind = config.hypergraph
    if kind in ("none", "llm-augment"):
        return {}
    if kind == "llm" and profiles is None:
        raise ValueError("the llm hypergraph needs user profiles")
    table = prototypes = None
    index = split.item_index()
    if kind == "intent":
        table = item_text_table(split, config.d_f)
        prototypes = intent_prototypes(table, config.intent_count, seed=0)

    hypergraphs: Dict[str, MultiViewHypergraph] = {}
    for user_id, user_split in split.users.items():
        history = list(user_split.history)
        try:
            if kind == "llm":
                hypergraph = llm_hypergraph(user_id, history, profiles[user_id], config.d_f)
            elif kind == "transition":
                hypergraph = transition_hyperedges(history, user_id)
            elif kind == "contextual":
                hypergraph = contextual_hyperedges(history, config.context_windows, user_id)
            else:
                rows = table[[index[item] for item in history]]
                hypergraph = intent_hyperedges(history, rows, prototypes, config.intent_top_n, user_id)
        except DegenerateHypergraph as exc:
            logger.warning("user %s: %s; continuing with isolated vertices", user_id, exc)
            hypergraph = edgeless(user_id, history)
        hypergraphs[user_id] = hypergraph
    return hypergraphs


def write_hypergraphs(directory: Path, hypergraphs: Mapping[str, MultiViewHypergraph]) -> Path:
    for user_id, hypergraph in hypergraphs.items():
        write_hypergraph_dump(hypergraph, directory / f"{user_id}.tsv")
    return directory


@dataclass(frozen=True)
class IngestResult:
    dataset: InteractionDataset
    stats: CorpusStats
    dump_dir: Optional[Path]


def ingest(config: RunConfig, *, stats_only: bool = False) -> IngestResult:
    """Load and truncate the corpus; unless ``stats_only``, write the canonical dump."""
    dataset = truncate_sequences(load_dataset(config), config.l_tru)
    stats = corpus_stats(dataset)
    target = None
    if not stats_only:
        target = config.output_path / DATASET_DIR
        write_dump(dataset, target)
        logger.info("dataset dump written to %s", target)
    return IngestResult(dataset=dataset, stats=stats, dump_dir=target)


@dataclass(frozen=True)
class ProfileResult:
    profiles: Dict[str, UserProfile]
    hypergraphs: Dict[str, MultiViewHypergraph]
    directory: Path
    cost: Optional[CostSummary]


def per_user_cost(config: RunConfig, profiles: Mapping[str, UserProfile]) -> Optional[CostSummary]:
    usages = profile_usages(profiles)
    if not usages:
        return None
    return account_cost(usages, price_table(config))


def run_profile(config: RunConfig, *, client: Optional[LlmClient] = None) -> ProfileResult:
    """Profile every user, then dump one hypergraph per user under ``<output>/profile/hypergraphs``."""
    split = prepare_split(config)
    profiles = load_or_profile(config, split, client=client)
    hypergraphs = build_hypergraphs(config.replace(hypergraph="llm"), split, profiles)
    directory = write_hypergraphs(profile_dir(config) / HYPERGRAPH_DIR, hypergraphs)
    return ProfileResult(profiles=profiles, hypergraphs=hypergraphs, directory=directory, cost=per_user_cost(config, profiles))
