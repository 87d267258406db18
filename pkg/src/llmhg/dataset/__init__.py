"""Interaction ingestion, preprocessing and leave-one-out splitting."""

from .dump import read_dump, write_dump
from .parsers import parse_amazon_csv, parse_movielens, preprocess_interactions
from .preprocess import CorpusStats, corpus_stats, leave_one_out, stats_from_counts, truncate_sequences
from .synthetic import planted_corpus
from .types import Interaction, InteractionDataset, ItemCatalog, SplitDataset, UserSplit

__all__ = [
    "CorpusStats",
    "Interaction",
    "InteractionDataset",
    "ItemCatalog",
    "SplitDataset",
    "UserSplit",
    "corpus_stats",
    "leave_one_out",
    "parse_amazon_csv",
    "parse_movielens",
    "planted_corpus",
    "preprocess_interactions",
    "read_dump",
    "stats_from_counts",
    "truncate_sequences",
    "write_dump",
]
