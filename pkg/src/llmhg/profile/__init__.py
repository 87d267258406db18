"""All LLM access: angle extraction, categorization, record/replay, label embeddings, cost."""

from .clients import LiveClient, LlmClient, RecordingClient, ReplayClient, request_key
from .cost import CostSummary, ModelPrice, PriceTable, account_cost, priced_usage
from .embeddings import HashEmbeddingProvider, embed_label, label_text_table
from .fixtures import FixtureRecord, FixtureStore, fixture_key
from .parsing import normalize_angle, normalize_label, parse_angle_list, parse_categories, render_categories
from .profiler import (
    AttributeProfiler,
    LlmProfiler,
    categorize_items,
    extract_interest_angles,
    history_items,
    load_profiles,
    profile_users,
    save_profiles,
)
from .templates import PromptTemplates, load_templates
from .types import (
    UNKNOWN,
    CategoryAssignment,
    HistoryItem,
    InterestAngleSet,
    LlmReply,
    PromptPurpose,
    PromptRequest,
    TextEmbedding,
    TokenUsage,
    UserProfile,
)

__all__ = [
    "UNKNOWN",
    "AttributeProfiler",
    "CategoryAssignment",
    "CostSummary",
    "FixtureRecord",
    "FixtureStore",
    "HashEmbeddingProvider",
    "HistoryItem",
    "InterestAngleSet",
    "LiveClient",
    "LlmClient",
    "LlmProfiler",
    "LlmReply",
    "ModelPrice",
    "PriceTable",
    "PromptPurpose",
    "PromptRequest",
    "PromptTemplates",
    "RecordingClient",
    "ReplayClient",
    "TextEmbedding",
    "TokenUsage",
    "UserProfile",
    "account_cost",
    "categorize_items",
    "embed_label",
    "extract_interest_angles",
    "fixture_key",
    "history_items",
    "label_text_table",
    "load_profiles",
    "load_templates",
    "normalize_angle",
    "normalize_label",
    "parse_angle_list",
    "parse_categories",
    "priced_usage",
    "profile_users",
    "render_categories",
    "request_key",
    "save_profiles",
]
