from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

from llmhg.dataset.types import ItemCatalog
from llmhg.errors import DataIoError, EmptyHistory, LlmParseError, ParseError
from llmhg.event_bus import EVENT_BUS
from llmhg.profile.clients import LlmClient
from llmhg.profile.cost import PriceTable, priced_usage
from llmhg.profile.parsing import normalize_angle, normalize_label, parse_angle_list, parse_categories
from llmhg.profile.templates import PromptTemplates
from llmhg.profile.types import (
    UNKNOWN,
    CategoryAssignment,
    HistoryItem,
    InterestAngleSet,
    PromptPurpose,
    PromptRequest,
    TokenUsage,
    UserProfile,
)
from llmhg.utils import write_text_atomic

logger = logging.getLogger(__name__)

GENERIC_ANGLE = "category"


def _ask(
    client: LlmClient,
    request: PromptRequest,
    price_table: PriceTable,
    usages: Optional[List[TokenUsage]],
) -> str:
    reply = client.complete(request)
    if usages is not None:
        usages.append(
            priced_usage(
                price_table,
                user_id=request.user_id,
                model_id=request.model_id,
                purpose=request.purpose.value,
                prompt_tokens=reply.prompt_tokens,
                completion_tokens=reply.completion_tokens,
            )
        )
    return reply.text


def extract_interest_angles(
    client: LlmClient,
    user_id: str,
    history: Sequence[HistoryItem],
    *,
    model_id: str,
    templates: PromptTemplates = PromptTemplates(),
    max_angles: int = 6,
    retries: int = 2,
    price_table: Optional[PriceTable] = None,
    usages: Optional[List[TokenUsage]] = None,
) -> InterestAngleSet:
    """Ask for the user's interest angles; the same prompt is retried ``retries`` times."""
    if not history:
        raise EmptyHistory(f"user {user_id} has no history to profile")
    request = PromptRequest(
        purpose=PromptPurpose.ANGLE_EXTRACTION,
        rendered_text=templates.render_angles(history, max_angles),
        user_id=user_id,
        model_id=model_id,
    )
    prices = price_table or PriceTable()
    for attempt in range(retries + 1):
        angles = parse_angle_list(_ask(client, request, prices, usages), max_angles)
        if angles:
            return InterestAngleSet(user_id=user_id, angles=tuple(angles))
        logger.info("no angle list in reply for %s (attempt %d)", user_id, attempt + 1)
    raise LlmParseError(f"angle extraction for user {user_id} unparseable after {retries + 1} attempts")


def categorize_items(
    client: LlmClient,
    user_id: str,
    angle: str,
    items: Sequence[HistoryItem],
    *,
    model_id: str,
    templates: PromptTemplates = PromptTemplates(),
    retries: int = 2,
    price_table: Optional[PriceTable] = None,
    usages: Optional[List[TokenUsage]] = None,
) -> CategoryAssignment:
    if not items:
        raise EmptyHistory(f"nothing to categorize for user {user_id}")
    request = PromptRequest(
        purpose=PromptPurpose.CATEGORIZATION,
        rendered_text=templates.render_categorize(angle, items),
        user_id=user_id,
        model_id=model_id,
        angle=angle,
    )
    prices = price_table or PriceTable()
    for attempt in range(retries + 1):
        mapping, arrows = parse_categories(_ask(client, request, prices, usages), items)
        if arrows:
            return CategoryAssignment(angle=angle, labels=mapping)
        logger.info("no item -> label lines for %s/%s (attempt %d)", user_id, angle, attempt + 1)
    raise LlmParseError(f"categorization of {angle!r} for user {user_id} unparseable after {retries + 1} attempts")


class Profiler(Protocol):
    def profile(self, user_id: str, history: Sequence[HistoryItem]) -> UserProfile:
        ...


class LlmProfiler:
    """Two-step profiling: angle extraction, then one categorization request per angle."""

    def __init__(
        self,
        client: LlmClient,
        *,
        model_id: str,
        templates: PromptTemplates = PromptTemplates(),
        max_angles: int = 6,
        retries: int = 2,
        price_table: Optional[PriceTable] = None,
        use_angles: bool = True,
    ) -> None:
        self.client = client
        self.model_id = model_id
        self.templates = templates
        self.max_angles = max_angles
        self.retries = retries
        self.price_table = price_table or PriceTable()
        self.use_angles = use_angles

    def profile(self, user_id: str, history: Sequence[HistoryItem]) -> UserProfile:
        usages: List[TokenUsage] = []
        common = dict(model_id=self.model_id, templates=self.templates, retries=self.retries, price_table=self.price_table, usages=usages)
        if self.use_angles:
            angle_set = extract_interest_angles(self.client, user_id, history, max_angles=self.max_angles, **common)
        else:
            if not history:
                raise EmptyHistory(f"user {user_id} has no history to profile")
            angle_set = InterestAngleSet(user_id=user_id, angles=(GENERIC_ANGLE,))
        assignments = tuple(categorize_items(self.client, user_id, angle, history, **common) for angle in angle_set.angles)
        return UserProfile(user_id=user_id, angles=angle_set, assignments=assignments, usages=tuple(usages))


class AttributeProfiler:
    """Synthetic profiling from catalog attributes, no LLM involved.

    ``kind:value`` attributes become angle ``kind`` with category ``value``; bare
    attributes fall under the catalog's default angle. Angles follow first appearance in
    the history.
    """

    def __init__(self, catalog: ItemCatalog, *, max_angles: int = 6, use_angles: bool = True) -> None:
        self.catalog = catalog
        self.max_angles = max_angles
        self.use_angles = use_angles

    def _split(self, attribute: str) -> Tuple[str, str]:
        if ":" in attribute:
            kind, value = attribute.split(":", 1)
            return normalize_angle(kind), normalize_label(value)
        return normalize_angle(self.catalog.default_angle), normalize_label(attribute)

    def profile(self, user_id: str, history: Sequence[HistoryItem]) -> UserProfile:
        if not history:
            raise EmptyHistory(f"user {user_id} has no history to profile")
        grouped: Dict[str, Dict[str, List[str]]] = {}
        for item in history:
            for attribute in item.attributes:
                angle, label = self._split(attribute)
                if not self.use_angles:
                    angle = GENERIC_ANGLE
                if not angle or not label:
                    continue
                labels = grouped.setdefault(angle, {}).setdefault(item.item_id, [])
                if label not in labels:
                    labels.append(label)
        angles = list(grouped)[: self.max_angles]
        if not angles:
            angles = [GENERIC_ANGLE if not self.use_angles else normalize_angle(self.catalog.default_angle)]
        assignments = tuple(
            CategoryAssignment(
                angle=angle,
                labels={item.item_id: tuple(grouped.get(angle, {}).get(item.item_id) or [UNKNOWN]) for item in history},
            )
            for angle in angles
        )
        return UserProfile(user_id=user_id, angles=InterestAngleSet(user_id=user_id, angles=tuple(angles)), assignments=assignments)


def history_items(catalog: ItemCatalog, sequence: Sequence[str]) -> List[HistoryItem]:
    return [HistoryItem(item_id=item, title=catalog.title_of(item), attributes=catalog.attributes_of(item)) for item in sequence]


def profile_users(
    profiler: Profiler,
    histories: Mapping[str, Sequence[HistoryItem]],
    *,
    workers: int = 1,
) -> Dict[str, UserProfile]:
    """Profile every user; results come back in input order whatever ``workers`` is."""
    users = list(histories)

    def _one(user_id: str) -> UserProfile:
        profile = profiler.profile(user_id, histories[user_id])
        EVENT_BUS.emit("profile.user_profiled", {"user": user_id, "angles": list(profile.angles.angles)})
        return profile

    if workers <= 1:
        results = [_one(user) for user in users]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, users))
    return dict(zip(users, results))


def save_profiles(path: Path | str, profiles: Mapping[str, UserProfile]) -> Path:
    lines = [json.dumps(profile.to_dict(), ensure_ascii=False) for profile in profiles.values()]
    return write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


def load_profiles(path: Path | str) -> Dict[str, UserProfile]:
    source = Path(path)
    if not source.is_file():
        raise DataIoError(f"Profile file not found: {source}")
    profiles: Dict[str, UserProfile] = {}
    for number, line in enumerate(source.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            profile = UserProfile.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad profile record ({exc})", line_number=number, path=str(source)) from exc
        profiles[profile.user_id] = profile
    return profiles
