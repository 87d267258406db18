from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping

from llmhg.errors import InvalidUsage
from llmhg.profile.types import TokenUsage


@dataclass(frozen=True)
class ModelPrice:
    usd_per_1k_prompt: float
    usd_per_1k_completion: float


@dataclass
class PriceTable:
    prices: Dict[str, ModelPrice] = field(default_factory=dict)
    default: ModelPrice = field(default_factory=lambda: ModelPrice(0.0, 0.0))

    def price_of(self, model_id: str) -> ModelPrice:
        return self.prices.get(model_id, self.default)

    def cost(self, model_id: str, prompt_tokens: int, completion_tokens: int) -> float:
        if prompt_tokens < 0 or completion_tokens < 0:
            raise InvalidUsage(f"negative token count ({prompt_tokens}, {completion_tokens})")
        price = self.price_of(model_id)
        return prompt_tokens * price.usd_per_1k_prompt / 1000.0 + completion_tokens * price.usd_per_1k_completion / 1000.0


@dataclass(frozen=True)
class CostSummary:
    total_usd: float
    per_user_usd: float
    n_users: int
    by_user: Mapping[str, float]


def account_cost(usages: Iterable[TokenUsage], price_table: PriceTable) -> CostSummary:
    """Total spend and mean spend per profiled user, recomputed from token counts."""
    by_user: Dict[str, float] = {}
    seen = False
    for usage in usages:
        seen = True
        amount = price_table.cost(usage.model_id, usage.prompt_tokens, usage.completion_tokens)
        by_user[usage.user_id] = by_user.get(usage.user_id, 0.0) + amount
    if not seen:
        raise InvalidUsage("no usage records to account")
    total = sum(by_user[user] for user in sorted(by_user))
    return CostSummary(total_usd=total, per_user_usd=total / len(by_user), n_users=len(by_user), by_user=by_user)


def priced_usage(price_table: PriceTable, *, user_id: str, model_id: str, purpose: str, prompt_tokens: int, completion_tokens: int) -> TokenUsage:
    return TokenUsage(
        user_id=user_id,
        model_id=model_id,
        purpose=purpose,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
        usd_cost=price_table.cost(model_id, prompt_tokens, completion_tokens),
    )
