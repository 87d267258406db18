from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

UNKNOWN = "unknown"


class PromptPurpose(str, enum.Enum):
    ANGLE_EXTRACTION = "angle_extraction"
    CATEGORIZATION = "categorization"


@dataclass(frozen=True)
class HistoryItem:
    item_id: str
    title: str
    attributes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class PromptRequest:
    purpose: PromptPurpose
    rendered_text: str
    user_id: str
    model_id: str
    angle: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.rendered_text.strip():
            raise ValueError("rendered prompt is empty")


@dataclass(frozen=True)
class LlmReply:
    text: str
    prompt_tokens: int
    completion_tokens: int


@dataclass(frozen=True)
class TokenUsage:
    user_id: str
    model_id: str
    purpose: str
    prompt_tokens: int
    completion_tokens: int
    usd_cost: float = 0.0


@dataclass(frozen=True)
class InterestAngleSet:
    user_id: str
    angles: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.angles:
            raise ValueError("an interest angle set needs at least one angle")
        if len(set(self.angles)) != len(self.angles) or any(not angle for angle in self.angles):
            raise ValueError(f"angles must be unique and nonempty: {self.angles}")


@dataclass(frozen=True)
class CategoryAssignment:
    angle: str
    labels: Mapping[str, Tuple[str, ...]]

    def categories(self) -> List[str]:
        return sorted({label for labels in self.labels.values() for label in labels if label != UNKNOWN})


@dataclass(frozen=True)
class TextEmbedding:
    label: str
    vector: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    angles: InterestAngleSet
    assignments: Tuple[CategoryAssignment, ...]
    usages: Tuple[TokenUsage, ...] = ()

    def to_dict(self) -> Dict[str, object]:
        return {
            "user": self.user_id,
            "angles": list(self.angles.angles),
            "assignments": {
                assignment.angle: {item: list(labels) for item, labels in assignment.labels.items()}
                for assignment in self.assignments
            },
            "usage": [
                {
                    "model_id": usage.model_id,
                    "purpose": usage.purpose,
                    "prompt_tokens": usage.prompt_tokens,
                    "completion_tokens": usage.completion_tokens,
                    "usd_cost": usage.usd_cost,
                }
                for usage in self.usages
            ],
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, object]) -> "UserProfile":
        user_id = str(payload["user"])
        raw_assignments = payload.get("assignments") or {}
        assignments = tuple(
            CategoryAssignment(
                angle=str(angle),
                labels={str(item): tuple(str(label) for label in labels) for item, labels in dict(items).items()},
            )
            for angle, items in dict(raw_assignments).items()
        )
        usages = tuple(
            TokenUsage(
                user_id=user_id,
                model_id=str(entry.get("model_id", "")),
                purpose=str(entry.get("purpose", "")),
                prompt_tokens=int(entry.get("prompt_tokens", 0)),
                completion_tokens=int(entry.get("completion_tokens", 0)),
                usd_cost=float(entry.get("usd_cost", 0.0)),
            )
            for entry in list(payload.get("usage") or [])
        )
        return cls(
            user_id=user_id,
            angles=InterestAngleSet(user_id=user_id, angles=tuple(str(a) for a in payload["angles"])),
            assignments=assignments,
            usages=usages,
        )
