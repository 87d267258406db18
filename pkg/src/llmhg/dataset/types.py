from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from llmhg.errors import InternalInvariantViolation

MIN_SEQUENCE_LENGTH = 3


@dataclass(frozen=True)
class Interaction:
    user_id: str
    item_id: str
    timestamp: int

    def __post_init__(self) -> None:
        if not self.user_id or not self.item_id:
            raise ValueError("user_id and item_id must be nonempty")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class ItemCatalog:
    """Item attributes. ``kind:value`` attributes name their own angle, bare ones use ``default_angle``."""

    attributes: Mapping[str, Tuple[str, ...]]
    titles: Mapping[str, str] = field(default_factory=dict)
    default_angle: str = "genre"

    def __contains__(self, item_id: object) -> bool:
        return item_id in self.attributes

    def __len__(self) -> int:
        return len(self.attributes)

    def attributes_of(self, item_id: str) -> Tuple[str, ...]:
        return tuple(self.attributes.get(item_id, ()))

    def title_of(self, item_id: str) -> str:
        return self.titles.get(item_id) or item_id

    def restricted_to(self, item_ids: List[str]) -> "ItemCatalog":
        keep = set(item_ids)
        return ItemCatalog(
            attributes={item: tuple(self.attributes.get(item, ())) for item in sorted(keep)},
            titles={item: title for item, title in self.titles.items() if item in keep},
            default_angle=self.default_angle,
        )


@dataclass(frozen=True)
class InteractionDataset:
    sequences: Mapping[str, Tuple[str, ...]]
    catalog: ItemCatalog

    @property
    def n_users(self) -> int:
        return len(self.sequences)

    @property
    def n_items(self) -> int:
        return len(self.catalog)

    @property
    def n_actions(self) -> int:
        return sum(len(sequence) for sequence in self.sequences.values())

    @property
    def users(self) -> List[str]:
        return list(self.sequences.keys())

    @property
    def items(self) -> List[str]:
        return sorted(self.catalog.attributes.keys())

    def item_index(self) -> Dict[str, int]:
        return {item: position for position, item in enumerate(self.items)}


@dataclass(frozen=True)
class UserSplit:
    train: Tuple[str, ...]
    valid: str
    test: str

    @property
    def history(self) -> Tuple[str, ...]:
        """Everything before the test item: what profiling and the test-phase hypergraph see."""
        return self.train + (self.valid,)

    def reassemble(self) -> Tuple[str, ...]:
        return self.train + (self.valid, self.test)


@dataclass(frozen=True)
class SplitDataset:
    users: Mapping[str, UserSplit]
    catalog: ItemCatalog
    item_order: Tuple[str, ...]

    def __post_init__(self) -> None:
        for user_id, split in self.users.items():
            if not split.train:
                raise InternalInvariantViolation(f"user {user_id} has an empty train prefix")

    @property
    def n_items(self) -> int:
        return len(self.item_order)

    def item_index(self) -> Dict[str, int]:
        return {item: position for position, item in enumerate(self.item_order)}

    def get(self, user_id: str) -> Optional[UserSplit]:
        return self.users.get(user_id)
