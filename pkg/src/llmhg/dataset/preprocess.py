from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

from llmhg.dataset.types import MIN_SEQUENCE_LENGTH, InteractionDataset, SplitDataset, UserSplit
from llmhg.errors import EmptyDataset, InternalInvariantViolation, InvalidConfig


@dataclass(frozen=True)
class CorpusStats:
    n_users: int
    n_items: int
    n_actions: int
    avg_length: float
    sparsity: float

    def as_table(self, name: str = "dataset") -> str:
        rows = [
            ("# Users", f"{self.n_users:,}"),
            ("# Items", f"{self.n_items:,}"),
            ("# Avg.Length", f"{self.avg_length:.1f}"),
            ("# Actions", f"{self.n_actions:,}"),
            ("Sparsity", f"{100.0 * self.sparsity:.2f}%"),
        ]
        width = max(len(label) for label, _ in rows)
        lines = [f"{'Specs.':<{width}}  {name}"]
        lines += [f"{label:<{width}}  {value}" for label, value in rows]
        return "\n".join(lines)


def truncate_sequences(dataset: InteractionDataset, l_tru: int) -> InteractionDataset:
    """Keep each user's last ``min(len, l_tru)`` interactions."""
    if l_tru < MIN_SEQUENCE_LENGTH:
        raise InvalidConfig(f"l_tru must be >= {MIN_SEQUENCE_LENGTH}, got {l_tru}")
    sequences = {user: tuple(sequence[-l_tru:]) for user, sequence in dataset.sequences.items()}
    # le catalogue reste entier : le classement se fait sur tous les items
    return InteractionDataset(sequences=sequences, catalog=dataset.catalog)


def leave_one_out(dataset: InteractionDataset) -> SplitDataset:
    users: Dict[str, UserSplit] = {}
    for user_id, sequence in dataset.sequences.items():
        if len(sequence) < MIN_SEQUENCE_LENGTH:
            raise InternalInvariantViolation(
                f"user {user_id} has {len(sequence)} interactions; preprocessing should keep >= {MIN_SEQUENCE_LENGTH}"
            )
        users[user_id] = UserSplit(train=tuple(sequence[:-2]), valid=sequence[-2], test=sequence[-1])
    return SplitDataset(users=users, catalog=dataset.catalog, item_order=tuple(dataset.items))


def corpus_stats(dataset: InteractionDataset) -> CorpusStats:
    return stats_from_counts(dataset.n_users, dataset.n_items, dataset.n_actions)


def stats_from_counts(n_users: int, n_items: int, n_actions: int) -> CorpusStats:
    if n_users <= 0 or n_items <= 0:
        raise EmptyDataset("statistics need at least one user and one item")
    return CorpusStats(
        n_users=n_users,
        n_items=n_items,
        n_actions=n_actions,
        avg_length=n_actions / n_users,
        sparsity=1.0 - n_actions / (n_users * n_items),
    )
