from __future__ import annotations

import re
import socket
from typing import Dict, List

import pytest
import requests

from llmhg.config import RunConfig
from llmhg.dataset import InteractionDataset, ItemCatalog, planted_corpus
from llmhg.event_bus import EVENT_BUS
from llmhg.profile import LlmReply, PromptPurpose, PromptRequest

TINY_ATTRIBUTES = {
    "m1": ("Action", "era:80s"),
    "m2": ("Action", "era:90s"),
    "m3": ("Comedy", "era:90s"),
    "m4": ("Comedy", "era:80s"),
    "m5": ("Drama", "era:00s"),
    "m6": ("Action", "Drama", "era:00s"),
}
TINY_TITLES = {item: f"Movie {item[1:]}" for item in TINY_ATTRIBUTES}


@pytest.fixture(autouse=True)
def network_guard(monkeypatch):
    """Any attempt to open a connection fails the test."""

    def _refuse(*args, **kwargs):
        raise AssertionError("network access attempted during tests")

    monkeypatch.setattr(socket.socket, "connect", _refuse)
    monkeypatch.setattr(requests.Session, "request", _refuse)


@pytest.fixture(autouse=True)
def clean_bus():
    EVENT_BUS.reset()
    yield
    EVENT_BUS.reset()


@pytest.fixture
def tiny_catalog() -> ItemCatalog:
    return ItemCatalog(attributes=dict(TINY_ATTRIBUTES), titles=dict(TINY_TITLES), default_angle="genre")


@pytest.fixture
def tiny_dataset(tiny_catalog) -> InteractionDataset:
    sequences = {
        "u1": ("m1", "m2", "m3", "m4", "m5"),
        "u2": ("m3", "m4", "m6", "m1"),
        "u3": ("m5", "m6", "m2"),
    }
    return InteractionDataset(sequences=sequences, catalog=tiny_catalog)


@pytest.fixture
def planted_factory():
    def _make(**overrides):
        params = dict(n_users=40, n_items=48, n_clusters=4, min_length=6, max_length=10, seed=3)
        params.update(overrides)
        return planted_corpus(**params)

    return _make


def small_config(tmp_path, **changes) -> RunConfig:
    """Planted corpus and model sizes that train in a few seconds."""
    base = RunConfig(
        planted_users=24,
        planted_items=36,
        planted_clusters=3,
        l_tru=8,
        d_f=8,
        negatives=4,
        epochs=3,
        patience=2,
        alpha=1.0,
        learning_rate=0.05,
        seeds=(1,),
        output_dir=str(tmp_path / "runs"),
    )
    return base.replace(**changes).validate()


class ScriptedClient:
    """Answers angle and categorization prompts from catalog attributes, like a well-behaved LLM."""

    def __init__(self, catalog: ItemCatalog, angles: str = "1. genre\n2. era") -> None:
        self.catalog = catalog
        self.angles = angles
        self.requests: List[PromptRequest] = []
        self._by_title: Dict[str, str] = {catalog.title_of(item).lower(): item for item in catalog.attributes}

    def complete(self, request: PromptRequest) -> LlmReply:
        self.requests.append(request)
        if request.purpose is PromptPurpose.ANGLE_EXTRACTION:
            return LlmReply(text=self.angles, prompt_tokens=120, completion_tokens=8)
        lines = []
        for match in re.finditer(r"^- (.+)$", request.rendered_text, flags=re.MULTILINE):
            title = match.group(1).strip()
            item = self._by_title.get(title.lower())
            labels = self._labels(item, request.angle or "") if item else []
            lines.append(f"{title} -> {', '.join(labels) or 'unknown'}")
        return LlmReply(text="\n".join(lines), prompt_tokens=200, completion_tokens=10 * len(lines))

    def _labels(self, item: str, angle: str) -> List[str]:
        labels = []
        for attribute in self.catalog.attributes_of(item):
            if ":" in attribute:
                kind, value = attribute.split(":", 1)
                if kind == angle:
                    labels.append(value)
            elif angle in (self.catalog.default_angle, "category"):
                labels.append(attribute)
        return labels


@pytest.fixture
def scripted_client_factory():
    return ScriptedClient


@pytest.fixture
def make_config(tmp_path):
    def _make(**changes) -> RunConfig:
        return small_config(tmp_path, **changes)

    return _make
