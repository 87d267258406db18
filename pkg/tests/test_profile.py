from __future__ import annotations

import json

import numpy as np
import pytest
import requests

from llmhg.errors import (
    DataIoError,
    EmptyHistory,
    FixtureMiss,
    InvalidConfig,
    InvalidUsage,
    LlmParseError,
    LlmUnavailable,
    ParseError,
)
from llmhg.event_bus import EVENT_BUS
from llmhg.profile import (
    AttributeProfiler,
    FixtureRecord,
    FixtureStore,
    HashEmbeddingProvider,
    HistoryItem,
    LiveClient,
    LlmProfiler,
    LlmReply,
    ModelPrice,
    PriceTable,
    PromptPurpose,
    PromptRequest,
    RecordingClient,
    ReplayClient,
    TokenUsage,
    account_cost,
    categorize_items,
    embed_label,
    extract_interest_angles,
    history_items,
    label_text_table,
    load_profiles,
    load_templates,
    normalize_angle,
    parse_angle_list,
    parse_categories,
    profile_users,
    save_profiles,
)
from llmhg.utils import CircuitBreaker, CircuitBreakerOpen, retry_call


class CannedClient:
    """Replies from a fixed list, repeating the last one."""

    def __init__(self, *texts: str) -> None:
        self.texts = list(texts)
        self.calls = 0

    def complete(self, request):
        text = self.texts[min(self.calls, len(self.texts) - 1)]
        self.calls += 1
        return LlmReply(text=text, prompt_tokens=10, completion_tokens=2)


def test_parse_angle_list_normalizes_and_caps():
    reply = "Here you go:\n1. **Genre**: the kind of film\n2) Director\n- genre\n3. era.\n"
    assert parse_angle_list(reply, 6) == ["genre", "director", "era"]
    assert parse_angle_list(reply, 2) == ["genre", "director"]
    assert parse_angle_list("no list here", 6) == []
    for raw in ("**Genre**: x", "  `Lead Actor`.", "Country - where"):
        assert normalize_angle(normalize_angle(raw)) == normalize_angle(raw)


def test_parse_categories_matches_titles_and_ids():
    items = [HistoryItem("m1", "Movie 1"), HistoryItem("m2", "Movie 2"), HistoryItem("m3", "Movie 3")]
    text = "Movie 1 -> Action, Thriller.\n- movie 2 -> comedy\nchatter\nMovie 9 -> noise"
    mapping, arrows = parse_categories(text, items)
    assert arrows == 3
    assert mapping == {"m1": ("action", "thriller"), "m2": ("comedy",), "m3": ("unknown",)}
    by_id, _ = parse_categories("m3 -> Drama", items)
    assert by_id["m3"] == ("drama",)


def test_templates_render_and_load(tmp_path, tiny_catalog):
    history = history_items(tiny_catalog, ["m1", "m3"])
    defaults = load_templates(None)
    rendered = defaults.render_angles(history, 4)
    assert rendered.startswith("LLMHG_ANGLES V1")
    assert "- Movie 1 (Action, era:80s)" in rendered
    assert "at most 4 angles" in rendered

    custom = tmp_path / "templates.txt"
    custom.write_text("[angles]\nList angles for {history} (max {max_angles})\n", encoding="utf-8")
    loaded = load_templates(custom)
    assert loaded.render_angles(history, 2).startswith("List angles for - Movie 1")
    assert loaded.categorize == defaults.categorize

    custom.write_text("[categorize]\n{missing}\n", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        load_templates(custom).render_categorize("genre", history)
    custom.write_text("[other]\nx\n", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        load_templates(custom)
    with pytest.raises(DataIoError):
        load_templates(tmp_path / "absent.txt")


def test_llm_profiler_two_steps(tiny_catalog, scripted_client_factory):
    client = scripted_client_factory(tiny_catalog)
    prices = PriceTable(default=ModelPrice(1.0, 2.0))
    profiler = LlmProfiler(client, model_id="test-model", price_table=prices)
    profile = profiler.profile("u1", history_items(tiny_catalog, ["m1", "m2", "m3"]))

    assert profile.angles.angles == ("genre", "era")
    genre, era = profile.assignments
    assert genre.labels == {"m1": ("action",), "m2": ("action",), "m3": ("comedy",)}
    assert era.labels["m3"] == ("90s",)
    assert genre.categories() == ["action", "comedy"]
    assert len(client.requests) == 3
    assert [usage.purpose for usage in profile.usages] == ["angle_extraction", "categorization", "categorization"]
    assert profile.usages[0].usd_cost == pytest.approx(120 * 1.0 / 1000 + 8 * 2.0 / 1000)


def test_llm_profiler_without_angles(tiny_catalog, scripted_client_factory):
    client = scripted_client_factory(tiny_catalog)
    profiler = LlmProfiler(client, model_id="test-model", use_angles=False)
    profile = profiler.profile("u2", history_items(tiny_catalog, ["m3", "m4"]))
    assert profile.angles.angles == ("category",)
    assert profile.assignments[0].labels == {"m3": ("comedy",), "m4": ("comedy",)}
    assert len(client.requests) == 1


def test_angle_extraction_retries_then_fails():
    history = [HistoryItem("a", "Alpha")]
    flaky = CannedClient("I would rather not", "1. mood")
    usages = []
    angles = extract_interest_angles(flaky, "u", history, model_id="m", retries=1, usages=usages)
    assert angles.angles == ("mood",)
    assert len(usages) == 2

    with pytest.raises(LlmParseError):
        extract_interest_angles(CannedClient("nothing useful"), "u", history, model_id="m", retries=2)
    with pytest.raises(EmptyHistory):
        extract_interest_angles(flaky, "u", [], model_id="m")


def test_categorization_needs_arrow_lines():
    history = [HistoryItem("a", "Alpha"), HistoryItem("b", "Beta")]
    client = CannedClient("Sorry.", "Alpha -> Calm")
    assignment = categorize_items(client, "u", "mood", history, model_id="m", retries=1)
    assert assignment.labels == {"a": ("calm",), "b": ("unknown",)}
    with pytest.raises(LlmParseError):
        categorize_items(CannedClient("Sorry."), "u", "mood", history, model_id="m", retries=0)


def test_attribute_profiler(tiny_catalog):
    history = history_items(tiny_catalog, ["m1", "m3", "m5"])
    profile = AttributeProfiler(tiny_catalog).profile("u", history)
    assert profile.angles.angles == ("genre", "era")
    assert profile.assignments[0].labels == {"m1": ("action",), "m3": ("comedy",), "m5": ("drama",)}
    assert profile.usages == ()

    flat = AttributeProfiler(tiny_catalog, use_angles=False).profile("u", history)
    assert flat.angles.angles == ("category",)
    assert flat.assignments[0].labels["m1"] == ("action", "80s")

    capped = AttributeProfiler(tiny_catalog, max_angles=1).profile("u", history)
    assert capped.angles.angles == ("genre",)


def test_record_then_replay(tmp_path, tiny_catalog, scripted_client_factory):
    path = tmp_path / "fixtures.jsonl"
    history = history_items(tiny_catalog, ["m1", "m4", "m6"])
    recorder = RecordingClient(scripted_client_factory(tiny_catalog), FixtureStore(path, create=True))
    recorded = LlmProfiler(recorder, model_id="test-model").profile("u1", history)
    assert EVENT_BUS.count("profile.fixture_recorded") == 3
    assert len(path.read_text(encoding="utf-8").splitlines()) == 3

    replayed = LlmProfiler(ReplayClient(FixtureStore(path)), model_id="test-model").profile("u1", history)
    assert replayed == recorded

    with pytest.raises(FixtureMiss):
        LlmProfiler(ReplayClient(FixtureStore(path)), model_id="other-model").profile("u1", history)


def test_fixture_store_edge_cases(tmp_path):
    with pytest.raises(DataIoError):
        FixtureStore(tmp_path / "absent.jsonl")

    path = tmp_path / "fx.jsonl"
    store = FixtureStore(path, create=True)
    for response in ("first", "second"):
        store.append(FixtureRecord("k", "categorization", "m", "prompt", response, 1, 1))
    reloaded = FixtureStore(path)
    assert len(reloaded) == 2 and "k" in reloaded
    assert [reloaded.lookup("k").response for _ in range(3)] == ["first", "second", "second"]
    assert reloaded.lookup("other") is None

    path.write_text('{"key": "k"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        FixtureStore(path)


def test_profiles_round_trip(tmp_path, tiny_catalog):
    profiler = AttributeProfiler(tiny_catalog)
    histories = {user: history_items(tiny_catalog, items) for user, items in {"u1": ["m1", "m2"], "u2": ["m5", "m6"]}.items()}
    profiles = profile_users(profiler, histories, workers=2)
    assert list(profiles) == ["u1", "u2"]
    assert EVENT_BUS.count("profile.user_profiled") == 2

    path = save_profiles(tmp_path / "profiles.jsonl", profiles)
    assert load_profiles(path) == profiles
    path.write_text("{not json}\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_profiles(path)


def test_account_cost():
    prices = PriceTable(prices={"big": ModelPrice(0.03, 0.06)}, default=ModelPrice(0.0015, 0.002))
    usages = [
        TokenUsage("a", "big", "angle_extraction", 1000, 500),
        TokenUsage("a", "small", "categorization", 2000, 1000),
        TokenUsage("b", "small", "categorization", 1000, 0),
    ]
    summary = account_cost(usages, prices)
    assert summary.by_user["a"] == pytest.approx(0.03 + 0.03 + 0.003 + 0.002)
    assert summary.by_user["b"] == pytest.approx(0.0015)
    assert summary.total_usd == pytest.approx(0.0665)
    assert summary.per_user_usd == pytest.approx(0.0665 / 2)
    with pytest.raises(InvalidUsage):
        account_cost([], prices)
    with pytest.raises(InvalidUsage):
        prices.cost("big", -1, 0)


def test_label_embeddings(tiny_catalog):
    provider = HashEmbeddingProvider(seed=0)
    first = embed_label(provider, "comedy", 16)
    assert first.dim == 16
    assert np.linalg.norm(first.vector) == pytest.approx(1.0)
    np.testing.assert_array_equal(first.vector, embed_label(HashEmbeddingProvider(seed=0), "comedy", 16).vector)
    assert not np.allclose(first.vector, embed_label(provider, "drama", 16).vector)
    with pytest.raises(InvalidConfig):
        embed_label(provider, "comedy", 1)
    with pytest.raises(ValueError):
        embed_label(provider, "", 8)

    catalog = tiny_catalog.restricted_to(["m1", "m2"])
    table = label_text_table(catalog, ("m1", "m2", "zz"), provider, 8)
    assert table.shape == (3, 8)
    assert np.all(table[2] == 0.0)
    expected = (embed_label(provider, "action", 8).vector + embed_label(provider, "era:80s", 8).vector) / 2
    np.testing.assert_allclose(table[0], expected)


class FakeResponse:
    def __init__(self, body):
        self._body = body

    def raise_for_status(self):
        return None

    def json(self):
        return self._body


class FakeSession:
    def __init__(self, body):
        self.body = body
        self.posted = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posted.append((url, json, headers))
        return FakeResponse(self.body)


def _live(session):
    return LiveClient(api_base="https://llm.example/v1/", api_key="secret", session=session)


def test_live_client_reads_completion_payload():
    session = FakeSession({"choices": [{"message": {"content": "1. genre"}}], "usage": {"prompt_tokens": 42, "completion_tokens": 3}})
    request = PromptRequest(PromptPurpose.ANGLE_EXTRACTION, "list angles", "u1", "gpt-test")
    reply = _live(session).complete(request)
    assert reply == LlmReply("1. genre", 42, 3)
    url, payload, headers = session.posted[0]
    assert url == "https://llm.example/v1/chat/completions"
    assert payload["model"] == "gpt-test" and payload["temperature"] == 0
    assert headers["Authorization"] == "Bearer secret"

    estimated = _live(FakeSession({"choices": [{"message": {"content": "one two three"}}]})).complete(request)
    assert estimated.prompt_tokens >= 1 and estimated.completion_tokens == 4

    with pytest.raises(LlmParseError):
        _live(FakeSession({"unexpected": True})).complete(request)


class DownSession:
    def __init__(self):
        self.posts = 0

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts += 1
        raise requests.ConnectionError("connection refused")


def test_live_client_wraps_transport_failures():
    session = DownSession()
    client = LiveClient(api_base="https://llm.example/v1", api_key="secret", retry_delay=0.0, session=session)
    request = PromptRequest(PromptPurpose.CATEGORIZATION, "categorize", "u9", "gpt-test")
    with pytest.raises(LlmUnavailable) as excinfo:
        client.complete(request)
    assert isinstance(excinfo.value.__cause__, requests.ConnectionError)
    assert session.posts == 3
    assert EVENT_BUS.count("llm.retry") == 2

    # three consecutive failures open the breaker, so no further post goes out
    with pytest.raises(LlmUnavailable) as excinfo:
        client.complete(request)
    assert isinstance(excinfo.value.__cause__, CircuitBreakerOpen)
    assert session.posts == 3
    assert LlmUnavailable.exit_code == 3


def test_retry_call_backs_off():
    delays = []
    outcomes = iter([ConnectionError("down"), ConnectionError("down"), "ok"])

    def flaky():
        outcome = next(outcomes)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome

    assert retry_call(flaky, attempts=3, delay=0.5, exceptions=(ConnectionError,), event="llm.retry", sleep=delays.append) == "ok"
    assert delays == [0.5, 1.0]
    assert EVENT_BUS.count("llm.retry") == 2

    def always_down():
        raise ConnectionError("down")

    with pytest.raises(ConnectionError):
        retry_call(always_down, attempts=2, delay=0.0, exceptions=(ConnectionError,))
    assert EVENT_BUS.count("llm.retry") == 2


def test_circuit_breaker_opens_then_cools_down():
    now = [100.0]
    breaker = CircuitBreaker("llm_endpoint", threshold=2, cooldown=30.0, clock=lambda: now[0])
    breaker.record_failure()
    breaker.allow()
    breaker.record_failure()
    with pytest.raises(CircuitBreakerOpen):
        breaker.allow()
    now[0] += 31.0
    breaker.allow()
    assert not breaker.is_open


def test_fixture_lines_are_json(tmp_path):
    path = tmp_path / "fx.jsonl"
    FixtureStore(path, create=True).append(FixtureRecord("k", "angle_extraction", "m", "p", "r", 3, 4))
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["prompt_tokens"] == 3 and payload["response"] == "r"
