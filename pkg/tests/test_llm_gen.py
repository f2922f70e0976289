import json
import threading
from collections import Counter

import httpx
import pytest

from styx.corpus import AgeGroup, GROUP_ORDER, derive_age_group, read_corpus_csv
from styx.errors import InputError, TransportError
from styx.llm_gen import (
    AuthError, GenRecord, GenSpec, LiveTransport, PROMPT_TEMPLATE,
    REPLAY_TIMESTAMP, ReplayMissError, ReplayTransport, ResponseCache,
    RetryExhaustedError, build_prompt, export_gen_corpus, generate,
    prompt_key, sample_profiles,
)

TOPICS = ["Student", "Arts", "Religion"]


class FakeTransport:
    """Offline transport that answers from the prompt text and counts calls."""

    def __init__(self):
        self.calls = []
        self._lock = threading.Lock()

    def complete(self, prompt, model, temperature):
        with self._lock:
            self.calls.append(prompt)
        return f"echo: {prompt[-30:]}"

    def timestamp(self):
        return "2004-01-01T00:00:00+00:00"


# ---------------------------------------------------------------------------
# prompts and keys
# ---------------------------------------------------------------------------

def test_build_prompt_golden():
    got = build_prompt(AgeGroup.OLD, 55, "Religion", 20)
    assert got == ("Write a blog snippet of at most 20 words as a 55-year-old "
                   "(old) writer on the topic: Religion.")
    got = build_prompt(AgeGroup.MIDDLE_AGED, 38, "Arts")
    assert "(middle-aged)" in got and "38-year-old" in got


def test_build_prompt_keeps_braces_literal():
    got = build_prompt(AgeGroup.YOUNG, 20, "{topic} and {format}")
    assert got.endswith("on the topic: {topic} and {format}.")


def test_build_prompt_age_band_mismatch():
    with pytest.raises(InputError, match="outside the young band"):
        build_prompt(AgeGroup.YOUNG, 55, "Arts")
    with pytest.raises(InputError, match="below the modeled range"):
        build_prompt(AgeGroup.YOUNG, 17, "Arts")


def test_prompt_template_is_stable():
    assert PROMPT_TEMPLATE == ("Write a blog snippet of at most {max_words} "
                               "words as a {age}-year-old ({label}) writer on "
                               "the topic: {topic}.")


def test_prompt_key_sensitivity():
    base = prompt_key("gpt-4", 1.0, "hello")
    assert base == prompt_key("gpt-4", 1.0, "hello")
    assert base == prompt_key("gpt-4", 1, "hello")        # same float value
    assert base != prompt_key("gpt-4", 0.7, "hello")
    assert base != prompt_key("gpt-3", 1.0, "hello")
    assert base != prompt_key("gpt-4", 1.0, "hello!")
    assert len(base) == 64 and int(base, 16) >= 0


# ---------------------------------------------------------------------------
# GenSpec and record validation
# ---------------------------------------------------------------------------

def test_genspec_validation():
    GenSpec(n_samples=1, topics=["T"])
    with pytest.raises(InputError, match="n_samples"):
        GenSpec(n_samples=0, topics=["T"])
    with pytest.raises(InputError, match="topic list is empty"):
        GenSpec(n_samples=1, topics=[])
    with pytest.raises(InputError, match="max_words"):
        GenSpec(n_samples=1, topics=["T"], max_words=0)
    with pytest.raises(InputError, match="max_age"):
        GenSpec(n_samples=1, topics=["T"], max_age=41)


def test_genrecord_band_check():
    with pytest.raises(InputError, match="does not fall in the old band"):
        GenRecord(sample_id="gpt-0", age=20, group=AgeGroup.OLD, topic="T",
                  prompt="p", text="t", model="m", timestamp="ts", cached=False)


def test_genrecord_equality_ignores_cached():
    kwargs = dict(sample_id="gpt-0", age=20, group=AgeGroup.YOUNG, topic="T",
                  prompt="p", text="t", model="m", timestamp="ts")
    assert GenRecord(cached=False, **kwargs) == GenRecord(cached=True, **kwargs)


# ---------------------------------------------------------------------------
# profile sampling
# ---------------------------------------------------------------------------

def test_sample_profiles_deterministic():
    spec = GenSpec(n_samples=50, topics=TOPICS, seed=9)
    assert sample_profiles(spec) == sample_profiles(spec)
    other = GenSpec(n_samples=50, topics=TOPICS, seed=10)
    assert sample_profiles(other) != sample_profiles(spec)


def test_sample_profiles_marginals_and_bands():
    spec = GenSpec(n_samples=3000, topics=TOPICS, seed=0, max_age=80)
    profiles = sample_profiles(spec)
    shares = Counter(p.group for p in profiles)
    for group in GROUP_ORDER:
        assert 0.28 <= shares[group] / 3000 <= 0.39, group
    bands = {AgeGroup.YOUNG: (18, 34), AgeGroup.MIDDLE_AGED: (35, 41),
             AgeGroup.OLD: (42, 80)}
    for p in profiles:
        lo, hi = bands[p.group]
        assert lo <= p.age <= hi
        assert derive_age_group(p.age) is p.group
        assert p.topic in TOPICS


def test_sample_profiles_respects_max_age():
    spec = GenSpec(n_samples=500, topics=["T"], seed=1, max_age=42)
    ages = [p.age for p in sample_profiles(spec) if p.group is AgeGroup.OLD]
    assert ages and set(ages) == {42}


# ---------------------------------------------------------------------------
# replay transport
# ---------------------------------------------------------------------------

def test_replay_transport_round_trip(tmp_path):
    prompt = build_prompt(AgeGroup.YOUNG, 20, "T")
    key = prompt_key("gpt-4", 1.0, prompt)
    log = tmp_path / "log.jsonl"
    log.write_text(json.dumps({"prompt_hash": key, "text": "hi"}) + "\n")
    transport = ReplayTransport(log)
    assert transport.complete(prompt, "gpt-4", 1.0) == "hi"
    assert transport.timestamp() == REPLAY_TIMESTAMP == "1970-01-01T00:00:00+00:00"


def test_replay_transport_miss(tmp_path):
    log = tmp_path / "log.jsonl"
    log.write_text("")
    with pytest.raises(ReplayMissError, match="no replayed response"):
        ReplayTransport(log).complete("p", "gpt-4", 1.0)


def test_generate_from_replay_fixture(fixtures_dir):
    spec = GenSpec(n_samples=6, topics=TOPICS, seed=42)
    transport = ReplayTransport(fixtures_dir / "replay_log.jsonl")
    records = generate(spec, transport)
    assert [r.sample_id for r in records] == [f"gpt-{i}" for i in range(6)]
    assert all(r.timestamp == REPLAY_TIMESTAMP for r in records)
    assert all(r.model == "gpt-4" for r in records)
    profiles = sample_profiles(spec)
    assert [(r.age, r.group, r.topic) for r in records] == \
           [(p.age, p.group, p.topic) for p in profiles]
    for r in records:
        assert r.text == (f"As a {r.group.label} voice I write about "
                          f"{r.topic.lower()} here.")
    # byte-determinism across runs
    again = generate(spec, ReplayTransport(fixtures_dir / "replay_log.jsonl"))
    assert again == records


# ---------------------------------------------------------------------------
# caching
# ---------------------------------------------------------------------------

def test_generate_dedupes_identical_prompts():
    spec = GenSpec(n_samples=60, topics=["T"], seed=0, max_age=42)
    transport = FakeTransport()
    records = generate(spec, transport, max_in_flight=1)
    unique_prompts = {r.prompt for r in records}
    assert len(transport.calls) == len(unique_prompts) < 60
    by_prompt = {}
    for r in records:
        by_prompt.setdefault(r.prompt, set()).add(r.text)
    assert all(len(texts) == 1 for texts in by_prompt.values())


def test_warm_cache_rerun_is_identical_with_zero_calls(tmp_path):
    spec = GenSpec(n_samples=12, topics=TOPICS, seed=3)
    cache = ResponseCache(tmp_path / "cache")
    cold_transport = FakeTransport()
    cold = generate(spec, cold_transport, cache=cache, max_in_flight=1)
    assert cold_transport.calls
    assert all(not r.cached for r in cold)

    warm_transport = FakeTransport()
    warm = generate(spec, warm_transport, cache=ResponseCache(tmp_path / "cache"),
                    max_in_flight=1)
    assert warm_transport.calls == []
    assert all(r.cached for r in warm)
    assert warm == cold


def test_cache_files_are_bare_digests(tmp_path):
    spec = GenSpec(n_samples=2, topics=["T"], seed=0)
    cache = ResponseCache(tmp_path / "cache")
    generate(spec, FakeTransport(), cache=cache, max_in_flight=1)
    names = [p.name for p in (tmp_path / "cache").iterdir()]
    assert names
    for name in names:
        assert len(name) == 64
        int(name, 16)   # hex digest, no extension


def test_cache_put_get_round_trip(tmp_path):
    cache = ResponseCache(tmp_path)
    assert cache.get("k" * 64) is None
    cache.put("k" * 64, "some text", "2004-01-01T00:00:00+00:00")
    assert cache.get("k" * 64) == {"text": "some text",
                                   "timestamp": "2004-01-01T00:00:00+00:00"}


# ---------------------------------------------------------------------------
# live transport retry behavior (fake HTTP client, no sockets)
# ---------------------------------------------------------------------------

class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("no body")
        return self._payload


class ScriptedClient:
    """Yields one scripted response (or exception) per post call."""

    def __init__(self, script):
        self.script = list(script)
        self.requests = []

    def post(self, url, json=None, headers=None):
        self.requests.append({"url": url, "json": json, "headers": headers})
        step = self.script.pop(0)
        if isinstance(step, Exception):
            raise step
        return step


def _ok(text="fine"):
    return FakeResponse(200, {"choices": [{"message": {"content": text}}]})


def _transport(script, **kwargs):
    sleeps = []
    client = ScriptedClient(script)
    transport = LiveTransport(api_key="test-key", sleep=sleeps.append,
                              client=client, **kwargs)
    return transport, client, sleeps


def test_live_transport_success_first_try():
    transport, client, sleeps = _transport([_ok("hello")])
    assert transport.complete("p", "gpt-4", 1.0) == "hello"
    assert sleeps == []
    req = client.requests[0]
    assert req["url"] == "https://api.openai.com/v1/chat/completions"
    assert req["headers"]["Authorization"] == "Bearer test-key"
    assert req["json"]["messages"] == [{"role": "user", "content": "p"}]
    assert req["json"]["model"] == "gpt-4"


def test_live_transport_retries_with_exponential_backoff():
    transport, client, sleeps = _transport(
        [FakeResponse(500), FakeResponse(503), _ok("eventually")])
    assert transport.complete("p", "gpt-4", 1.0) == "eventually"
    assert sleeps == [1.0, 2.0]
    assert len(client.requests) == 3


def test_live_transport_retries_network_errors():
    transport, _, sleeps = _transport(
        [httpx.ConnectError("boom"), _ok("ok")])
    assert transport.complete("p", "gpt-4", 1.0) == "ok"
    assert sleeps == [1.0]


def test_live_transport_exhausts_retries():
    transport, client, sleeps = _transport([FakeResponse(429)] * 5)
    with pytest.raises(RetryExhaustedError, match="after 5 attempts"):
        transport.complete("p", "gpt-4", 1.0)
    assert sleeps == [1.0, 2.0, 4.0, 8.0]
    assert len(client.requests) == 5


def test_live_transport_auth_failure_is_not_retried():
    transport, client, sleeps = _transport([FakeResponse(401)])
    with pytest.raises(AuthError, match="authentication failed"):
        transport.complete("p", "gpt-4", 1.0)
    assert sleeps == [] and len(client.requests) == 1


def test_live_transport_unexpected_status_is_fatal():
    transport, _, _ = _transport([FakeResponse(418, text="teapot")])
    with pytest.raises(TransportError, match="unexpected HTTP 418"):
        transport.complete("p", "gpt-4", 1.0)


def test_live_transport_malformed_body_is_fatal():
    transport, _, _ = _transport([FakeResponse(200, {"weird": True})])
    with pytest.raises(TransportError, match="malformed response body"):
        transport.complete("p", "gpt-4", 1.0)


def test_live_transport_requires_api_key(monkeypatch):
    monkeypatch.delenv("STYX_API_KEY", raising=False)
    with pytest.raises(AuthError, match="no API key"):
        LiveTransport()
    monkeypatch.setenv("STYX_API_KEY", "from-env")
    transport = LiveTransport(client=ScriptedClient([]))
    assert transport._headers["Authorization"] == "Bearer from-env"


def test_generate_uses_thread_pool_for_live_transports():
    spec = GenSpec(n_samples=40, topics=TOPICS, seed=5)
    transport = FakeTransport()
    records = generate(spec, transport, max_in_flight=4)
    # results stay aligned with the profile order despite concurrency
    profiles = sample_profiles(spec)
    assert [(r.age, r.topic) for r in records] == \
           [(p.age, p.topic) for p in profiles]
    assert all(r.text.startswith("echo: ") for r in records)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_export_round_trips_through_corpus_reader(tmp_path):
    records = [
        GenRecord(sample_id="gpt-0", age=25, group=AgeGroup.YOUNG,
                  topic="Arts, mostly", prompt="p0",
                  text='quoted "text", with\nnewline', model="gpt-4",
                  timestamp=REPLAY_TIMESTAMP, cached=False),
        GenRecord(sample_id="gpt-1", age=50, group=AgeGroup.OLD, topic="T",
                  prompt="p1", text="plain", model="gpt-4",
                  timestamp=REPLAY_TIMESTAMP, cached=True),
    ]
    path = tmp_path / "generated.csv"
    export_gen_corpus(records, path)
    res = read_corpus_csv(path)
    assert res.rows_read == 2 and not res.rejects
    assert [r.author_id for r in res.records] == ["gpt-0", "gpt-1"]
    assert res.records[0].text == 'quoted "text", with\nnewline'
    assert res.records[0].age == 25
    assert res.records[0].topic == "Arts, mostly"
    assert res.records[1].date == REPLAY_TIMESTAMP
    assert derive_age_group(res.records[1].age) is AgeGroup.OLD


def test_export_empty_records_is_header_only(tmp_path):
    path = tmp_path / "generated.csv"
    export_gen_corpus([], path)
    assert path.read_text() == "id,gender,age,topic,sign,date,text\n"
