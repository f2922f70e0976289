"""Synthetic blog-snippet generation through a chat-completion endpoint.

Everything that touches the network lives behind a transport object so the
rest of the pipeline (prompt building, caching, corpus export) stays
deterministic and testable offline. The replay transport serves recorded
responses keyed by prompt hash; tests and offline runs never open a socket.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

from .corpus import GROUP_ORDER, AgeGroup, derive_age_group
from .errors import InputError, TransportError

PROMPT_TEMPLATE = ("Write a blog snippet of at most {max_words} words as a "
                   "{age}-year-old ({label}) writer on the topic: {topic}.")

# All replayed and cached responses carry this timestamp so reruns are
# byte-identical regardless of wall clock.
REPLAY_TIMESTAMP = "1970-01-01T00:00:00+00:00"

DEFAULT_BASE_URL = "https://api.openai.com/v1"


class AuthError(TransportError):
    """Credentials rejected; retrying cannot help."""


class RetryExhaustedError(TransportError):
    """All retry attempts failed."""


class ReplayMissError(TransportError):
    """Replay log has no response for the requested prompt."""


def build_prompt(group: AgeGroup, age: int, topic: str, max_words: int = 20) -> str:
    if age < 18:
        raise InputError(f"age {age} is below the modeled range")
    if derive_age_group(age) is not group:
        raise InputError(f"age {age} is outside the {group.value} band")
    return PROMPT_TEMPLATE.format(max_words=max_words, age=age,
                                  label=group.label, topic=topic)


def prompt_key(model: str, temperature: float, prompt: str) -> str:
    """Cache key: model, temperature, and prompt joined on a separator that
    cannot appear in any of them, hashed. repr() keeps 0.7 != 0.70000001."""
    joined = "\x1f".join([model, repr(float(temperature)), prompt])
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenSpec:
    n_samples: int
    topics: Sequence[str]
    seed: int = 42
    model: str = "gpt-4"
    temperature: float = 1.0
    max_words: int = 20
    max_age: int = 80

    def __post_init__(self):
        if self.n_samples < 1:
            raise InputError("n_samples must be at least 1")
        if not self.topics:
            raise InputError("topic list is empty")
        if self.max_words < 1:
            raise InputError("max_words must be at least 1")
        if self.max_age < 42:
            raise InputError("max_age must cover the oldest band start (42)")


@dataclass(frozen=True)
class GenRecord:
    sample_id: str
    age: int
    group: AgeGroup
    topic: str
    prompt: str
    text: str
    model: str
    timestamp: str
    # provenance only: a warm-cache rerun yields records equal to a cold run
    cached: bool = field(compare=False)

    def __post_init__(self):
        if derive_age_group(self.age) is not self.group:
            raise InputError(f"record {self.sample_id}: age {self.age} does not "
                             f"fall in the {self.group.value} band")


class ReplayTransport:
    """Serves responses from a JSONL log of {prompt_hash, text} rows.
    A prompt absent from the log is a hard error, not a silent skip."""

    def __init__(self, log_path):
        self.responses: dict[str, str] = {}
        with open(log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                self.responses[row["prompt_hash"]] = row["text"]

    def complete(self, prompt: str, model: str, temperature: float) -> str:
        key = prompt_key(model, temperature, prompt)
        try:
            return self.responses[key]
        except KeyError:
            raise ReplayMissError(f"no replayed response for prompt hash {key}") from None

    def timestamp(self) -> str:
        return REPLAY_TIMESTAMP


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class LiveTransport:
    """Real HTTP transport. Retries transient failures with exponential
    backoff; auth failures abort immediately."""

    def __init__(self, base_url: str = DEFAULT_BASE_URL, api_key: Optional[str] = None,
                 max_attempts: int = 5, backoff_base: float = 1.0,
                 backoff_factor: float = 2.0,
                 sleep: Optional[Callable[[float], None]] = None,
                 client=None):
        import httpx
        key = api_key if api_key is not None else os.environ.get("STYX_API_KEY", "")
        if not key:
            raise AuthError("no API key: pass api_key or set STYX_API_KEY")
        self.base_url = base_url.rstrip("/")
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._sleep = sleep if sleep is not None else time.sleep
        self._headers = {"Authorization": f"Bearer {key}"}
        self._client = client if client is not None else httpx.Client(timeout=30.0)

    def complete(self, prompt: str, model: str, temperature: float) -> str:
        import httpx
        body = {"model": model, "temperature": temperature,
                "messages": [{"role": "user", "content": prompt}]}
        delay = self.backoff_base
        last = "no attempts made"
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(delay)
                delay *= self.backoff_factor
            try:
                resp = self._client.post(f"{self.base_url}/chat/completions",
                                         json=body, headers=self._headers)
            except httpx.HTTPError as exc:
                last = f"network error: {exc}"
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"authentication failed (HTTP {resp.status_code})")
            if resp.status_code in _RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected HTTP {resp.status_code}: "
                                     f"{resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise TransportError(f"malformed response body: {exc}") from exc
        raise RetryExhaustedError(
            f"gave up after {self.max_attempts} attempts (last: {last})")

    def timestamp(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ResponseCache:
    """File-per-key response cache. Writes go through a temp file and an
    atomic rename so a crashed run never leaves a torn entry."""

    def __init__(self, cache_dir):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        # Filename is the hex digest itself; contents are a small JSON doc.
        return self.dir / key

    def get(self, key: str) -> Optional[dict]:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, key: str, text: str, timestamp: str) -> None:
        path = self._path(key)
        tmp = path.with_name(f"{path.name}.tmp.{os.getpid()}")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"text": text, "timestamp": timestamp}, fh)
        os.replace(tmp, path)


@dataclass(frozen=True)
class _Profile:
    age: int
    group: AgeGroup
    topic: str


def sample_profiles(spec: GenSpec) -> list[_Profile]:
    """Seed-deterministic author profiles: group uniform over the three bands,
    age uniform inside the band, topic uniform over the configured list."""
    rng = random.Random(spec.seed)
    bands = {AgeGroup.YOUNG: (18, 34), AgeGroup.MIDDLE_AGED: (35, 41),
             AgeGroup.OLD: (42, spec.max_age)}
    out = []
    for _ in range(spec.n_samples):
        group = GROUP_ORDER[rng.randrange(len(GROUP_ORDER))]
        lo, hi = bands[group]
        out.append(_Profile(age=rng.randint(lo, hi), group=group,
                            topic=spec.topics[rng.randrange(len(spec.topics))]))
    return out


def generate(spec: GenSpec, transport, cache: Optional[ResponseCache] = None,
             max_in_flight: int = 4) -> list[GenRecord]:
    """Generate one snippet per sampled profile.

    Identical prompts collapse to a single request. Cache hits reuse the
    stored text and timestamp, so a warm rerun returns identical records.
    Concurrency applies to live transports only; replay stays sequential.
    """
    profiles = sample_profiles(spec)
    prompts = [build_prompt(p.group, p.age, p.topic, spec.max_words)
               for p in profiles]
    keys = [prompt_key(spec.model, spec.temperature, p) for p in prompts]
    results: dict[str, dict] = {}
    to_fetch: list[tuple[str, str]] = []
    seen = set()
    for key, prompt in zip(keys, prompts):
        if key in seen:
            continue
        seen.add(key)
        hit = cache.get(key) if cache is not None else None
        if hit is not None:
            results[key] = {**hit, "cached": True}
        else:
            to_fetch.append((key, prompt))

    def fetch(item):
        key, prompt = item
        text = transport.complete(prompt, spec.model, spec.temperature)
        return key, text

    if isinstance(transport, ReplayTransport) or max_in_flight <= 1 or len(to_fetch) <= 1:
        fetched = [fetch(item) for item in to_fetch]
    else:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            fetched = list(pool.map(fetch, to_fetch))
    for key, text in fetched:
        stamp = transport.timestamp()
        if cache is not None:
            cache.put(key, text, stamp)
        results[key] = {"text": text, "timestamp": stamp, "cached": False}

    records = []
    for i, (profile, prompt, key) in enumerate(zip(profiles, prompts, keys)):
        got = results[key]
        records.append(GenRecord(sample_id=f"gpt-{i}", age=profile.age,
                                 group=profile.group, topic=profile.topic,
                                 prompt=prompt, text=got["text"],
                                 model=spec.model, timestamp=got["timestamp"],
                                 cached=got["cached"]))
    return records


def export_gen_corpus(records: Sequence[GenRecord], path) -> None:
    """Write generated records in the same CSV shape the ingest step reads."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "gender", "age", "topic", "sign", "date", "text"])
        for rec in records:
            writer.writerow([rec.sample_id, "", rec.age, rec.topic, "",
                             rec.timestamp, rec.text])
