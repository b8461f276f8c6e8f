"""Generation backends: live HTTP, content-addressed cache, deterministic replay.

Every live generation is written through to an append-only lines-of-json
store keyed by a hash of (model, messages, temperature, sample_index).
Replay mode serves exclusively from that store, which makes whole pipeline
runs reproducible offline.
"""

import hashlib
import json
import os
import tempfile
import threading
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import requests

from prove.errors import (
    BackendUnreachable,
    CacheConflict,
    HttpStatusError,
    ReplayMiss,
)

ROLES = ("system", "user", "assistant")
API_KEY_ENV = "PROVE_API_KEY"
DEFAULT_MAX_TOKENS = 1024
RETRYABLE_STATUSES = (429, 500, 502, 503, 504)


def canonical_messages(messages) -> tuple:
    out = []
    for m in messages:
        if isinstance(m, dict):
            role, content = m["role"], m["content"]
        else:
            role, content = m
        if role not in ROLES:
            raise ValueError(f"unknown message role {role!r}")
        out.append((role, str(content)))
    return tuple(out)


@dataclass(frozen=True)
class GenerationRequest:
    model: str
    messages: tuple
    temperature: float = 0.7
    sample_index: int = 0
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        object.__setattr__(self, "messages", canonical_messages(self.messages))
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def with_index(self, sample_index: int) -> "GenerationRequest":
        return replace(self, sample_index=sample_index)

    @property
    def cache_key(self) -> str:
        # max_tokens deliberately excluded: it shapes truncation, not identity.
        payload = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "sample_index": self.sample_index,
        }
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                           ensure_ascii=False)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GenerationRecord:
    key: str
    text: str
    backend_id: str
    created_at: str


class CacheStore:
    """Write-once record store; optionally persisted as lines of JSON."""

    def __init__(self, path: Optional[Path] = None):
        self._path = Path(path) if path is not None else None
        self._records = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self):
        with self._path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                record = GenerationRecord(
                    key=obj["key"], text=obj["text"],
                    backend_id=obj.get("backend_id", "unknown"),
                    created_at=obj.get("created_at", ""),
                )
                existing = self._records.get(record.key)
                if existing is not None and existing.text != record.text:
                    raise CacheConflict(record.key)
                self._records.setdefault(record.key, record)

    def __len__(self):
        return len(self._records)

    def get(self, key: str) -> Optional[GenerationRecord]:
        with self._lock:
            return self._records.get(key)

    def put(self, record: GenerationRecord) -> GenerationRecord:
        with self._lock:
            existing = self._records.get(record.key)
            if existing is not None:
                if existing.text != record.text:
                    raise CacheConflict(record.key)
                return existing
            self._records[record.key] = record
            if self._path is not None:
                self._flush()
            return record

    def _flush(self):
        # Full rewrite through a temp file so readers never see a torn line.
        lines = [
            json.dumps({"key": r.key, "text": r.text, "backend_id": r.backend_id,
                        "created_at": r.created_at}, ensure_ascii=False)
            for r in self._records.values()
        ]
        self._path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self._path.parent, prefix=".cache-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + ("\n" if lines else ""))
            os.replace(tmp, self._path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class HttpBackend:
    """OpenAI-compatible chat-completions client with bounded retries."""

    def __init__(self, base_url: str, timeout: float = 120.0, retries: int = 2,
                 backoff: float = 0.5, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()
        self.backend_id = f"live:{self.base_url}"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(API_KEY_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, request: GenerationRequest) -> str:
        url = f"{self.base_url}/v1/chat/completions"
        body = {
            "model": request.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._session.post(url, json=body,
                                              headers=self._headers(),
                                              timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = BackendUnreachable(f"{url}: {exc}")
                continue
            if response.status_code in RETRYABLE_STATUSES:
                last_error = HttpStatusError(response.status_code,
                                             response.text[:200])
                continue
            if response.status_code != 200:
                raise HttpStatusError(response.status_code, response.text[:200])
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise HttpStatusError(200, f"malformed response body: {exc}") from exc
        raise last_error


class Gateway:
    """Cache-first generation with bounded parallel sampling.

    backend=None is replay mode: every request must already be cached.
    """

    def __init__(self, cache: CacheStore, backend=None, parallelism: int = 4):
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        self.cache = cache
        self.backend = backend
        self.parallelism = parallelism
        self._slots = threading.Semaphore(parallelism)

    def generate(self, request: GenerationRequest) -> str:
        key = request.cache_key
        hit = self.cache.get(key)
        if hit is not None:
            return hit.text
        if self.backend is None:
            raise ReplayMiss(key)
        with self._slots:
            text = self.backend.complete(request)
        created = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return self.cache.put(GenerationRecord(
            key=key, text=text, backend_id=self.backend.backend_id,
            created_at=created,
        )).text

    def sample_n(self, base: GenerationRequest, n: int) -> list:
        if n < 1:
            raise ValueError("n must be >= 1")
        if n == 1:
            return [self.generate(base.with_index(0))]
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            futures = {i: pool.submit(self.generate, base.with_index(i))
                       for i in range(n)}
            wait(futures.values(), return_when=FIRST_EXCEPTION)
            failed = sorted(i for i, f in futures.items()
                            if f.done() and not f.cancelled() and f.exception())
            if failed:
                for f in futures.values():
                    f.cancel()
                raise futures[failed[0]].exception()
            return [futures[i].result() for i in range(n)]
