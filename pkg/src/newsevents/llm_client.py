"""Minimal remote-provider client for embeddings and chat completions.

Wire shape matches the common provider API: POST {base_url}/embeddings with
{model, input: [...]} returning {data: [{embedding, index}]}, and POST
{base_url}/completions with {model, prompt, max_tokens, temperature}
returning {choices: [{text}]}. The API key is read from the environment
variable named in the config, never from config files.

mode="mock" never touches the network: embeddings are unit vectors drawn
from PCG64 seeded with the 64-bit SHA-256 content hash of (model_id, text),
and completions return "MOCK(" + first 8 hex digits of the prompt's SHA-256
+ ")". Mock vectors are deterministic across platforms but carry no
semantics; quality-sensitive tests use the TF-IDF or word-vector backends.
"""
from __future__ import annotations

import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .util import content_hash64, new_rng

# transport(url, payload, headers, timeout) -> (http_status, response_json)
Transport = Callable[[str, dict, dict, float], tuple[int, dict]]

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class ConfigError(ValueError):
    pass


class ProviderError(RuntimeError):
    """Raised when retries are exhausted; carries last status and attempts."""

    def __init__(self, message: str, status: int, attempts: int):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.openai.com/v1"
    embed_model: str = "text-embedding-ada-002"
    chat_model: str = "gpt-3.5-turbo-instruct"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    batch_size: int = 16
    mode: str = "mock"
    mock_embed_dim: int = 32
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.mode not in ("live", "mock"):
            raise ConfigError(f"mode must be 'live' or 'mock', got {self.mode!r}")


def mock_embed(text: str, dim: int, model_id: str) -> np.ndarray:
    """Deterministic unit-norm pseudo-embedding of `text` (dim >= 2)."""
    if dim < 2:
        raise ValueError(f"mock embedding dim must be >= 2, got {dim}")
    rng = new_rng(content_hash64("mock-embed", model_id, text))
    vec = rng.standard_normal(dim)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return vec / norm


def mock_complete(prompt: str) -> str:
    return "MOCK(" + sha256(prompt.encode("utf-8")).hexdigest()[:8] + ")"


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, dict]:
    import requests

    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    try:
        body = resp.json()
    except ValueError:
        body = {}
    return resp.status_code, body


class DiskCache:
    """One JSON file per entry under `directory`, keyed by the 64-bit content
    hash of (endpoint, model, input). The full input is stored and compared on
    read, so hash collisions degrade to cache misses. Reads are lock-free;
    writes are serialized."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, key: int) -> Path:
        return self.directory / f"{key:016x}.json"

    @staticmethod
    def key_for(endpoint: str, model: str, input_text: str) -> int:
        return content_hash64(endpoint, model, input_text)

    def get(self, endpoint: str, model: str, input_text: str):
        path = self._path(self.key_for(endpoint, model, input_text))
        if not path.exists():
            return None
        entry = json.loads(path.read_text(encoding="utf-8"))
        if (entry.get("endpoint"), entry.get("model"), entry.get("input")) != (
                endpoint, model, input_text):
            return None
        return entry["payload"]

    def put(self, endpoint: str, model: str, input_text: str, payload) -> None:
        key = self.key_for(endpoint, model, input_text)
        entry = {
            "key": f"{key:016x}",
            "endpoint": endpoint,
            "model": model,
            "input": input_text,
            "payload": payload,
            "created_at": time.time(),
        }
        with self._write_lock:
            tmp = self._path(key).with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            tmp.replace(self._path(key))


class ProviderClient:
    """Retrying, batching, caching client over a pluggable transport.

    `transport` and `sleep` are injectable for tests (counting stubs, no real
    sleeping). Backoff before retry attempt t is base * 2**t * (1 + u) seconds
    with u ~ U[0,1) from a per-client PRNG, which keeps successive delays
    non-decreasing.
    """

    def __init__(self, cfg: ProviderConfig, cache_dir: str | Path | None = None,
                 transport: Transport | None = None,
                 sleep: Callable[[float], None] = time.sleep,
                 backoff_base: float = 1.0):
        self.cfg = cfg
        self.cache = DiskCache(cache_dir) if cache_dir is not None else None
        self.transport = transport if transport is not None else _requests_transport
        self.sleep = sleep
        self.backoff_base = backoff_base
        self._jitter = random.Random(0)
        self._in_flight = threading.BoundedSemaphore(cfg.max_in_flight)

    # -- plumbing ---------------------------------------------------------

    def _api_key(self) -> str:
        key = os.environ.get(self.cfg.api_key_env, "")
        if not key:
            raise ConfigError(
                f"live mode requires an API key in ${self.cfg.api_key_env}"
            )
        return key

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = self.cfg.base_url.rstrip("/") + endpoint
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        attempts = 0
        last_status = 0
        while True:
            attempts += 1
            with self._in_flight:
                status, body = self.transport(url, payload, headers, self.cfg.timeout)
            if status == 200:
                return body
            last_status = status
            retryable = status in RETRYABLE_STATUSES
            if not retryable or attempts > self.cfg.max_retries:
                raise ProviderError(
                    f"{endpoint} failed with HTTP {status} after {attempts} attempt(s)",
                    status=last_status, attempts=attempts)
            delay = self.backoff_base * (2 ** (attempts - 1)) * (1.0 + self._jitter.random())
            self.sleep(delay)

    # -- embeddings -------------------------------------------------------

    def embed_texts(self, texts: Sequence[str], model: str | None = None) -> list[np.ndarray]:
        """One vector per text, order preserved. Cached per text; uncached
        texts go out in batches of cfg.batch_size."""
        if not texts:
            raise ValueError("texts must be non-empty")
        model = model if model is not None else self.cfg.embed_model
        results: list[np.ndarray | None] = [None] * len(texts)
        misses: list[int] = []
        for i, text in enumerate(texts):
            if self.cache is not None:
                payload = self.cache.get("embeddings", model, text)
                if payload is not None:
                    results[i] = np.asarray(payload, dtype=np.float64)
                    continue
            misses.append(i)

        if misses and self.cfg.mode == "mock":
            for i in misses:
                results[i] = mock_embed(texts[i], self.cfg.mock_embed_dim, model)
        elif misses:
            self._api_key()  # fail before any request if the key is missing
            for start in range(0, len(misses), self.cfg.batch_size):
                batch = misses[start:start + self.cfg.batch_size]
                body = self._post("/embeddings", {
                    "model": model, "input": [texts[i] for i in batch]})
                data = sorted(body["data"], key=lambda d: d["index"])
                if len(data) != len(batch):
                    raise ProviderError(
                        f"/embeddings returned {len(data)} vectors for "
                        f"{len(batch)} inputs", status=200, attempts=1)
                for pos, item in zip(batch, data):
                    results[pos] = np.asarray(item["embedding"], dtype=np.float64)

        if self.cache is not None:
            for i in misses:
                self.cache.put("embeddings", model, texts[i], results[i].tolist())
        return [r for r in results]  # type: ignore[misc]

    # -- completions ------------------------------------------------------

    def chat_complete(self, prompt: str, max_tokens: int = 256,
                      temperature: float = 0.0) -> str:
        """First completion text; temperature defaults to 0 for reproducibility."""
        if not prompt:
            raise ValueError("prompt must be non-empty")
        model = self.cfg.chat_model
        cache_input = f"{temperature}\x1f{max_tokens}\x1f{prompt}"
        if self.cache is not None:
            payload = self.cache.get("completions", model, cache_input)
            if payload is not None:
                return payload
        if self.cfg.mode == "mock":
            text = mock_complete(prompt)
        else:
            self._api_key()
            body = self._post("/completions", {
                "model": model, "prompt": prompt,
                "max_tokens": max_tokens, "temperature": temperature})
            choices = body.get("choices", [])
            if not choices:
                raise ProviderError("/completions returned no choices",
                                    status=200, attempts=1)
            text = choices[0].get("text", "")
        if self.cache is not None:
            self.cache.put("completions", model, cache_input, text)
        return text


def embed_request(cfg: ProviderConfig, texts: Sequence[str],
                  cache_dir: str | Path | None = None,
                  transport: Transport | None = None,
                  sleep: Callable[[float], None] = time.sleep) -> list[np.ndarray]:
    return ProviderClient(cfg, cache_dir=cache_dir, transport=transport,
                          sleep=sleep).embed_texts(texts)


def chat_complete(cfg: ProviderConfig, prompt: str, max_tokens: int = 256,
                  temperature: float = 0.0,
                  cache_dir: str | Path | None = None,
                  transport: Transport | None = None,
                  sleep: Callable[[float], None] = time.sleep) -> str:
    return ProviderClient(cfg, cache_dir=cache_dir, transport=transport,
                          sleep=sleep).chat_complete(prompt, max_tokens, temperature)
