"""Fetch representation vectors from an embedding endpoint.

Configuration comes from the environment unless given explicitly:

    EMBEDCLIENT_ENDPOINT   POST URL of the embedding service (required)
    EMBEDCLIENT_API_KEY    bearer token, optional
    EMBEDCLIENT_MODEL      model identifier passed through, optional
    EMBEDCLIENT_TIMEOUT    per-request timeout in seconds (default 30)

The service is expected to accept ``{"input": [texts...], "model": ...}``
and answer ``{"data": [{"embedding": [...]}, ...]}`` in input order.
Generic endpoints return their own pooled sentence embedding rather than a
specific internal activation, so the pooling actually used is recorded in
the output file's metadata. Requests are batched with one batch in flight;
texts are cached by content hash so duplicates cost one request and map to
identical vectors; transient failures are retried a fixed number of times;
the output file is written once, atomically.
"""

import hashlib
import os
import time
from dataclasses import dataclass

import numpy as np

from .records import STATIC_KEY, EmbeddingRecord, write_embeddings

DEFAULT_RETRIES = 3
DEFAULT_BATCH = 16


class FetchError(RuntimeError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    api_key: str | None = None
    model: str | None = None
    timeout: float = 30.0
    retries: int = DEFAULT_RETRIES
    batch_size: int = DEFAULT_BATCH

    @classmethod
    def from_env(cls) -> "EndpointConfig":
        url = os.environ.get("EMBEDCLIENT_ENDPOINT")
        if not url:
            raise FetchError("EMBEDCLIENT_ENDPOINT is not set")
        return cls(
            url=url,
            api_key=os.environ.get("EMBEDCLIENT_API_KEY"),
            model=os.environ.get("EMBEDCLIENT_MODEL"),
            timeout=float(os.environ.get("EMBEDCLIENT_TIMEOUT", "30")),
        )


def _post_batch(session, config, batch, sleep):
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"
    payload = {"input": batch}
    if config.model:
        payload["model"] = config.model
    last_error = None
    for attempt in range(1, config.retries + 1):
        try:
            response = session.post(config.url, json=payload, headers=headers,
                                    timeout=config.timeout)
            status = getattr(response, "status_code", 200)
            if status >= 400:
                raise FetchError(f"HTTP {status} from {config.url}")
            data = response.json()["data"]
            if len(data) != len(batch):
                raise FetchError(
                    f"service returned {len(data)} embeddings for {len(batch)} texts")
            return [np.asarray(item["embedding"], dtype=np.float64) for item in data]
        except Exception as exc:  # transport, HTTP, or shape failure
            last_error = exc
            if attempt < config.retries:
                sleep(0.5 * attempt)
    raise FetchError(
        f"embedding request failed after {config.retries} attempts: {last_error}")


def fetch_embeddings(texts, path, config: EndpointConfig | None = None,
                     session=None, sleep=time.sleep):
    """Embed ``texts`` (id -> text, or (id, key) -> text) into a file.

    Returns the records. ``session`` is injectable for testing; by default a
    requests.Session is created.
    """
    if config is None:
        config = EndpointConfig.from_env()
    if session is None:
        import requests

        session = requests.Session()

    items = []
    for key, text in texts.items():
        if isinstance(key, tuple):
            indicator_id, obs_key = key
        else:
            indicator_id, obs_key = key, STATIC_KEY
        items.append((indicator_id, obs_key, text))

    cache = {}
    pending = []
    seen = set()
    for _id, _key, text in items:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        if digest not in seen:
            seen.add(digest)
            pending.append((digest, text))

    for start in range(0, len(pending), config.batch_size):
        chunk = pending[start:start + config.batch_size]
        vectors = _post_batch(session, config, [t for _, t in chunk], sleep)
        for (digest, _text), vector in zip(chunk, vectors):
            cache[digest] = vector

    dims = {v.shape[0] for v in cache.values()}
    if len(dims) != 1:
        raise FetchError(f"service returned mixed dimensions {sorted(dims)}")
    dim = dims.pop()

    records = [
        EmbeddingRecord(
            indicator_id=indicator_id, key=obs_key,
            vector=cache[hashlib.sha256(text.encode("utf-8")).hexdigest()])
        for indicator_id, obs_key, text in items
    ]
    write_embeddings(path, {
        "dim": int(dim),
        "mode": "static" if all(k == STATIC_KEY for _, k, _t in items)
                else "per_observation",
        "source": "service",
        "pooling": "service_default",
        "model": config.model or "unspecified",
    }, records)
    return records
