"""Black-box victim access: query pathways, response caching, budget
accounting, and the remote wire-protocol client.

The oracle is pathway-aware: soft-label callers receive class-probability
vectors, hard-label callers receive predicted labels only (probabilities are
never exposed on that path), and translation callers receive output strings.
Every distinct (pathway, text) evaluation costs one unit of budget; repeats
are served from cache for free.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import httpx

from .errors import (
    BudgetExhausted,
    ModelNotLoaded,
    RemoteProtocolError,
)

VICTIM_URL_ENV = "CEA_VICTIM_URL"


@dataclass(frozen=True)
class VictimResponse:
    """One victim answer per queried text.

    Classification responses populate ``labels`` (and ``probabilities`` on the
    soft pathway); translation responses populate ``outputs``.
    """

    labels: Optional[tuple[int, ...]] = None
    probabilities: Optional[tuple[tuple[float, ...], ...]] = None
    outputs: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        has_cls = self.labels is not None
        has_out = self.outputs is not None
        if has_cls == has_out:
            raise ValueError("exactly one of labels/outputs must be populated")
        if self.probabilities is not None:
            for row in self.probabilities:
                if abs(sum(row) - 1.0) > 1e-6:
                    raise ValueError("probability rows must sum to 1 within 1e-6")


@dataclass
class QueryBudget:
    """Counts distinct victim evaluations against an optional cap."""

    max_queries: Optional[int] = None
    used: int = 0

    def charge(self, n: int) -> None:
        if n == 0:
            return
        if self.max_queries is not None and self.used + n > self.max_queries:
            raise BudgetExhausted(
                f"budget {self.max_queries} cannot cover {n} more queries "
                f"({self.used} used)"
            )
        self.used += n


class VictimBackend(Protocol):
    """What the oracle needs from a victim implementation."""

    def predict_probs(self, texts: Sequence[str]) -> list[list[float]]: ...

    def predict_labels(self, texts: Sequence[str]) -> list[int]: ...

    def translate(self, texts: Sequence[str]) -> list[str]: ...


class Oracle:
    """Caching, budget-enforcing front of a victim backend.

    Thread-safe: cache and budget updates happen under one lock, so the
    post-hoc query count is exact even with concurrent callers.
    """

    def __init__(self, backend: VictimBackend, budget: Optional[QueryBudget] = None):
        self._backend = backend
        self.budget = budget if budget is not None else QueryBudget()
        self._cache: dict[tuple[str, str], object] = {}
        self._lock = threading.Lock()

    @property
    def queries_used(self) -> int:
        return self.budget.used

    def _batch(self, kind: str, texts: Sequence[str], fetch):
        """Serve *texts* through the cache, fetching and charging misses once."""
        with self._lock:
            missing: list[str] = []
            seen: set[str] = set()
            for t in texts:
                if (kind, t) not in self._cache and t not in seen:
                    missing.append(t)
                    seen.add(t)
            self.budget.charge(len(missing))
            if missing:
                results = fetch(missing)
                if len(results) != len(missing):
                    raise RemoteProtocolError(
                        f"backend returned {len(results)} results for "
                        f"{len(missing)} inputs"
                    )
                for t, r in zip(missing, results):
                    self._cache[(kind, t)] = r
            return [self._cache[(kind, t)] for t in texts]

    def query_soft(self, texts: Sequence[str]) -> list[list[float]]:
        """Per-text class-probability vectors (soft-label pathway)."""
        return self._batch("soft", texts, self._backend.predict_probs)

    def query_hard(self, texts: Sequence[str]) -> list[int]:
        """Per-text predicted labels only (hard-label pathway)."""
        return self._batch("hard", texts, self._backend.predict_labels)

    def query_translate(self, texts: Sequence[str]) -> list[str]:
        """Per-text translation outputs."""
        return self._batch("translate", texts, self._backend.translate)


class RemoteVictim:
    """HTTP client for the remote victim wire protocol.

    Endpoints: ``POST /v1/classify``, ``POST /v1/translate``,
    ``POST /v1/similarity``, ``GET /v1/info``. Idempotent requests are retried
    up to 3 times with exponential backoff; any non-200 status or arity
    mismatch raises :class:`RemoteProtocolError`.
    """

    MAX_RETRIES = 3
    BACKOFF = 0.1

    def __init__(self, base_url: Optional[str] = None, timeout: float = 30.0):
        url = base_url or os.environ.get(VICTIM_URL_ENV)
        if not url:
            raise ModelNotLoaded(
                f"no victim URL configured (set {VICTIM_URL_ENV} or pass base_url)"
            )
        self._client = httpx.Client(base_url=url.rstrip("/"), timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def _request(self, method: str, path: str, json_body: Optional[dict] = None) -> dict:
        last_exc: Optional[Exception] = None
        for attempt in range(self.MAX_RETRIES):
            try:
                resp = self._client.request(method, path, json=json_body)
            except httpx.HTTPError as exc:
                last_exc = exc
                time.sleep(self.BACKOFF * (2 ** attempt))
                continue
            if resp.status_code >= 500:
                last_exc = RemoteProtocolError(
                    f"{path} returned status {resp.status_code}"
                )
                time.sleep(self.BACKOFF * (2 ** attempt))
                continue
            if resp.status_code != 200:
                raise RemoteProtocolError(
                    f"{path} returned status {resp.status_code}: {resp.text[:200]}"
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise RemoteProtocolError(f"{path} returned non-JSON body") from exc
        raise RemoteProtocolError(f"{path} failed after retries: {last_exc}")

    def info(self) -> dict:
        return self._request("GET", "/v1/info")

    def predict_probs(self, texts: Sequence[str]) -> list[list[float]]:
        body = self._request(
            "POST", "/v1/classify", {"texts": list(texts), "return_probs": True}
        )
        probs = body.get("probs")
        if not isinstance(probs, list) or len(probs) != len(texts):
            raise RemoteProtocolError("classify response arity mismatch on 'probs'")
        return [[float(p) for p in row] for row in probs]

    def predict_labels(self, texts: Sequence[str]) -> list[int]:
        body = self._request(
            "POST", "/v1/classify", {"texts": list(texts), "return_probs": False}
        )
        labels = body.get("labels")
        if not isinstance(labels, list) or len(labels) != len(texts):
            raise RemoteProtocolError("classify response arity mismatch on 'labels'")
        return [int(x) for x in labels]

    def translate(self, texts: Sequence[str]) -> list[str]:
        body = self._request("POST", "/v1/translate", {"texts": list(texts)})
        outputs = body.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(texts):
            raise RemoteProtocolError("translate response arity mismatch on 'outputs'")
        return [str(x) for x in outputs]

    def similarity(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        body = self._request(
            "POST", "/v1/similarity", {"pairs": [list(p) for p in pairs]}
        )
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise RemoteProtocolError("similarity response arity mismatch on 'scores'")
        return [float(x) for x in scores]


@dataclass
class ClassifierOnlyBackend:
    """Adapter giving classification backends a failing translate pathway."""

    model: object
    name: str = "local"

    def predict_probs(self, texts: Sequence[str]) -> list[list[float]]:
        return self.model.predict_probs(texts)  # type: ignore[attr-defined]

    def predict_labels(self, texts: Sequence[str]) -> list[int]:
        return self.model.predict_labels(texts)  # type: ignore[attr-defined]

    def translate(self, texts: Sequence[str]) -> list[str]:
        raise ModelNotLoaded(f"{self.name} backend has no translation pathway")
