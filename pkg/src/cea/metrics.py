"""Evaluation metrics: sentence BLEU, modification rate, embedding-cosine
similarity, and run-level aggregation.

The BLEU variant is pinned so drop numbers reproduce bit-for-bit:
sentence-level, modified (clipped) n-gram precisions for orders
1..min(max_n, candidate length) with uniform weights, brevity penalty
``exp(1 - r/c)`` when the candidate is shorter than the reference, and
optional plus-one smoothing on orders >= 2.

Semantic similarity is the cosine of mean-pooled static word embeddings; a
remote encoder can be substituted wherever a similarity handle is accepted.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyReference,
    EmptyResults,
    LengthMismatch,
    NoEmbeddableTokens,
)

Tokens = Sequence[str]


def _ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(
    candidate: Tokens,
    reference: Tokens,
    max_n: int = 4,
    smoothing: str = "none",
) -> float:
    """Sentence-level BLEU of *candidate* against a single *reference*.

    Raises
    ------
    EmptyReference
        If the reference has no tokens.
    """
    if len(reference) == 0:
        raise EmptyReference("reference must contain at least one token")
    if smoothing not in ("none", "plus-one"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    c, r = len(candidate), len(reference)
    if c == 0:
        return 0.0

    orders = min(max_n, c)
    log_precisions = []
    for n in range(1, orders + 1):
        cand_counts = _ngram_counts(candidate, n)
        ref_counts = _ngram_counts(reference, n)
        clipped = sum(min(cnt, ref_counts[g]) for g, cnt in cand_counts.items())
        total = max(c - n + 1, 0)
        if smoothing == "plus-one" and n >= 2:
            clipped += 1
            total += 1
        if clipped == 0 or total == 0:
            return 0.0
        log_precisions.append(math.log(clipped / total))

    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(sum(log_precisions) / orders)


def modification_rate(original: Tokens, adversarial: Tokens) -> float:
    """Fraction of positions whose tokens differ (substitution-only edits)."""
    if len(original) != len(adversarial):
        raise LengthMismatch(
            f"token sequences differ in length: {len(original)} vs {len(adversarial)}"
        )
    n = len(original)
    if n == 0:
        return 0.0
    changed = sum(1 for a, b in zip(original, adversarial) if a != b)
    return changed / n


class EmbeddingTable:
    """Static word embeddings: token -> fixed-dimension vector.

    File format: one ``token v1 v2 ... vd`` line per token; an optional
    ``count dim`` header line is auto-detected. Lookups fall back to the
    lower-cased token.
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table is empty")
        dims = {v.shape for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dimensions: {dims}")
        self.vectors = vectors
        self.dim = next(iter(vectors.values())).size

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        vectors: dict[str, np.ndarray] = {}
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
            parts = first.split()
            is_header = len(parts) == 2
            if is_header:
                try:
                    int(parts[0]), int(parts[1])
                except ValueError:
                    is_header = False
            if not is_header and parts:
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        return cls(vectors)

    def lookup(self, token: str) -> Optional[np.ndarray]:
        vec = self.vectors.get(token)
        if vec is None:
            vec = self.vectors.get(token.lower())
        return vec

    def mean_pool(self, tokens: Tokens) -> Optional[np.ndarray]:
        vecs = [v for v in (self.lookup(t) for t in tokens) if v is not None]
        if not vecs:
            return None
        return np.mean(vecs, axis=0)


def semantic_similarity(
    tokens_a: Tokens, tokens_b: Tokens, table: EmbeddingTable
) -> float:
    """Cosine of mean-pooled embeddings of the in-vocabulary tokens.

    Identical token sequences score exactly 1.0 without touching the table.

    Raises
    ------
    NoEmbeddableTokens
        If either sequence has no in-vocabulary token.
    """
    if tuple(tokens_a) == tuple(tokens_b):
        return 1.0
    va = table.mean_pool(tokens_a)
    vb = table.mean_pool(tokens_b)
    if va is None or vb is None:
        raise NoEmbeddableTokens("no in-vocabulary tokens to embed")
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


@dataclass(frozen=True)
class MetricReport:
    """Per-example attack metrics.

    The drop fields are redundant with their per-side values by construction;
    ``__post_init__`` recomputes them as a consistency check.
    """

    success: bool
    mod_rate: float
    semantic_similarity: Optional[float] = None
    bleu_original: Optional[float] = None
    bleu_adversarial: Optional[float] = None
    bleu_drop: Optional[float] = None
    sim_original: Optional[float] = None
    sim_adversarial: Optional[float] = None
    semantic_drop: Optional[float] = None
    queries: int = 0

    def __post_init__(self) -> None:
        if self.bleu_original is not None and self.bleu_adversarial is not None:
            expected = self.bleu_original - self.bleu_adversarial
            if self.bleu_drop is None:
                object.__setattr__(self, "bleu_drop", expected)
            elif abs(self.bleu_drop - expected) > 1e-12:
                raise ValueError("bleu_drop inconsistent with per-side BLEU values")
        if self.sim_original is not None and self.sim_adversarial is not None:
            expected = self.sim_original - self.sim_adversarial
            if self.semantic_drop is None:
                object.__setattr__(self, "semantic_drop", expected)
            elif abs(self.semantic_drop - expected) > 1e-12:
                raise ValueError("semantic_drop inconsistent with per-side similarities")

    def to_dict(self) -> dict[str, Any]:
        return {
            "success": self.success,
            "mod_rate": self.mod_rate,
            "semantic_similarity": self.semantic_similarity,
            "bleu_original": self.bleu_original,
            "bleu_adversarial": self.bleu_adversarial,
            "bleu_drop": self.bleu_drop,
            "sim_original": self.sim_original,
            "sim_adversarial": self.sim_adversarial,
            "semantic_drop": self.semantic_drop,
            "queries": self.queries,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricReport":
        return cls(**{k: d.get(k) for k in (
            "success", "mod_rate", "semantic_similarity", "bleu_original",
            "bleu_adversarial", "bleu_drop", "sim_original", "sim_adversarial",
            "semantic_drop",
        )}, queries=d.get("queries", 0))


def _mean(values: Iterable[float]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return float(sum(vals) / len(vals))


@dataclass(frozen=True)
class SummaryReport:
    """Run-level aggregation across per-example reports."""

    sar: float
    total: int
    successes: int
    mean_mod_rate: Optional[float]
    mean_similarity: Optional[float]
    mean_bleu_drop: Optional[float]
    mean_semantic_drop: Optional[float]
    mean_queries: float
    successes_only: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "sar": self.sar,
            "total": self.total,
            "successes": self.successes,
            "mean_mod_rate": self.mean_mod_rate,
            "mean_similarity": self.mean_similarity,
            "mean_bleu_drop": self.mean_bleu_drop,
            "mean_semantic_drop": self.mean_semantic_drop,
            "mean_queries": self.mean_queries,
            "successes_only": self.successes_only,
        }


def aggregate(
    reports: Sequence[MetricReport], successes_only: bool = True
) -> SummaryReport:
    """Summarize per-example reports into SAR and metric means.

    Imperceptibility and drop means cover successful attacks only by default
    (pass ``successes_only=False`` to average over every example); with zero
    successes those means are reported as absent.
    """
    if not reports:
        raise EmptyResults("cannot aggregate an empty report list")
    total = len(reports)
    successes = sum(1 for r in reports if r.success)
    pool = [r for r in reports if r.success] if successes_only else list(reports)
    return SummaryReport(
        sar=successes / total,
        total=total,
        successes=successes,
        mean_mod_rate=_mean(r.mod_rate for r in pool),
        mean_similarity=_mean(r.semantic_similarity for r in pool),
        mean_bleu_drop=_mean(r.bleu_drop for r in pool),
        mean_semantic_drop=_mean(r.semantic_drop for r in pool),
        mean_queries=float(_mean(float(r.queries) for r in reports) or 0.0),
        successes_only=successes_only,
    )
