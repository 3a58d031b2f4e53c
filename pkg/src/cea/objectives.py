"""Attack objectives: performance measures for soft-label, hard-label,
targeted, and translation victims, composed with input similarity and the
feasibility constraints into a single score in [0, 1].

Feasibility is a hard filter: a candidate whose input similarity falls below
the floor or whose modification rate exceeds the ceiling scores exactly 0 and
is never sent to the victim, which both keeps infeasible candidates out of
every elite set and saves query budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EmptyReference, InvalidDistribution, NoEmbeddableTokens
from .metrics import EmbeddingTable, modification_rate, semantic_similarity, sentence_bleu
from .oracle import Oracle
from .tokenization import detokenize, tokens_for_bleu
from .types import CandidateAssignment, TokenizedDocument

SimilarityFn = Callable[[Sequence[str], Sequence[str]], float]

PROB_SUM_TOL = 1e-6


def _check_distribution(probs: Sequence[float]) -> None:
    if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
        raise InvalidDistribution(
            f"class probabilities sum to {sum(probs)!r}, expected 1"
        )


def soft_label_measure(class_probabilities: Sequence[float], true_label: int) -> float:
    """Truncated confidence drop: 1 - max(F_c, 1/K).

    Flat at ``1 - 1/K`` once the true-class confidence is at or below chance,
    so there is no reward for pushing an already-flipped prediction further.
    """
    _check_distribution(class_probabilities)
    k = len(class_probabilities)
    f_c = float(class_probabilities[true_label])
    return 1.0 - max(f_c, 1.0 / k)


def hard_label_measure(predicted_label: int, true_label: int) -> float:
    """Indicator of a flipped prediction."""
    return 1.0 if predicted_label != true_label else 0.0


def targeted_measure(class_probabilities: Sequence[float], target_label: int) -> float:
    """Confidence assigned to the attacker's target class."""
    _check_distribution(class_probabilities)
    if not 0 <= target_label < len(class_probabilities):
        raise InvalidDistribution(
            f"target label {target_label} out of range for K={len(class_probabilities)}"
        )
    return float(class_probabilities[target_label])


def nmt_measure(
    output_tokens: Sequence[str],
    reference_tokens: Sequence[str],
    similarity_fn: SimilarityFn,
) -> float:
    """Translation degradation: 1 - BLEU(output|reference) * Sem(output|reference)."""
    if len(reference_tokens) == 0:
        raise EmptyReference("reference translation is empty")
    bleu = sentence_bleu(output_tokens, reference_tokens)
    sem = min(max(similarity_fn(output_tokens, reference_tokens), 0.0), 1.0)
    return 1.0 - bleu * sem


def embedding_similarity(table: EmbeddingTable) -> SimilarityFn:
    """Similarity handle backed by a static embedding table."""

    def fn(a: Sequence[str], b: Sequence[str]) -> float:
        return semantic_similarity(a, b, table)

    return fn


@dataclass
class ObjectiveContext:
    """Everything a composite objective needs about one attacked document."""

    document: TokenizedDocument
    oracle: Oracle
    similarity_fn: SimilarityFn
    kind: str = "soft-label"
    num_classes: int = 2
    min_similarity: float = 0.7
    max_mod_rate: float = 0.25
    target_label: Optional[int] = None
    # class id -> probability-vector index; identity when labels are 0..K-1
    classes: Optional[list[int]] = None
    # similarity between victim outputs for the translation measure;
    # defaults to similarity_fn
    output_similarity_fn: Optional[SimilarityFn] = None

    def __post_init__(self) -> None:
        if self.kind in ("soft-label", "hard-label", "targeted"):
            if self.num_classes < 2:
                raise ValueError("classification objectives need K >= 2")
            if self.document.label is None:
                raise ValueError("classification objectives need a labeled document")
        if self.kind == "targeted" and self.target_label is None:
            raise ValueError("targeted objective needs a target label")
        if self.kind == "seq2seq" and not self.document.reference:
            raise ValueError("seq2seq objective needs a reference translation")

    def class_index(self, label: int) -> int:
        if self.classes is None:
            return label
        return self.classes.index(label)


class CompositeObjective:
    """Batch evaluator for f(candidate) = m(victim output) * Sem(candidate | original).

    Candidates failing the similarity floor or modification-rate ceiling are
    infeasible: they score 0 without a victim query. A candidate whose
    similarity cannot be computed (no embeddable tokens) is treated as
    infeasible as well. Victim answers and similarity values are cached per
    materialized text, so each distinct candidate costs at most one query.
    """

    def __init__(self, context: ObjectiveContext):
        self.context = context
        self._sem_cache: dict[tuple[str, ...], float] = {}
        self._orig_text = detokenize(context.document.tokens)
        self._orig_output: Optional[str] = None

    @property
    def queries_used(self) -> int:
        return self.context.oracle.queries_used

    def similarity_to_original(self, tokens: tuple[str, ...]) -> float:
        sem = self._sem_cache.get(tokens)
        if sem is None:
            try:
                sem = self.context.similarity_fn(self.context.document.tokens, tokens)
            except NoEmbeddableTokens:
                sem = float("-inf")
            self._sem_cache[tokens] = sem
        return sem

    def feasible(self, candidate: CandidateAssignment) -> bool:
        ctx = self.context
        if modification_rate(ctx.document.tokens, candidate.tokens) > ctx.max_mod_rate:
            return False
        return self.similarity_to_original(candidate.tokens) >= ctx.min_similarity

    def score_batch(
        self, candidates: Sequence[CandidateAssignment]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Score candidates; returns (scores, feasible) arrays."""
        ctx = self.context
        n = len(candidates)
        scores = np.zeros(n, dtype=np.float64)
        feasible = np.zeros(n, dtype=bool)
        sems = np.zeros(n, dtype=np.float64)
        texts: list[str] = []
        live: list[int] = []
        for h, cand in enumerate(candidates):
            if modification_rate(ctx.document.tokens, cand.tokens) > ctx.max_mod_rate:
                continue
            sem = self.similarity_to_original(cand.tokens)
            if sem < ctx.min_similarity:
                continue
            feasible[h] = True
            sems[h] = min(max(sem, 0.0), 1.0)
            live.append(h)
            texts.append(detokenize(cand.tokens))
        if live:
            measures = self._measure_texts(texts)
            scores[live] = measures * sems[live]
        return scores, feasible

    def score_one(self, candidate: CandidateAssignment) -> float:
        return float(self.score_batch([candidate])[0][0])

    def evaluate_paying(
        self, candidates: Sequence[CandidateAssignment]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Score candidates, spending a victim query on every one of them.

        This is how an attacker without the constraint pre-filter behaves:
        infeasible candidates still hit the victim. Scores are identical to
        :meth:`score_batch` (which then runs off the warmed cache).
        """
        ctx = self.context
        texts = [detokenize(c.tokens) for c in candidates]
        if ctx.kind == "hard-label":
            ctx.oracle.query_hard(texts)
        elif ctx.kind in ("soft-label", "targeted"):
            ctx.oracle.query_soft(texts)
        elif ctx.kind == "seq2seq":
            ctx.oracle.query_translate(texts)
        return self.score_batch(candidates)

    def _measure_texts(self, texts: list[str]) -> np.ndarray:
        ctx = self.context
        if ctx.kind == "soft-label":
            probs = ctx.oracle.query_soft(texts)
            yi = ctx.class_index(ctx.document.label)
            return np.array([soft_label_measure(p, yi) for p in probs])
        if ctx.kind == "hard-label":
            labels = ctx.oracle.query_hard(texts)
            return np.array(
                [hard_label_measure(lab, ctx.document.label) for lab in labels]
            )
        if ctx.kind == "targeted":
            probs = ctx.oracle.query_soft(texts)
            ti = ctx.class_index(ctx.target_label)
            return np.array([targeted_measure(p, ti) for p in probs])
        if ctx.kind == "seq2seq":
            outputs = ctx.oracle.query_translate(texts)
            sim = ctx.output_similarity_fn or ctx.similarity_fn
            ref = ctx.document.reference
            return np.array(
                [nmt_measure(tokens_for_bleu(out), ref, sim) for out in outputs]
            )
        raise ValueError(f"unknown objective kind {ctx.kind!r}")

    def original_output(self) -> str:
        """The victim's translation of the unmodified input (cached)."""
        if self._orig_output is None:
            self._orig_output = self.context.oracle.query_translate([self._orig_text])[0]
        return self._orig_output

    def verify(self, candidate: CandidateAssignment) -> bool:
        """One final victim query deciding attack success on *candidate*."""
        ctx = self.context
        text = detokenize(candidate.tokens)
        if ctx.kind == "hard-label":
            label = ctx.oracle.query_hard([text])[0]
            return label != ctx.document.label
        if ctx.kind == "soft-label":
            probs = ctx.oracle.query_soft([text])[0]
            label = int(np.argmax(probs))
            return label != ctx.class_index(ctx.document.label)
        if ctx.kind == "targeted":
            probs = ctx.oracle.query_soft([text])[0]
            return int(np.argmax(probs)) == ctx.class_index(ctx.target_label)
        if ctx.kind == "seq2seq":
            ref = ctx.document.reference
            orig_bleu = sentence_bleu(tokens_for_bleu(self.original_output()), ref)
            adv_out = ctx.oracle.query_translate([text])[0]
            adv_bleu = sentence_bleu(tokens_for_bleu(adv_out), ref)
            return adv_bleu < orig_bleu
        raise ValueError(f"unknown objective kind {ctx.kind!r}")


def composite_objective(candidate: CandidateAssignment, context: ObjectiveContext) -> float:
    """Single-candidate convenience wrapper around :class:`CompositeObjective`."""
    return CompositeObjective(context).score_one(candidate)
