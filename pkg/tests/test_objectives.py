import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cea.errors import EmptyReference, InvalidDistribution
from cea.metrics import EmbeddingTable
from cea.objectives import (
    CompositeObjective,
    ObjectiveContext,
    composite_objective,
    embedding_similarity,
    hard_label_measure,
    nmt_measure,
    soft_label_measure,
    targeted_measure,
)
from cea.oracle import Oracle
from cea.types import CandidateAssignment, CandidateSpace, TokenizedDocument


class TestSoftLabelMeasure:
    def test_boundary_at_chance(self):
        assert soft_label_measure([0.5, 0.5], 0) == 0.5

    def test_confident_model(self):
        probs = [0.9, 0.05, 0.03, 0.02]
        assert abs(soft_label_measure(probs, 0) - 0.1) < 1e-12

    def test_truncation_below_chance(self):
        low = soft_label_measure([0.05, 0.5, 0.25, 0.2], 0)
        at_chance = soft_label_measure([0.25, 0.4, 0.2, 0.15], 0)
        assert low == at_chance == 0.75

    def test_rejects_bad_distribution(self):
        with pytest.raises(InvalidDistribution):
            soft_label_measure([0.5, 0.6], 0)

    @given(st.integers(2, 10), st.integers(0, 2 ** 31 - 1))
    def test_plateau_and_decrease(self, k, seed):
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.ones(k))
        m = soft_label_measure(probs.tolist(), 0)
        assert m == 1.0 - max(float(probs[0]), 1.0 / k)
        assert 0.0 <= m <= 1.0 - 1.0 / k


class TestHardLabelMeasure:
    def test_same_label(self):
        assert hard_label_measure(1, 1) == 0.0

    def test_different_label(self):
        assert hard_label_measure(2, 1) == 1.0

    def test_binary_flip(self):
        assert hard_label_measure(0, 1) == 1.0


class TestTargetedMeasure:
    def test_certainty(self):
        assert targeted_measure([0.0, 1.0, 0.0], 1) == 1.0

    def test_uniform(self):
        assert targeted_measure([0.25] * 4, 2) == 0.25

    def test_component_read(self):
        assert targeted_measure([0.1, 0.7, 0.2], 1) == 0.7

    def test_target_out_of_range(self):
        with pytest.raises(InvalidDistribution):
            targeted_measure([0.5, 0.5], 3)


class TestNmtMeasure:
    def test_perfect_translation(self):
        ref = ["the", "cat", "sat"]
        assert nmt_measure(ref, ref, lambda a, b: 1.0) == 0.0

    def test_given_factors(self):
        # single-token candidate: one n-gram order, precision 1, BP = e^-1,
        # so the factors are BLEU = e^-1 and Sem = 0.8
        out = ["a"]
        ref = ["a", "x"]
        got = nmt_measure(out, ref, lambda a, b: 0.8)
        assert abs(got - (1.0 - math.exp(-1.0) * 0.8)) < 1e-12

    def test_zero_overlap(self):
        got = nmt_measure(["x", "y"], ["a", "b"], lambda a, b: 0.9)
        assert got == 1.0

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            nmt_measure(["a"], [], lambda a, b: 1.0)

    def test_similarity_clamped(self):
        out = ["a"]
        ref = ["a"]
        assert nmt_measure(out, ref, lambda a, b: 1.7) == 0.0
        assert nmt_measure(out, ref, lambda a, b: -0.5) == 1.0


class _StubClassifier:
    """Deterministic stand-in victim: label 1 iff 'bad' appears."""

    def __init__(self, k=2):
        self.k = k

    def predict_probs(self, texts):
        out = []
        for t in texts:
            p_bad = 0.9 if "bad" in t.split() else 0.2
            out.append([1.0 - p_bad, p_bad] + [0.0] * (self.k - 2))
        return out

    def predict_labels(self, texts):
        return [int(np.argmax(p)) for p in self.predict_probs(texts)]

    def translate(self, texts):
        return list(texts)


def _context(kind="hard-label", **kw):
    doc = TokenizedDocument.from_text("the movie was good overall today", label=0)
    table = EmbeddingTable(
        {
            "good": np.array([1.0, 0.0]),
            "bad": np.array([0.9, 0.1]),
            "awful": np.array([-1.0, 0.2]),
            "movie": np.array([0.5, 0.5]),
            "the": np.array([0.2, 0.2]),
            "was": np.array([0.3, 0.1]),
            "overall": np.array([0.1, 0.4]),
            "today": np.array([0.4, 0.3]),
        }
    )
    defaults = dict(
        document=doc,
        oracle=Oracle(_StubClassifier()),
        similarity_fn=embedding_similarity(table),
        kind=kind,
        num_classes=2,
        min_similarity=0.7,
        max_mod_rate=0.25,
    )
    defaults.update(kw)
    return ObjectiveContext(**defaults)


def _space_for(ctx, position, candidates):
    tokens = ctx.document.tokens
    cands = []
    ident = []
    for i, t in enumerate(tokens):
        if i == position:
            cands.append((t, *candidates))
        else:
            cands.append((t,))
        ident.append(0)
    return CandidateSpace(candidates=tuple(cands), identity_index=tuple(ident))


class TestCompositeObjective:
    def test_identity_is_feasible_and_scores_zero_hard(self):
        ctx = _context()
        space = _space_for(ctx, 3, ("bad",))
        identity = space.identity_assignment()
        # unmodified input keeps the correct label, so the measure is zero
        assert composite_objective(identity, ctx) == 0.0
        assert CompositeObjective(ctx).feasible(identity)

    def test_mod_rate_violation_scores_zero_without_query(self):
        ctx = _context(max_mod_rate=0.25)
        obj = CompositeObjective(ctx)
        doc_tokens = ctx.document.tokens
        space = CandidateSpace(
            candidates=tuple((t, "bad") for t in doc_tokens),
            identity_index=tuple(0 for _ in doc_tokens),
        )
        # 3 of 6 tokens modified -> mod rate 0.5 > 0.25
        cand = CandidateAssignment.from_indices(space, (1, 1, 1, 0, 0, 0))
        scores, feasible = obj.score_batch([cand])
        assert scores[0] == 0.0
        assert not feasible[0]
        assert ctx.oracle.queries_used == 0

    def test_similarity_floor_blocks(self):
        ctx = _context(min_similarity=0.99)
        space = _space_for(ctx, 3, ("awful",))
        cand = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        obj = CompositeObjective(ctx)
        scores, feasible = obj.score_batch([cand])
        assert scores[0] == 0.0 and not feasible[0]
        assert ctx.oracle.queries_used == 0

    def test_feasible_product(self):
        ctx = _context(kind="soft-label", min_similarity=0.0)
        space = _space_for(ctx, 3, ("bad",))
        cand = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        obj = CompositeObjective(ctx)
        scores, feasible = obj.score_batch([cand])
        assert feasible[0]
        # flipped text: soft measure = 1 - max(0.1, 0.5) = 0.5, times Sem
        sem = obj.similarity_to_original(cand.tokens)
        assert abs(scores[0] - 0.5 * min(max(sem, 0.0), 1.0)) < 1e-12

    def test_hard_label_nonzero_iff_flip_and_feasible(self):
        ctx = _context(min_similarity=0.0)
        space = _space_for(ctx, 3, ("bad",))
        flip = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        stay = space.identity_assignment()
        obj = CompositeObjective(ctx)
        scores, _ = obj.score_batch([flip, stay])
        assert scores[0] > 0.0
        assert scores[1] == 0.0

    def test_oracle_queried_once_per_distinct_text(self):
        ctx = _context(min_similarity=0.0)
        space = _space_for(ctx, 3, ("bad",))
        cand = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        obj = CompositeObjective(ctx)
        obj.score_batch([cand, cand, space.identity_assignment()])
        assert ctx.oracle.queries_used == 2
        obj.score_batch([cand])
        assert ctx.oracle.queries_used == 2

    def test_verify_hard_label(self):
        ctx = _context(min_similarity=0.0)
        space = _space_for(ctx, 3, ("bad",))
        obj = CompositeObjective(ctx)
        flip = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        assert obj.verify(flip)
        assert not obj.verify(space.identity_assignment())

    def test_targeted_verify(self):
        ctx = _context(kind="targeted", target_label=1, min_similarity=0.0)
        space = _space_for(ctx, 3, ("bad",))
        obj = CompositeObjective(ctx)
        flip = CandidateAssignment.from_indices(
            space, tuple(1 if i == 3 else 0 for i in range(6))
        )
        assert obj.verify(flip)

    def test_seq2seq_measures_degradation(self):
        doc = TokenizedDocument.from_text("good movie today", reference="good movie today")
        ctx = _context()
        sctx = ObjectiveContext(
            document=doc,
            oracle=Oracle(_StubClassifier()),
            similarity_fn=ctx.similarity_fn,
            kind="seq2seq",
            min_similarity=0.0,
            max_mod_rate=1.0,
        )
        obj = CompositeObjective(sctx)
        space = CandidateSpace(
            candidates=(("good", "bad"), ("movie",), ("today",)),
            identity_index=(0, 0, 0),
        )
        identity = space.identity_assignment()
        # echo victim: identity translates to the reference -> measure 0
        scores, _ = obj.score_batch([identity])
        assert scores[0] == 0.0
        worse = CandidateAssignment.from_indices(space, (1, 0, 0))
        scores, _ = obj.score_batch([worse])
        assert scores[0] > 0.0
        assert obj.verify(worse)
