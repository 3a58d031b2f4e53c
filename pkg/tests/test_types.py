import numpy as np
import pytest
from hypothesis import given, strategies as st

from cea.errors import IndexOutOfRange, InvalidConfig
from cea.types import (
    AttackConfig,
    AttackConstraints,
    CandidateAssignment,
    CandidateSpace,
    SamplingDistribution,
    TokenizedDocument,
    materialize,
)


class TestTokenizedDocument:
    def test_from_text_tokenizes(self):
        doc = TokenizedDocument.from_text("The film, frankly, was great!", label=1)
        assert doc.tokens == ("The", "film", ",", "frankly", ",", "was", "great", "!")
        assert doc.label == 1
        assert doc.raw_text == "The film, frankly, was great!"

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TokenizedDocument(tokens=())

    def test_reference_tokenized(self):
        doc = TokenizedDocument.from_text("hello world", reference="bonjour le monde")
        assert doc.reference == ("bonjour", "le", "monde")


class TestCandidateSpace:
    def test_identity_only(self):
        space = CandidateSpace.identity_only(["a", "b"])
        assert space.sizes == (1, 1)
        assert space.size_product() == 1
        assert space.original_tokens() == ("a", "b")

    def test_rejects_duplicates_within_position(self):
        with pytest.raises(ValueError):
            CandidateSpace(candidates=(("a", "a"),), identity_index=(0,))

    def test_rejects_bad_identity_index(self):
        with pytest.raises(ValueError):
            CandidateSpace(candidates=(("a", "b"),), identity_index=(2,))


class TestMaterialize:
    def test_identity_assignment_is_identity_map(self):
        space = CandidateSpace(
            candidates=(("x", "y"), ("u",), ("p", "q", "r")),
            identity_index=(1, 0, 2),
        )
        assert materialize(space, space.identity_index) == ("y", "u", "r")

    def test_lookup(self):
        space = CandidateSpace(candidates=(("cat", "dog"), ("sat",)),
                               identity_index=(0, 0))
        assert materialize(space, (1, 0)) == ("dog", "sat")

    def test_out_of_range(self):
        space = CandidateSpace(candidates=(("cat", "dog"), ("sat",)),
                               identity_index=(0, 0))
        with pytest.raises(IndexOutOfRange):
            materialize(space, (2, 0))

    def test_length_mismatch(self):
        space = CandidateSpace(candidates=(("cat", "dog"),), identity_index=(0,))
        with pytest.raises(IndexOutOfRange):
            materialize(space, (0, 0))

    @given(st.lists(st.sampled_from(["a", "b", "c", "dd"]), min_size=1, max_size=8))
    def test_identity_property(self, tokens):
        space = CandidateSpace.identity_only(tokens)
        assert materialize(space, space.identity_index) == tuple(tokens)


class TestSamplingDistribution:
    def test_uniform_rows_sum_to_one(self):
        space = CandidateSpace(
            candidates=(("a", "b", "c"), ("d", "e")), identity_index=(0, 0)
        )
        theta = SamplingDistribution.uniform(space)
        for row in theta.rows:
            assert abs(row.sum() - 1.0) <= 1e-9

    def test_rejects_bad_row_sum(self):
        with pytest.raises(ValueError):
            SamplingDistribution([[0.5, 0.6]])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            SamplingDistribution([[1.2, -0.2]])

    def test_flat_offsets_layout(self):
        theta = SamplingDistribution([[0.25, 0.75], [1.0], [0.5, 0.25, 0.25]])
        assert theta.offsets.tolist() == [0, 2, 3, 6]
        np.testing.assert_array_equal(
            theta.flat, [0.25, 0.75, 1.0, 0.5, 0.25, 0.25]
        )

    def test_rows_immutable(self):
        theta = SamplingDistribution([[0.5, 0.5]])
        with pytest.raises(ValueError):
            theta.rows[0][0] = 0.9


class TestAttackConfig:
    def test_defaults_valid(self):
        cfg = AttackConfig()
        assert cfg.n_candidates == 100
        assert cfg.iterations == 50
        assert cfg.rho == 0.5

    def test_targeted_requires_target(self):
        with pytest.raises(InvalidConfig):
            AttackConfig(objective_kind="targeted")

    def test_n_candidates_floor(self):
        with pytest.raises(InvalidConfig):
            AttackConfig(n_candidates=1)

    def test_constraint_ranges(self):
        with pytest.raises(InvalidConfig):
            AttackConstraints(min_similarity=1.5)
        with pytest.raises(InvalidConfig):
            AttackConstraints(max_mod_rate=-0.1)


class TestCandidateAssignment:
    def test_from_indices_materializes(self):
        space = CandidateSpace(candidates=(("cat", "dog"), ("sat",)),
                               identity_index=(0, 0))
        asg = CandidateAssignment.from_indices(space, (1, 0))
        assert asg.tokens == ("dog", "sat")
        assert len(asg) == 2
