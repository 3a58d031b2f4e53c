import json

import pytest

from cea.data import path as data_path
from cea.lexicon import LexiconSource
from cea.metrics import EmbeddingTable
from cea.objectives import CompositeObjective, ObjectiveContext, embedding_similarity
from cea.oracle import ClassifierOnlyBackend, Oracle, QueryBudget
from cea.types import CandidateSpace, TokenizedDocument
from cea.victims import load_victim


@pytest.fixture(scope="session")
def sentiment_records():
    with open(data_path("sentiment_500.jsonl"), encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture(scope="session")
def sentiment_lexicons():
    return LexiconSource(data_path("sentiment_lexicons.jsonl"))


@pytest.fixture(scope="session")
def nb_victim():
    return load_victim(data_path("victim_nb.json"))


@pytest.fixture(scope="session")
def embedding_table():
    return EmbeddingTable.load(data_path("embeddings.txt"))


@pytest.fixture()
def hard_label_objective(nb_victim, embedding_table):
    """Factory building a fresh hard-label objective for a fixture record."""

    def build(rec, budget=None):
        doc = TokenizedDocument.from_text(rec["text"], label=rec["label"])
        oracle = Oracle(
            ClassifierOnlyBackend(nb_victim), QueryBudget(max_queries=budget)
        )
        ctx = ObjectiveContext(
            document=doc,
            oracle=oracle,
            similarity_fn=embedding_similarity(embedding_table),
            kind="hard-label",
            num_classes=2,
            classes=nb_victim.classes,
        )
        return doc, CompositeObjective(ctx)

    return build


def two_position_space():
    return CandidateSpace(
        candidates=(("cat", "dog"), ("sat",)),
        identity_index=(0, 0),
    )
