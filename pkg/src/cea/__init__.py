"""Black-box word-substitution attacks driven by cross-entropy optimization."""

from .types import (
    AttackConfig,
    AttackConstraints,
    AttackResult,
    CandidateAssignment,
    CandidateSpace,
    IterationRecord,
    SamplingDistribution,
    TokenizedDocument,
    materialize,
)
from .optimizer import (
    enumerate_optimum,
    estimate_rare_event_probability,
    extract_argmax,
    run_attack,
    sample_candidates,
    update_distribution,
    update_threshold,
)
from .objectives import (
    CompositeObjective,
    ObjectiveContext,
    composite_objective,
    hard_label_measure,
    nmt_measure,
    soft_label_measure,
    targeted_measure,
)
from .metrics import (
    EmbeddingTable,
    MetricReport,
    SummaryReport,
    aggregate,
    modification_rate,
    semantic_similarity,
    sentence_bleu,
)
from .oracle import Oracle, QueryBudget, RemoteVictim, VictimResponse
from .victims import train_local_victim

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackConstraints",
    "AttackResult",
    "CandidateAssignment",
    "CandidateSpace",
    "CompositeObjective",
    "EmbeddingTable",
    "IterationRecord",
    "MetricReport",
    "ObjectiveContext",
    "Oracle",
    "QueryBudget",
    "RemoteVictim",
    "SamplingDistribution",
    "SummaryReport",
    "TokenizedDocument",
    "VictimResponse",
    "aggregate",
    "composite_objective",
    "enumerate_optimum",
    "estimate_rare_event_probability",
    "extract_argmax",
    "hard_label_measure",
    "materialize",
    "modification_rate",
    "nmt_measure",
    "run_attack",
    "sample_candidates",
    "semantic_similarity",
    "sentence_bleu",
    "soft_label_measure",
    "targeted_measure",
    "train_local_victim",
    "update_distribution",
    "update_threshold",
]
