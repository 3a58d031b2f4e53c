"""Core domain types: documents, candidate spaces, distributions, assignments,
attack configuration, and results.

All types are immutable after construction and validate their invariants
eagerly, so downstream code can assume well-formed values and share them
across threads freely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InvalidConfig
from .tokenization import tokenize

ROW_SUM_TOL = 1e-9

OBJECTIVE_KINDS = ("soft-label", "hard-label", "targeted", "seq2seq")


def _frozen_array(values: Sequence[float] | np.ndarray, dtype=np.float64) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TokenizedDocument:
    """An input text as an ordered token sequence plus its supervision signal.

    Exactly which of ``label`` / ``reference`` is present depends on the task:
    classification documents carry a class index, translation documents carry
    a reference token sequence.
    """

    tokens: tuple[str, ...]
    label: Optional[int] = None
    reference: Optional[tuple[str, ...]] = None
    raw_text: str = ""

    def __post_init__(self) -> None:
        if len(self.tokens) < 1:
            raise ValueError("document must contain at least one token")
        if any(not isinstance(t, str) or not t for t in self.tokens):
            raise ValueError("tokens must be non-empty strings")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(self.reference))

    @classmethod
    def from_text(
        cls,
        text: str,
        label: Optional[int] = None,
        reference: Optional[str] = None,
    ) -> "TokenizedDocument":
        ref_tokens = tuple(tokenize(reference)) if reference is not None else None
        return cls(
            tokens=tuple(tokenize(text)),
            label=label,
            reference=ref_tokens,
            raw_text=text,
        )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class CandidateSpace:
    """Per-position substitution sets, each containing the original token once.

    ``candidates[i]`` is the ordered candidate list for position ``i`` and
    ``identity_index[i]`` locates the original token inside it, so the search
    space always includes "leave this position unchanged".
    """

    candidates: tuple[tuple[str, ...], ...]
    identity_index: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.candidates) != len(self.identity_index):
            raise ValueError("identity_index length must match candidate lists")
        for i, (cands, ident) in enumerate(zip(self.candidates, self.identity_index)):
            if len(cands) < 1:
                raise ValueError(f"position {i} has no candidates")
            if len(set(cands)) != len(cands):
                raise ValueError(f"position {i} has duplicate candidates")
            if not 0 <= ident < len(cands):
                raise ValueError(f"position {i} identity index out of range")
        object.__setattr__(
            self, "candidates", tuple(tuple(c) for c in self.candidates)
        )
        object.__setattr__(self, "identity_index", tuple(self.identity_index))

    @classmethod
    def identity_only(cls, tokens: Sequence[str]) -> "CandidateSpace":
        return cls(
            candidates=tuple((t,) for t in tokens),
            identity_index=tuple(0 for _ in tokens),
        )

    @property
    def n_positions(self) -> int:
        return len(self.candidates)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.candidates)

    def size_product(self) -> int:
        return math.prod(self.sizes)

    def original_tokens(self) -> tuple[str, ...]:
        return tuple(
            cands[ident] for cands, ident in zip(self.candidates, self.identity_index)
        )

    def identity_assignment(self) -> "CandidateAssignment":
        return CandidateAssignment.from_indices(self, self.identity_index)


@dataclass(frozen=True)
class CandidateAssignment:
    """A concrete point in a candidate space: one chosen index per position."""

    indices: tuple[int, ...]
    tokens: tuple[str, ...]

    @classmethod
    def from_indices(
        cls, space: CandidateSpace, indices: Sequence[int]
    ) -> "CandidateAssignment":
        return cls(indices=tuple(int(j) for j in indices),
                   tokens=materialize(space, indices))

    def __len__(self) -> int:
        return len(self.indices)


def materialize(space: CandidateSpace, assignment: Sequence[int]) -> tuple[str, ...]:
    """Resolve per-position indices to the token sequence they select.

    Raises
    ------
    IndexOutOfRange
        If the assignment length disagrees with the space or any index
        exceeds its position's candidate count.
    """
    if len(assignment) != space.n_positions:
        raise IndexOutOfRange(
            f"assignment has {len(assignment)} positions, space has {space.n_positions}"
        )
    out = []
    for i, j in enumerate(assignment):
        cands = space.candidates[i]
        if not 0 <= j < len(cands):
            raise IndexOutOfRange(
                f"position {i}: index {j} out of range for {len(cands)} candidates"
            )
        out.append(cands[j])
    return tuple(out)


class SamplingDistribution:
    """One categorical pmf per position, aligned to a candidate space.

    Rows are immutable float64 arrays that each sum to one within
    ``ROW_SUM_TOL``. The flattened view (``flat``/``offsets``) is what the
    sampling kernels consume.
    """

    __slots__ = ("rows", "_flat", "_offsets")

    def __init__(self, rows: Sequence[Sequence[float] | np.ndarray]):
        frozen = []
        for i, row in enumerate(rows):
            arr = np.asarray(row, dtype=np.float64)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError(f"row {i} must be a non-empty vector")
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise ValueError(f"row {i} has probabilities outside [0, 1]")
            if abs(float(arr.sum()) - 1.0) > ROW_SUM_TOL:
                raise ValueError(f"row {i} sums to {arr.sum()!r}, expected 1")
            arr = arr.copy()
            arr.flags.writeable = False
            frozen.append(arr)
        self.rows: tuple[np.ndarray, ...] = tuple(frozen)
        flat = np.concatenate(self.rows) if self.rows else np.zeros(0)
        offsets = np.zeros(len(self.rows) + 1, dtype=np.int64)
        np.cumsum([r.size for r in self.rows], out=offsets[1:])
        flat.flags.writeable = False
        offsets.flags.writeable = False
        self._flat = flat
        self._offsets = offsets

    @classmethod
    def uniform(cls, space: CandidateSpace) -> "SamplingDistribution":
        return cls([np.full(n, 1.0 / n) for n in space.sizes])

    @property
    def n_positions(self) -> int:
        return len(self.rows)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(r.size for r in self.rows)

    @property
    def flat(self) -> np.ndarray:
        return self._flat

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    def check_alignment(self, space: CandidateSpace) -> None:
        if self.sizes != space.sizes:
            raise DimensionMismatch(
                f"distribution sizes {self.sizes} != space sizes {space.sizes}"
            )

    def max_probabilities(self) -> np.ndarray:
        return np.array([float(r.max()) for r in self.rows])

    def to_lists(self) -> list[list[float]]:
        return [r.tolist() for r in self.rows]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SamplingDistribution):
            return NotImplemented
        return self.sizes == other.sizes and all(
            np.array_equal(a, b) for a, b in zip(self.rows, other.rows)
        )

    def __repr__(self) -> str:
        return f"SamplingDistribution(sizes={self.sizes})"


@dataclass(frozen=True)
class AttackConstraints:
    """Feasibility limits: a similarity floor and a modification-rate ceiling."""

    min_similarity: float = 0.7
    max_mod_rate: float = 0.25

    def __post_init__(self) -> None:
        if not -1.0 <= self.min_similarity <= 1.0:
            raise InvalidConfig("min_similarity must lie in [-1, 1]")
        if not 0.0 <= self.max_mod_rate <= 1.0:
            raise InvalidConfig("max_mod_rate must lie in [0, 1]")


@dataclass(frozen=True)
class AttackConfig:
    """Knobs for one attack run.

    ``n_candidates``/``iterations``/``rho``/``gamma0`` mirror the optimizer's
    batch size, iteration cap, threshold quantile, and initial threshold;
    the remaining fields select the objective and bound the run.
    """

    n_candidates: int = 100
    iterations: int = 50
    rho: float = 0.5
    gamma0: float = 0.5
    seed: int = 0
    constraints: AttackConstraints = field(default_factory=AttackConstraints)
    objective_kind: str = "soft-label"
    target_label: Optional[int] = None
    early_stop: bool = False
    monotone_threshold: bool = False
    smoothing: float = 0.0
    max_queries: Optional[int] = None
    full_trace: bool = True
    report_on: str = "argmax"  # which assignment SAR is computed on

    def __post_init__(self) -> None:
        if self.n_candidates < 2:
            raise InvalidConfig("n_candidates must be at least 2")
        if self.iterations < 1:
            raise InvalidConfig("iterations must be positive")
        if not 0.0 < self.rho < 1.0:
            raise InvalidConfig("rho must lie in (0, 1)")
        if not 0.0 <= self.gamma0 <= 1.0:
            raise InvalidConfig("gamma0 must lie in [0, 1]")
        if not 0.0 <= self.smoothing < 1.0:
            raise InvalidConfig("smoothing must lie in [0, 1)")
        if self.objective_kind not in OBJECTIVE_KINDS:
            raise InvalidConfig(f"unknown objective kind {self.objective_kind!r}")
        if self.objective_kind == "targeted" and self.target_label is None:
            raise InvalidConfig("targeted objective requires target_label")
        if self.max_queries is not None and self.max_queries < 1:
            raise InvalidConfig("max_queries must be positive when set")
        if self.report_on not in ("argmax", "best_sampled"):
            raise InvalidConfig("report_on must be 'argmax' or 'best_sampled'")


@dataclass(frozen=True)
class IterationRecord:
    """Outcome of one optimizer iteration.

    ``elite_count`` can only be zero when the monotone-threshold clamp or the
    feasibility filter left no usable sample; the default configuration
    guarantees at least one elite via the order-statistic threshold.

    The heavy fields (``theta`` snapshot and the per-sample arrays) are kept
    only when the run retains full traces.
    """

    iteration: int
    gamma: float
    elite_count: int
    best_score: float
    theta: Optional[list[list[float]]] = None
    sample_indices: Optional[list[list[int]]] = None
    sample_scores: Optional[list[float]] = None
    sample_feasible: Optional[list[bool]] = None
    elite_mask: Optional[list[bool]] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "iteration": self.iteration,
            "gamma": self.gamma,
            "elite_count": self.elite_count,
            "best_score": self.best_score,
        }
        if self.theta is not None:
            d["theta"] = self.theta
        if self.sample_indices is not None:
            d["sample_indices"] = self.sample_indices
            d["sample_scores"] = self.sample_scores
            d["sample_feasible"] = self.sample_feasible
            d["elite_mask"] = self.elite_mask
        return d


@dataclass(frozen=True)
class AttackResult:
    """Everything a finished attack reports.

    ``final_assignment`` is the argmax extraction from the last distribution;
    ``best_sampled`` is the highest-scoring assignment actually evaluated
    during the search (the two can differ, so both are kept auditable).
    """

    final_assignment: CandidateAssignment
    success: bool
    trace: tuple[IterationRecord, ...]
    best_sampled: CandidateAssignment
    best_sampled_score: float
    final_score: float
    query_count: int
    initial_gamma: float
    metrics: Optional[dict[str, Any]] = None

    def gamma_trace(self) -> list[float]:
        return [self.initial_gamma] + [r.gamma for r in self.trace]

    def to_dict(self) -> dict[str, Any]:
        return {
            "final_indices": list(self.final_assignment.indices),
            "final_tokens": list(self.final_assignment.tokens),
            "success": self.success,
            "final_score": self.final_score,
            "best_sampled_indices": list(self.best_sampled.indices),
            "best_sampled_score": self.best_sampled_score,
            "query_count": self.query_count,
            "initial_gamma": self.initial_gamma,
            "trace": [r.to_dict() for r in self.trace],
            "metrics": self.metrics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def config_from_dict(d: dict[str, Any]) -> AttackConfig:
    """Build an AttackConfig from a plain dict (e.g. a parsed config file section)."""
    known = {
        "n_candidates", "iterations", "rho", "gamma0", "seed", "objective_kind",
        "target_label", "early_stop", "monotone_threshold", "smoothing",
        "max_queries", "full_trace", "report_on",
    }
    unknown = set(d) - known - {"constraints"}
    if unknown:
        raise InvalidConfig(f"unknown attack config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in d.items() if k in known}
    if "constraints" in d:
        kwargs["constraints"] = AttackConstraints(**d["constraints"])
    return AttackConfig(**kwargs)


def config_to_dict(cfg: AttackConfig) -> dict[str, Any]:
    return asdict(cfg)
