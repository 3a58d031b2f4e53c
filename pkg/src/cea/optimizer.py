"""Cross-entropy optimization over per-position substitution choices.

One iteration draws a batch of assignments from the current categorical
distributions, scores them, sets the threshold to the (1 - rho) batch
quantile, and refits each position's pmf to the frequency of elite choices.
After the final iteration the per-position argmax is extracted as the answer.

The module also carries two verification tools: exhaustive enumeration of
small spaces and a Monte-Carlo estimator for the probability of clearing a
score threshold under the current distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Union

import numpy as np

from . import _kernels
from .errors import EmptyEliteSet, EmptyScores, SpaceTooLarge
from .types import (
    AttackConfig,
    AttackResult,
    CandidateAssignment,
    CandidateSpace,
    IterationRecord,
    SamplingDistribution,
    TokenizedDocument,
)

RngState = Union[int, np.random.Generator]

# snap quantile ranks sitting within this of an integer, so float fuzz in
# (1 - rho) * N cannot shift the order statistic
_RANK_EPS = 1e-9

DEGENERATE_PMF_THRESHOLD = 0.999
ENUMERATION_CAP = 10 ** 6


class Objective(Protocol):
    """What run_attack needs from an objective."""

    def score_batch(
        self, candidates: Sequence[CandidateAssignment]
    ) -> tuple[np.ndarray, np.ndarray]: ...

    def verify(self, candidate: CandidateAssignment) -> Optional[bool]: ...

    @property
    def queries_used(self) -> int: ...


class FunctionObjective:
    """Adapter exposing a plain score function as an Objective.

    Every candidate is feasible and there is no victim, so verification
    reports no success and the query counter stays at zero.
    """

    def __init__(self, fn: Callable[[CandidateAssignment], float]):
        self._fn = fn

    def score_batch(self, candidates):
        scores = np.array([self._fn(c) for c in candidates], dtype=np.float64)
        return scores, np.ones(len(candidates), dtype=bool)

    def verify(self, candidate) -> Optional[bool]:
        return None

    @property
    def queries_used(self) -> int:
        return 0


def _as_rng(rng_state: RngState) -> np.random.Generator:
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


def elite_rank(n_scores: int, rho: float) -> int:
    """1-based rank of the threshold order statistic: ceil((1 - rho) * N)."""
    t = (1.0 - rho) * n_scores
    k = math.ceil(t - _RANK_EPS)
    return min(max(k, 1), n_scores)


def update_threshold(scores: Sequence[float], rho: float) -> float:
    """The ceil((1-rho)N)-th smallest score; ties kept as-is.

    Raises
    ------
    EmptyScores
        If no scores are given.
    """
    n = len(scores)
    if n == 0:
        raise EmptyScores("cannot take a quantile of zero scores")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    k = elite_rank(n, rho)
    ordered = np.sort(np.asarray(scores, dtype=np.float64), kind="stable")
    return float(ordered[k - 1])


def sample_candidates(
    theta: SamplingDistribution,
    space: CandidateSpace,
    n_samples: int,
    rng_state: RngState,
) -> list[CandidateAssignment]:
    """Draw independent assignments, position i from theta's row i.

    Deterministic given the rng state; an integer seed always starts a fresh
    stream, so two calls with the same seed return identical samples.
    """
    theta.check_alignment(space)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    choices = _sample_index_matrix(theta, n_samples, _as_rng(rng_state))
    return _assignments_from_choices(space, choices)


def _sample_index_matrix(
    theta: SamplingDistribution, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    cumsum = _row_cumsum(theta)
    uniforms = rng.random((n_samples, theta.n_positions))
    return _kernels.sample_categorical(cumsum, theta.offsets, uniforms)


def _row_cumsum(theta: SamplingDistribution) -> np.ndarray:
    out = np.empty_like(theta.flat)
    for i in range(theta.n_positions):
        lo, hi = theta.offsets[i], theta.offsets[i + 1]
        np.cumsum(theta.flat[lo:hi], out=out[lo:hi])
    return out


def _assignments_from_choices(
    space: CandidateSpace, choices: np.ndarray
) -> list[CandidateAssignment]:
    cands = space.candidates
    out = []
    for row in choices:
        idx = tuple(int(j) for j in row)
        out.append(
            CandidateAssignment(
                indices=idx,
                tokens=tuple(cands[i][j] for i, j in enumerate(idx)),
            )
        )
    return out


def _refit_rows(
    theta: SamplingDistribution,
    choices: np.ndarray,
    elite_mask: np.ndarray,
    smoothing: float,
) -> SamplingDistribution:
    n_elite = int(elite_mask.sum())
    if n_elite == 0:
        raise EmptyEliteSet("no samples reached the elite threshold")
    counts = _kernels.elite_counts(theta.offsets, choices, elite_mask)
    rows = []
    for i in range(theta.n_positions):
        lo, hi = theta.offsets[i], theta.offsets[i + 1]
        freq = counts[lo:hi] / n_elite
        if smoothing > 0.0:
            freq = (1.0 - smoothing) * freq + smoothing * theta.rows[i]
        rows.append(freq)
    return SamplingDistribution(rows)


def update_distribution(
    theta: SamplingDistribution,
    assignments: Sequence[CandidateAssignment],
    scores: Sequence[float],
    gamma: float,
    smoothing: float = 0.0,
) -> SamplingDistribution:
    """Refit each row to the frequency of elite choices (score >= gamma).

    With smoothing alpha, the result blends (1 - alpha) * frequency with
    alpha * previous row.

    Raises
    ------
    EmptyEliteSet
        If no score reaches gamma (unreachable when gamma came from
        update_threshold on these scores).
    """
    if len(assignments) != len(scores):
        raise ValueError("assignments and scores must be aligned")
    score_arr = np.asarray(scores, dtype=np.float64)
    elite_mask = score_arr >= gamma
    choices = np.array([a.indices for a in assignments], dtype=np.int64)
    return _refit_rows(theta, choices, elite_mask, smoothing)


def extract_argmax(
    theta: SamplingDistribution, space: CandidateSpace
) -> CandidateAssignment:
    """Per-position argmax of the pmf; ties resolve to the lowest index."""
    theta.check_alignment(space)
    indices = tuple(int(np.argmax(r)) for r in theta.rows)
    return CandidateAssignment.from_indices(space, indices)


def run_attack(
    doc: TokenizedDocument,
    space: CandidateSpace,
    objective: Objective,
    config: AttackConfig,
    rng_state: Optional[RngState] = None,
) -> AttackResult:
    """Full optimization loop returning the argmax assignment and its trace.

    The pmf refit always gates on the freshly computed threshold. When that
    threshold is zero (nothing in the batch cleared it meaningfully), elites
    are additionally restricted to constraint-feasible samples so that
    infeasible candidates never steer the distribution; if that leaves no
    elite, the distribution is carried over unchanged. Success is decided by
    one final victim query on the extracted assignment.
    """
    if space.n_positions != len(doc.tokens):
        raise ValueError("candidate space does not match document length")
    rng = _as_rng(rng_state if rng_state is not None else config.seed)
    theta = SamplingDistribution.uniform(space)
    queries_before = objective.queries_used

    trace: list[IterationRecord] = []
    best_sampled: Optional[CandidateAssignment] = None
    best_sampled_score = -math.inf
    gamma_floor = -math.inf  # running max for the monotone option

    for t in range(config.iterations):
        samples = sample_candidates(theta, space, config.n_candidates, rng)
        scores, feasible = objective.score_batch(samples)

        batch_best = int(np.argmax(scores))
        if float(scores[batch_best]) > best_sampled_score:
            best_sampled_score = float(scores[batch_best])
            best_sampled = samples[batch_best]

        gamma = update_threshold(scores, config.rho)
        if config.monotone_threshold:
            gamma = max(gamma, gamma_floor)
            gamma_floor = gamma

        elite_mask = scores >= gamma
        if gamma <= 0.0:
            elite_mask &= feasible
        elite_count = int(elite_mask.sum())

        if elite_count > 0:
            choices = np.array([a.indices for a in samples], dtype=np.int64)
            theta = _refit_rows(theta, choices, elite_mask, config.smoothing)

        trace.append(
            IterationRecord(
                iteration=t,
                gamma=float(gamma),
                elite_count=elite_count,
                best_score=float(scores[batch_best]),
                theta=theta.to_lists() if config.full_trace else None,
                sample_indices=(
                    [list(a.indices) for a in samples] if config.full_trace else None
                ),
                sample_scores=scores.tolist() if config.full_trace else None,
                sample_feasible=feasible.tolist() if config.full_trace else None,
                elite_mask=elite_mask.tolist() if config.full_trace else None,
            )
        )

        if config.early_stop and bool(
            np.all(theta.max_probabilities() >= DEGENERATE_PMF_THRESHOLD)
        ):
            break

    final = extract_argmax(theta, space)
    final_score = float(objective.score_batch([final])[0][0])
    report_target = (
        best_sampled
        if config.report_on == "best_sampled" and best_sampled is not None
        else final
    )
    verified = objective.verify(report_target)
    if best_sampled is None:
        best_sampled = final
        best_sampled_score = final_score

    return AttackResult(
        final_assignment=final,
        success=bool(verified) if verified is not None else False,
        trace=tuple(trace),
        best_sampled=best_sampled,
        best_sampled_score=float(best_sampled_score),
        final_score=final_score,
        query_count=objective.queries_used - queries_before,
        initial_gamma=config.gamma0,
    )


def enumerate_optimum(
    doc: TokenizedDocument,
    space: CandidateSpace,
    objective: Objective,
    cap: int = ENUMERATION_CAP,
    batch_size: int = 2048,
) -> tuple[CandidateAssignment, float]:
    """Exact global maximizer by exhaustive enumeration.

    Assignments are visited in lexicographic index order and the maximum is
    strict, so ties resolve to the lexicographically smallest assignment.

    Raises
    ------
    SpaceTooLarge
        If the space has more than *cap* assignments.
    """
    total = space.size_product()
    if total > cap:
        raise SpaceTooLarge(f"{total} assignments exceed the cap of {cap}")
    best: Optional[CandidateAssignment] = None
    best_score = -math.inf
    ranges = [range(n) for n in space.sizes]
    it = itertools.product(*ranges)
    while True:
        chunk = list(itertools.islice(it, batch_size))
        if not chunk:
            break
        cands = [CandidateAssignment.from_indices(space, idx) for idx in chunk]
        scores, _ = objective.score_batch(cands)
        j = int(np.argmax(scores))
        if float(scores[j]) > best_score:
            best_score = float(scores[j])
            best = cands[j]
    assert best is not None
    return best, best_score


@dataclass(frozen=True)
class RareEventEstimate:
    """Monte-Carlo estimate of P(score >= gamma) with its standard error."""

    estimate: float
    stderr: float
    n_samples: int


def estimate_rare_event_probability(
    theta: SamplingDistribution,
    space: CandidateSpace,
    objective: Objective,
    gamma: float,
    n_samples: int,
    rng_state: RngState,
) -> RareEventEstimate:
    """Estimate the probability that a sampled assignment scores at least gamma."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    samples = sample_candidates(theta, space, n_samples, rng_state)
    scores, _ = objective.score_batch(samples)
    hits = scores >= gamma
    p = float(hits.mean())
    stderr = math.sqrt(p * (1.0 - p) / n_samples)
    return RareEventEstimate(estimate=p, stderr=stderr, n_samples=n_samples)
