"""Random-substitution reference attack.

Draws assignments uniformly from the candidate space under the same
objective, constraints, caching, and query accounting as the optimizer, and
keeps the best-scoring one. Used as the equal-budget comparison point for the
optimized attack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BudgetExhausted
from .optimizer import Objective, RngState, _as_rng, sample_candidates
from .types import CandidateAssignment, CandidateSpace, SamplingDistribution


@dataclass(frozen=True)
class RandomAttackResult:
    best_assignment: CandidateAssignment
    best_score: float
    success: bool
    query_count: int
    samples_drawn: int


def random_attack(
    space: CandidateSpace,
    objective: Objective,
    query_budget: int,
    rng_state: RngState,
    batch_size: int = 64,
    max_draws_factor: int = 50,
    prefilter: bool = False,
) -> RandomAttackResult:
    """Uniform random search over the space with at most *query_budget* victim queries.

    By default every drawn candidate is submitted to the victim — the naive
    attacker has no constraint pre-filter, so infeasible draws burn budget
    too. With ``prefilter=True`` the search reuses the objective's filtered
    scoring (infeasible draws cost nothing) and keeps drawing until the
    budget is spent or ``max_draws_factor * query_budget`` assignments have
    been drawn.
    """
    rng = _as_rng(rng_state)
    theta = SamplingDistribution.uniform(space)
    evaluate = objective.score_batch
    if not prefilter:
        evaluate = getattr(objective, "evaluate_paying", evaluate)
    start = objective.queries_used
    best: Optional[CandidateAssignment] = None
    best_score = -math.inf
    drawn = 0
    max_draws = max_draws_factor * max(query_budget, 1)

    while drawn < max_draws:
        remaining = query_budget - (objective.queries_used - start)
        if remaining <= 0:
            break
        # a batch can only spend one query per member, so capping the batch
        # at the remaining budget keeps spending exact
        n = min(batch_size, remaining)
        samples = sample_candidates(theta, space, n, rng)
        drawn += n
        try:
            scores, _ = evaluate(samples)
        except BudgetExhausted:
            break
        j = int(np.argmax(scores))
        if float(scores[j]) > best_score:
            best_score = float(scores[j])
            best = samples[j]

    if best is None:
        best = space.identity_assignment()
        best_score = float(objective.score_batch([best])[0][0])
    verified = objective.verify(best)
    return RandomAttackResult(
        best_assignment=best,
        best_score=float(best_score),
        success=bool(verified) if verified is not None else False,
        query_count=objective.queries_used - start,
        samples_drawn=drawn,
    )
