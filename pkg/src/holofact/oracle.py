"""Brute-force factorization oracle.

Enumerates every index tuple, scores it by the exact integer similarity
between the query and the bound candidate product, and returns the argmax
with its margin over the runner-up.  Deliberately simple: this is the
ground truth that resonator results are validated against, so it must stay
trivially correct.  A budget guard refuses search spaces that would not be
desk-scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .resonator import FactorizationProblem

__all__ = ["OracleResult", "OracleBudgetError", "brute_force_factorize", "certify_problem"]

DEFAULT_BUDGET = 2**22


class OracleBudgetError(ValueError):
    """Raised when the search space exceeds the enumeration budget."""


@dataclass(frozen=True)
class OracleResult:
    """Exhaustive-search outcome.

    ``unique`` is true iff the best tuple beats every other tuple strictly
    (margin over the runner-up is positive).  Ties resolve to the lowest
    lexicographic tuple and report unique=False.
    """

    best_indices: tuple[int, ...]
    best_similarity: int
    runner_up_similarity: int
    unique: bool

    @property
    def margin(self) -> int:
        return self.best_similarity - self.runner_up_similarity


def brute_force_factorize(
    problem: FactorizationProblem, budget: int = DEFAULT_BUDGET
) -> OracleResult:
    """Score every index tuple and return the argmax with its margin.

    The last factor is vectorized (one exact integer MVM per prefix tuple);
    prefixes are enumerated lexicographically, so the first tuple attaining
    the maximum is the lexicographically lowest one.
    """
    space = problem.search_space()
    if space > budget:
        raise OracleBudgetError(
            f"search space prod(M_f) = {space} exceeds oracle budget {budget}"
        )
    cbs = [cb.vectors.astype(np.int64) for cb in problem.codebooks]
    query = np.asarray(problem.query, dtype=np.int64)

    last = cbs[-1]
    best_val: int | None = None
    second_val: int | None = None
    best_tuple: tuple[int, ...] = ()
    prefix_books = cbs[:-1]
    prefix_ranges = [range(cb.shape[0]) for cb in prefix_books]
    for prefix in itertools.product(*prefix_ranges):
        partial = query
        for cb, idx in zip(prefix_books, prefix):
            partial = partial * cb[idx]
        sims = last @ partial
        top = int(np.argmax(sims))  # first occurrence: lowest index on ties
        top_val = int(sims[top])
        if best_val is None or top_val > best_val:
            # Runner-up candidates: the displaced best, and the second
            # largest entry here (equals top_val on a within-vector tie).
            displaced = best_val
            best_val = top_val
            best_tuple = prefix + (top,)
            local_second = (
                int(np.partition(sims, -2)[-2]) if sims.size >= 2 else None
            )
            for cand in (displaced, local_second):
                if cand is not None and (second_val is None or cand > second_val):
                    second_val = cand
        else:
            if second_val is None or top_val > second_val:
                second_val = top_val
    assert best_val is not None
    if second_val is None:
        # Single candidate in the whole space (M=1 everywhere).
        second_val = best_val
        unique = False
    else:
        unique = best_val > second_val
    return OracleResult(
        best_indices=best_tuple,
        best_similarity=best_val,
        runner_up_similarity=second_val,
        unique=unique,
    )


def certify_problem(
    problem: FactorizationProblem, margin: int, budget: int = DEFAULT_BUDGET
) -> bool:
    """True iff the recorded truth wins exhaustive search by >= margin."""
    if problem.truth is None:
        raise ValueError("certify_problem requires problem.truth")
    result = brute_force_factorize(problem, budget=budget)
    return (
        result.best_indices == tuple(problem.truth)
        and result.margin >= margin
    )
