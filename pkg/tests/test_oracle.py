"""Correctness of the brute-force factorization oracle."""

from __future__ import annotations

import numpy as np
import pytest

from holofact import (
    Codebook,
    FactorizationProblem,
    OracleBudgetError,
    RngStream,
    bind,
    brute_force_factorize,
    certify_problem,
    gen_codebook,
    make_problem,
)


def test_recovers_truth_on_noiseless_query(stream):
    for trial in range(20):
        problem = make_problem([8, 4, 6], 256, stream.derive("exact", trial))
        result = brute_force_factorize(problem)
        assert result.best_indices == problem.truth
        assert result.best_similarity == 256
        assert result.unique
        assert result.margin > 0


def test_matches_exhaustive_numpy_scoring(stream):
    # Independent exhaustive scorer: outer product over all index tuples.
    problem = make_problem([5, 7], 64, stream.derive("cross"))
    a = problem.codebooks[0].vectors.astype(np.int64)
    b = problem.codebooks[1].vectors.astype(np.int64)
    q = problem.query.astype(np.int64)
    scores = np.einsum("in,jn->ij", a * q[None, :], b)
    best_flat = int(np.argmax(scores))
    expected = np.unravel_index(best_flat, scores.shape)
    result = brute_force_factorize(problem)
    assert result.best_indices == tuple(int(i) for i in expected)
    assert result.best_similarity == int(scores.max())
    runner_up = int(np.partition(scores.ravel(), -2)[-2])
    assert result.runner_up_similarity == runner_up


def test_noisy_query_still_found_with_reduced_similarity(stream):
    problem = make_problem([6, 6], 512, stream.derive("noisy"))
    query = problem.query.copy()
    flip = stream.derive("flips").generator().choice(512, size=20, replace=False)
    query[flip] *= -1
    noisy = FactorizationProblem(
        codebooks=problem.codebooks, query=query, truth=problem.truth
    )
    result = brute_force_factorize(noisy)
    assert result.best_indices == problem.truth
    assert result.best_similarity == 512 - 2 * 20


def test_tie_reports_non_unique_and_lowest_tuple():
    base = np.array([[1, 1, 1, 1], [1, 1, 1, 1], [1, -1, 1, -1]], dtype=np.int8)
    cb0 = Codebook(vectors=base)  # rows 0 and 1 identical: forced tie
    cb1 = Codebook(vectors=np.array([[1, 1, -1, -1], [-1, 1, -1, 1]], dtype=np.int8))
    query = bind([cb0.row(0), cb1.row(0)])
    problem = FactorizationProblem(codebooks=(cb0, cb1), query=query)
    result = brute_force_factorize(problem)
    assert result.best_indices == (0, 0)
    assert not result.unique
    assert result.margin == 0


def test_budget_guard(stream):
    problem = make_problem([16, 16, 16], 32, stream.derive("budget"))
    with pytest.raises(OracleBudgetError):
        brute_force_factorize(problem, budget=4095)
    # At exactly the budget the search is allowed.
    result = brute_force_factorize(problem, budget=4096)
    assert result.best_indices == problem.truth


def test_certify_problem(stream):
    problem = make_problem([4, 4], 256, stream.derive("certify"))
    assert certify_problem(problem, margin=1)
    assert not certify_problem(problem, margin=10**6)
    unlabeled = FactorizationProblem(
        codebooks=problem.codebooks, query=problem.query
    )
    with pytest.raises(ValueError):
        certify_problem(unlabeled, margin=1)


def test_single_factor_problem(stream):
    cb = gen_codebook(8, 128, stream.derive("single"))
    query = cb.row(5)
    problem = FactorizationProblem(codebooks=(cb,), query=query, truth=(5,))
    result = brute_force_factorize(problem)
    assert result.best_indices == (5,)
    assert result.best_similarity == 128
