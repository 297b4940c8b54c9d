"""Resonator-network factorization of bipolar product vectors.

Given a query vector ``s`` formed by binding one row from each of F
codebooks, the resonator loop maintains one bipolar estimate per factor and
repeats, for every factor f:

  unbind   u_f = s (*) all other current estimates
  similar  a_f = X_f u_f                (the similarity MVM)
  noise    a_f <- readout pipeline(a_f) (stochastic mode only)
  project  r_f = X_f^T a_f              (the projection MVM)
  activate e_f = sign(r_f)              (ties resolved by policy)

Factors are updated one after another within an iteration, each reading the
newest estimates of the others; this schedule is what reaches the published
operating points (a fully synchronous variant is available as
``update_schedule="jacobi"`` but converges far more slowly at scale, see
README).  The recovered index of a factor is the entry of the readout with
the largest magnitude: the iteration map commutes with negating any two
factor estimates, so converged states reproduce the query up to paired sign
flips and only |similarity| identifies the codevector.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .hv import Codebook, Hypervector
from .noise import NoiseModel, pipeline as noise_pipeline
from .rng import RngStream

__all__ = [
    "FactorizationProblem",
    "ResonatorConfig",
    "ResonatorState",
    "FactorizationResult",
    "OpCounters",
    "TrajectoryPoint",
    "make_problem",
    "init_state",
    "resonator_step",
    "factorize",
    "detect_limit_cycle",
    "default_iteration_cap",
    "trajectory_to_csv",
]

MAX_ITERATION_CAP = 10**6


@dataclass(frozen=True)
class FactorizationProblem:
    """F codebooks plus the product (query) vector to factorize.

    Attributes:
        codebooks: one codebook per factor, all sharing dimension N.
        query: the bound product vector s.
        truth: optional ground-truth indices (one per factor).
        metadata: free-form provenance notes (e.g. ingestion binarization).
    """

    codebooks: tuple[Codebook, ...]
    query: Hypervector
    truth: tuple[int, ...] | None = None
    metadata: dict | None = None

    def __post_init__(self) -> None:
        if len(self.codebooks) < 1:
            raise ValueError("problem requires at least one codebook")
        n = self.codebooks[0].N
        for i, cb in enumerate(self.codebooks):
            if cb.N != n:
                raise ValueError(f"codebook {i} has N={cb.N}, expected {n}")
        q = np.asarray(self.query)
        if q.ndim != 1 or q.shape[0] != n:
            raise ValueError(f"query shape {q.shape} does not match N={n}")
        if self.truth is not None:
            truth = tuple(int(t) for t in self.truth)
            if len(truth) != len(self.codebooks):
                raise ValueError("truth must have one index per factor")
            for f, (t, cb) in enumerate(zip(truth, self.codebooks)):
                if not 0 <= t < cb.M:
                    raise ValueError(f"truth index {t} out of range for factor {f} (M={cb.M})")
            object.__setattr__(self, "truth", truth)

    @property
    def F(self) -> int:
        return len(self.codebooks)

    @property
    def N(self) -> int:
        return self.codebooks[0].N

    def sizes(self) -> tuple[int, ...]:
        return tuple(cb.M for cb in self.codebooks)

    def search_space(self) -> int:
        out = 1
        for cb in self.codebooks:
            out *= cb.M
        return out


def make_problem(
    sizes: Sequence[int],
    n: int,
    rng: RngStream,
    labels: Sequence[str] | None = None,
) -> FactorizationProblem:
    """Generate random codebooks, draw a truth tuple, and bind the query."""
    from .hv import gen_codebook

    gen = rng.generator()
    codebooks = []
    for f, m in enumerate(sizes):
        label = labels[f] if labels is not None else f"factor{f}"
        codebooks.append(gen_codebook(m, n, gen, label=label))
    truth = tuple(int(gen.integers(0, cb.M)) for cb in codebooks)
    query = codebooks[0].row(truth[0]).astype(np.int8)
    for cb, t in zip(codebooks[1:], truth[1:]):
        query = (query * cb.row(t)).astype(np.int8)
    return FactorizationProblem(codebooks=tuple(codebooks), query=query, truth=truth)


def default_iteration_cap(search_space: int) -> int:
    """Default trial cap: min(10 * prod(M_f), 10**6)."""
    return min(10 * search_space, MAX_ITERATION_CAP)


@dataclass(frozen=True)
class ResonatorConfig:
    """All knobs of the factorization loop.

    Attributes:
        max_iterations: trial cap; None selects min(10 * prod M, 10**6).
        tie_policy: activation tie handling, "plus_one" or "random".
        init_policy: "bundle_all" (sign of codebook row sums) or "random_row".
        convergence_rule: "state_fixed_point" (estimates unchanged for one
            full iteration; deterministic mode) or "truth_match" (per-factor
            decoded index equals truth; the benchmark stopping rule).
        update_schedule: "sequential" (default) or "jacobi" (all factors read
            the previous iteration's estimates).
        stochastic: optional readout noise model; None runs deterministic.
        rng: stream owning every random draw of this run (init ties,
            activation coin flips, noise realizations).
        cycle_window: number of recent state digests retained for limit-cycle
            detection; None keeps the whole trajectory, which turns every
            revisited state into a detected cycle.
        abort_on_cycle: stop early when a state repeats; None enables this
            exactly when the trajectory is deterministic (no noise and
            plus_one ties), where a repeat proves the run can never converge.
        record_trajectory: keep per-iteration decode/similarity diagnostics.
    """

    max_iterations: int | None = None
    tie_policy: str = "plus_one"
    init_policy: str = "bundle_all"
    convergence_rule: str = "state_fixed_point"
    update_schedule: str = "sequential"
    stochastic: NoiseModel | None = None
    rng: RngStream = field(default_factory=lambda: RngStream(0, 0))
    cycle_window: int | None = 64
    abort_on_cycle: bool | None = None
    record_trajectory: bool = False

    def __post_init__(self) -> None:
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tie_policy not in ("plus_one", "random"):
            raise ValueError(f"unknown tie_policy {self.tie_policy!r}")
        if self.init_policy not in ("bundle_all", "random_row"):
            raise ValueError(f"unknown init_policy {self.init_policy!r}")
        if self.convergence_rule not in ("state_fixed_point", "truth_match"):
            raise ValueError(f"unknown convergence_rule {self.convergence_rule!r}")
        if self.update_schedule not in ("sequential", "jacobi"):
            raise ValueError(f"unknown update_schedule {self.update_schedule!r}")
        if self.cycle_window is not None and self.cycle_window < 1:
            raise ValueError("cycle_window must be >= 1 or None")

    def is_deterministic(self) -> bool:
        """True when the trajectory contains no random draws after init."""
        noise_free = self.stochastic is None or self.stochastic.is_deterministic
        return noise_free and self.tie_policy == "plus_one"


@dataclass(frozen=True)
class ResonatorState:
    """Per-factor bipolar estimates at iteration t."""

    estimates: tuple[Hypervector, ...]
    t: int


@dataclass(frozen=True)
class OpCounters:
    """Operation counts accumulated over a factorization run.

    similarity_mvm and projection_mvm count MVMs (F per iteration each);
    unbind counts product-vector unbindings (F per iteration); and
    activation_elems counts sign-activation element operations
    (F * N per iteration).  The two MVM kinds dominate runtime on CIM
    hardware, which is why they are tracked separately.
    """

    similarity_mvm: int = 0
    projection_mvm: int = 0
    unbind: int = 0
    activation_elems: int = 0


@dataclass(frozen=True)
class TrajectoryPoint:
    """Per-iteration diagnostics: decoded indices and their |similarity|."""

    t: int
    indices: tuple[int, ...]
    max_similarity: tuple[float, ...]


@dataclass(frozen=True)
class FactorizationResult:
    """Outcome of one factorization run.

    ``recovered`` holds the per-factor decode of the final iteration
    (argmax of readout magnitude, lowest index on ties); ``correct``
    compares it to truth when truth is known.  ``first_match_iteration``
    is the earliest iteration whose decode matched truth, tracked even
    when the stopping rule is state_fixed_point (it feeds cumulative
    accuracy-versus-iteration curves).  ``decode_margins`` gives, per
    factor, the |readout| gap between the decoded entry and the runner-up
    at the final iteration.
    """

    converged: bool
    iterations: int
    recovered: tuple[int, ...]
    correct: bool | None
    limit_cycle_detected: bool
    op_counters: OpCounters
    first_match_iteration: int | None = None
    decode_margins: tuple[float, ...] | None = None
    trajectory_hashes: tuple[int, ...] | None = None
    trajectory: tuple[TrajectoryPoint, ...] | None = None


def _sign_f32(
    pre: NDArray[np.float32],
    tie_policy: str,
    gen: np.random.Generator | None,
) -> NDArray[np.float32]:
    out = np.where(pre > 0, np.float32(1), np.float32(-1))
    ties = pre == 0
    if ties.any():
        if tie_policy == "plus_one" or gen is None:
            out[ties] = 1.0
        else:
            out[ties] = (
                gen.integers(0, 2, size=int(ties.sum())).astype(np.float32) * 2 - 1
            )
    return out


def _init_estimates_f32(
    problem: FactorizationProblem,
    config: ResonatorConfig,
    gen: np.random.Generator,
) -> list[NDArray[np.float32]]:
    tie_gen = gen if config.tie_policy == "random" else None
    estimates = []
    for cb in problem.codebooks:
        if config.init_policy == "bundle_all":
            pre = cb.as_float32().sum(axis=0)
            estimates.append(_sign_f32(pre, config.tie_policy, tie_gen))
        else:
            row = int(gen.integers(0, cb.M))
            estimates.append(cb.as_float32()[row].copy())
    return estimates


def init_state(problem: FactorizationProblem, config: ResonatorConfig) -> ResonatorState:
    """Build the t=0 state per the configured init policy."""
    gen = config.rng.generator()
    ests = _init_estimates_f32(problem, config, gen)
    return ResonatorState(
        estimates=tuple(e.astype(np.int8) for e in ests),
        t=0,
    )


def _state_digest(estimates: Sequence[NDArray[np.float32]]) -> int:
    packed = np.packbits(np.concatenate([e > 0 for e in estimates]))
    return int.from_bytes(
        hashlib.blake2b(packed.tobytes(), digest_size=8).digest(), "big"
    )


def detect_limit_cycle(
    history_digests: Sequence[int], new_digest: int, window: int | None = 64
) -> bool:
    """True iff `new_digest` occurs within the last `window` digests.

    `window=None` checks the entire history.  Digest collisions are 64-bit,
    so false positives are negligible over any desk-scale run.
    """
    recent = history_digests if window is None else history_digests[-window:]
    return new_digest in recent


def _step_factors(
    cbs: list[NDArray[np.float32]],
    estimates: list[NDArray[np.float32]],
    prod: NDArray[np.float32],
    config: ResonatorConfig,
    noise: NoiseModel | None,
    gen: np.random.Generator | None,
) -> tuple[NDArray[np.float32], list[int], list[NDArray[np.float32]]]:
    """Run one full iteration over all factors, in place.

    `prod` is the running product query (*) all current estimates; since
    estimates are bipolar, unbinding factor f is one multiplication:
    u_f = prod (*) e_f.  Returns the updated running product, the
    per-factor decoded indices, and the per-factor readout magnitudes.
    """
    tie_gen = gen if config.tie_policy == "random" else None
    jacobi = config.update_schedule == "jacobi"
    old = [e.copy() for e in estimates] if jacobi else None
    indices: list[int] = []
    mags: list[NDArray[np.float32]] = []
    for f, cb in enumerate(cbs):
        if jacobi:
            assert old is not None
            u = prod * old[f]
        else:
            u = prod * estimates[f]
        a = cb @ u
        if noise is not None:
            a = noise_pipeline(a, noise, gen).astype(np.float32)
        mag = np.abs(a)
        indices.append(int(np.argmax(mag)))
        mags.append(mag)
        r = cb.T @ a
        e_new = _sign_f32(r, config.tie_policy, tie_gen)
        if jacobi:
            estimates[f] = e_new
        else:
            prod = u * e_new
            estimates[f] = e_new
    if jacobi:
        assert old is not None
        prod = prod.copy()
        for e_old, e_new in zip(old, estimates):
            prod *= e_old * e_new
    return prod, indices, mags


def resonator_step(
    state: ResonatorState,
    problem: FactorizationProblem,
    config: ResonatorConfig,
    gen: np.random.Generator | None = None,
) -> ResonatorState:
    """Advance the state by one full iteration (all F factors).

    When `gen` is omitted, stochastic draws come from a stream derived from
    (config.rng, state.t) so that stepping is reproducible call by call.
    """
    noise = config.stochastic.resolved(problem.N) if config.stochastic else None
    if gen is None and (noise is not None or config.tie_policy == "random"):
        gen = config.rng.derive("step", state.t).generator()
    cbs = [cb.as_float32() for cb in problem.codebooks]
    ests = [e.astype(np.float32) for e in state.estimates]
    prod = problem.query.astype(np.float32)
    for e in ests:
        prod = prod * e
    _step_factors(cbs, ests, prod, config, noise, gen)
    return ResonatorState(
        estimates=tuple(e.astype(np.int8) for e in ests),
        t=state.t + 1,
    )


def factorize(
    problem: FactorizationProblem, config: ResonatorConfig
) -> FactorizationResult:
    """Run the resonator loop until convergence, a limit cycle, or the cap.

    The convergence rule, schedule, noise model, and all random draws are
    taken from `config`; identical (problem, config) pairs produce
    bit-identical results.
    """
    if config.convergence_rule == "truth_match" and problem.truth is None:
        raise ValueError("truth_match convergence requires problem.truth")
    noise = config.stochastic.resolved(problem.N) if config.stochastic else None
    cap = (
        config.max_iterations
        if config.max_iterations is not None
        else default_iteration_cap(problem.search_space())
    )
    needs_rng = (
        (noise is not None and not noise.is_deterministic)
        or config.tie_policy == "random"
        or config.init_policy == "random_row"
    )
    gen = config.rng.generator() if needs_rng else None

    cbs = [cb.as_float32() for cb in problem.codebooks]
    init_gen = gen if gen is not None else config.rng.generator()
    ests = _init_estimates_f32(problem, config, init_gen)
    prod = problem.query.astype(np.float32)
    for e in ests:
        prod = prod * e

    deterministic = config.is_deterministic()
    abort_on_cycle = (
        config.abort_on_cycle if config.abort_on_cycle is not None else deterministic
    )
    track_cycles = abort_on_cycle or (config.record_trajectory and deterministic)
    all_digests: list[int] = []
    window_list: deque[int] = deque()
    window_counts: dict[int, int] = {}
    trajectory: list[TrajectoryPoint] = []

    truth = problem.truth
    first_match: int | None = None
    limit_cycle = False
    converged = False
    iterations = 0
    last_indices: tuple[int, ...] = tuple(0 for _ in cbs)
    f_count = len(cbs)
    n = problem.N

    prev_states: list[NDArray[np.float32]] | None = None
    if config.convergence_rule == "state_fixed_point":
        prev_states = [e.copy() for e in ests]

    last_mags: list[NDArray[np.float32]] = []
    for t in range(1, cap + 1):
        prod, indices, last_mags = _step_factors(cbs, ests, prod, config, noise, gen)
        iterations = t
        last_indices = tuple(indices)
        if config.record_trajectory:
            peaks = tuple(float(m[i]) for m, i in zip(last_mags, indices))
            trajectory.append(
                TrajectoryPoint(t=t, indices=last_indices, max_similarity=peaks)
            )
        if truth is not None and first_match is None and last_indices == truth:
            first_match = t
        if config.convergence_rule == "truth_match":
            if last_indices == truth:
                converged = True
                break
        else:
            assert prev_states is not None
            if all(np.array_equal(a, b) for a, b in zip(prev_states, ests)):
                converged = True
                break
            prev_states = [e.copy() for e in ests]
        if track_cycles:
            d = _state_digest(ests)
            if d in window_counts:
                limit_cycle = True
                if abort_on_cycle:
                    break
            if config.record_trajectory:
                all_digests.append(d)
            window_list.append(d)
            window_counts[d] = window_counts.get(d, 0) + 1
            if config.cycle_window is not None and len(window_list) > config.cycle_window:
                oldest = window_list.popleft()
                window_counts[oldest] -= 1
                if window_counts[oldest] == 0:
                    del window_counts[oldest]

    counters = OpCounters(
        similarity_mvm=f_count * iterations,
        projection_mvm=f_count * iterations,
        unbind=f_count * iterations,
        activation_elems=f_count * n * iterations,
    )
    correct = None if truth is None else (last_indices == truth)
    margins = None
    if last_mags:
        margins = tuple(
            float(m[i] - np.partition(m, -2)[-2]) if m.size >= 2 else float(m[i])
            for m, i in zip(last_mags, last_indices)
        )
    return FactorizationResult(
        converged=converged,
        iterations=iterations,
        recovered=last_indices,
        correct=correct,
        limit_cycle_detected=limit_cycle,
        op_counters=counters,
        first_match_iteration=first_match,
        decode_margins=margins,
        trajectory_hashes=tuple(all_digests) if all_digests else None,
        trajectory=tuple(trajectory) if config.record_trajectory else None,
    )


def trajectory_to_csv(result: FactorizationResult, path: str) -> None:
    """Dump per-iteration diagnostics of a run recorded with
    ``record_trajectory=True``: decoded index and readout peak per factor,
    plus the limit-cycle flag (set on the final row when one was detected).
    """
    if result.trajectory is None:
        raise ValueError("result has no trajectory (set record_trajectory=True)")
    f_count = len(result.recovered)
    cols = ["t"]
    cols += [f"factor{f}_index" for f in range(f_count)]
    cols += [f"factor{f}_peak" for f in range(f_count)]
    cols.append("limit_cycle")
    last_t = result.trajectory[-1].t if result.trajectory else -1
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for point in result.trajectory:
            flag = 1 if (result.limit_cycle_detected and point.t == last_t) else 0
            row = [str(point.t)]
            row += [str(i) for i in point.indices]
            row += [f"{v:.1f}" for v in point.max_similarity]
            row.append(str(flag))
            fh.write(",".join(row) + "\n")
