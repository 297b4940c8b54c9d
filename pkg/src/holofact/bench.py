"""Monte-Carlo benchmark harness: sweeps, capacity search, ADC study,
chip-stats validation, and run manifests.

Every cell of an experiment is a (mode, F, M) point executed over
independent seeded trials.  Trial streams are derived from the master seed
and the trial's structured identity, never from execution order, so results
are byte-identical across repeat runs and across thread counts.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .noise import (
    CALIBRATED_SIGMA_REL,
    CALIBRATED_THRESHOLD_FRAC,
    ChipNoiseStats,
    NoiseModel,
    calibrated_vtgt,
    load_chip_stats,
)
from .resonator import (
    FactorizationResult,
    ResonatorConfig,
    default_iteration_cap,
    factorize,
    make_problem,
)
from .rng import RngStream

__all__ = [
    "ExperimentSpec",
    "CellResult",
    "SweepResult",
    "CapacityResult",
    "AdcStudyResult",
    "ChipValidationResult",
    "run_sweep",
    "run_capacity",
    "run_adc_study",
    "run_chip_validation",
    "load_experiment_spec",
    "config_digest",
    "write_sweep_csv",
    "write_capacity_csv",
    "write_adc_study_csv",
    "write_chip_validation_csv",
    "write_manifest",
]

DESK_ITERATION_CAP = 100_000
EXTENDED_ITERATION_CAP = 1_000_000
ACCURACY_TARGET_PCT = 99.0


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of a sweep.

    `modes` may contain "deterministic" and/or "stochastic".  The noise
    fields describe the stochastic mode's readout model; adc_bits applies
    to the stochastic mode only (the deterministic baseline is an ideal
    readout by definition).  vtgt_scale None means "use the calibrated
    per-size sensing schedule", resolved against each cell's codebook size;
    a float pins one scale for every cell.
    """

    f_values: tuple[int, ...] = (3,)
    m_values: tuple[int, ...] = (16, 32, 64)
    n: int = 1024
    modes: tuple[str, ...] = ("deterministic", "stochastic")
    sigma_rel: float = CALIBRATED_SIGMA_REL
    adc_bits: int | str = 4
    adc_range: float | None = None
    vtgt_scale: float | None = None
    threshold_frac: float = CALIBRATED_THRESHOLD_FRAC
    stats_file: str | None = None
    trials: int = 1000
    master_seed: int = 0
    max_iterations: int | None = None
    extended: bool = False
    threads: int = 1
    tie_policy: str = "auto"
    init_policy: str = "bundle_all"
    update_schedule: str = "sequential"
    cycle_window: int | None = 64

    def __post_init__(self) -> None:
        for mode in self.modes:
            if mode not in ("deterministic", "stochastic"):
                raise ValueError(f"unknown mode {mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.tie_policy not in ("auto", "plus_one", "random"):
            raise ValueError(f"unknown tie_policy {self.tie_policy!r}")

    def iteration_cap(self, search_space: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        ceiling = EXTENDED_ITERATION_CAP if self.extended else DESK_ITERATION_CAP
        return min(default_iteration_cap(search_space), ceiling)

    def noise_model(
        self, adc_bits: int | str | None = None, max_m: int | None = None
    ) -> NoiseModel:
        """The stochastic mode's readout model (reads stats_file if set).

        With vtgt_scale unset the sensing scale comes from the calibrated
        schedule for ``max_m`` (falling back to the mid-size default when
        no size is given).
        """
        bits = self.adc_bits if adc_bits is None else adc_bits
        stats: ChipNoiseStats | None = None
        source = "analytic"
        if self.stats_file:
            stats = load_chip_stats(self.stats_file)
            source = "imported"
        if self.vtgt_scale is not None:
            vtgt = self.vtgt_scale
        elif max_m is not None:
            vtgt = calibrated_vtgt(max_m)
        else:
            vtgt = calibrated_vtgt(max(self.m_values))
        return NoiseModel(
            sigma_rel=self.sigma_rel,
            adc_bits=bits,
            adc_range=self.adc_range,
            vtgt_scale=vtgt,
            threshold_frac=self.threshold_frac,
            stats_source=source,
            chip_stats=stats,
        )


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of one sweep cell."""

    mode: str
    f: int
    m: int
    n: int
    sigma_rel: float
    adc_bits: int | str
    vtgt_scale: float
    trials: int
    successes: int
    mean_iterations: float | None
    median_iterations: float | None
    failures_cycle: int
    failures_cap: int
    similarity_mvms: int
    projection_mvms: int
    unbinds: int
    wall_s: float
    first_match: tuple[int, ...] = field(default=(), repr=False)

    @property
    def accuracy_pct(self) -> float:
        return 100.0 * self.successes / self.trials


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[CellResult, ...]
    spec: ExperimentSpec

    def cell(self, mode: str, f: int, m: int) -> CellResult:
        for c in self.cells:
            if (c.mode, c.f, c.m) == (mode, f, m):
                return c
        raise KeyError(f"no cell ({mode}, F={f}, M={m})")


def _trial_streams(master_seed: int, mode_tag: str, f: int, m: int, n: int, trial: int):
    root = RngStream(master_seed)
    problem_stream = root.derive("problem", f, m, n, trial)
    run_stream = root.derive("run", mode_tag, f, m, n, trial)
    return problem_stream, run_stream


def _run_trial(
    spec: ExperimentSpec,
    mode: str,
    mode_tag: str,
    f: int,
    m: int,
    noise: NoiseModel | None,
    trial: int,
) -> FactorizationResult:
    problem_stream, run_stream = _trial_streams(
        spec.master_seed, mode_tag, f, m, spec.n, trial
    )
    problem = make_problem((m,) * f, spec.n, problem_stream)
    if spec.tie_policy == "auto":
        tie_policy = "plus_one" if noise is None else "random"
    else:
        tie_policy = spec.tie_policy
    config = ResonatorConfig(
        max_iterations=spec.iteration_cap(problem.search_space()),
        tie_policy=tie_policy,
        init_policy=spec.init_policy,
        convergence_rule="truth_match",
        update_schedule=spec.update_schedule,
        stochastic=noise,
        rng=run_stream,
        cycle_window=spec.cycle_window,
    )
    return factorize(problem, config)


def _run_cell(
    spec: ExperimentSpec,
    mode: str,
    f: int,
    m: int,
    adc_bits: int | str | None = None,
) -> CellResult:
    noise = None
    bits: int | str = "ideal"
    vtgt = 1.0
    if mode == "stochastic":
        noise = spec.noise_model(adc_bits, max_m=m)
        bits = noise.adc_bits
        vtgt = noise.vtgt_scale
    mode_tag = f"{mode}:{spec.sigma_rel:g}:{bits}" if mode == "stochastic" else mode
    t0 = time.perf_counter()

    def one(trial: int) -> FactorizationResult:
        return _run_trial(spec, mode, mode_tag, f, m, noise, trial)

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(one, range(spec.trials)))
    else:
        results = [one(t) for t in range(spec.trials)]
    wall = time.perf_counter() - t0

    iters_ok = [r.iterations for r in results if r.correct]
    cyc = sum(1 for r in results if not r.correct and r.limit_cycle_detected)
    cap = sum(1 for r in results if not r.correct and not r.limit_cycle_detected)
    first_match = tuple(
        r.first_match_iteration for r in results if r.first_match_iteration is not None
    )
    return CellResult(
        mode=mode,
        f=f,
        m=m,
        n=spec.n,
        sigma_rel=spec.sigma_rel if mode == "stochastic" else 0.0,
        adc_bits=bits,
        vtgt_scale=vtgt,
        trials=spec.trials,
        successes=len(iters_ok),
        mean_iterations=float(np.mean(iters_ok)) if iters_ok else None,
        median_iterations=float(np.median(iters_ok)) if iters_ok else None,
        failures_cycle=cyc,
        failures_cap=cap,
        similarity_mvms=sum(r.op_counters.similarity_mvm for r in results),
        projection_mvms=sum(r.op_counters.projection_mvm for r in results),
        unbinds=sum(r.op_counters.unbind for r in results),
        wall_s=wall,
        first_match=first_match,
    )


def run_sweep(spec: ExperimentSpec) -> SweepResult:
    """Execute every (mode, F, M) cell of the spec."""
    cells = []
    for mode in spec.modes:
        for f in spec.f_values:
            for m in spec.m_values:
                cells.append(_run_cell(spec, mode, f, m))
    return SweepResult(cells=tuple(cells), spec=spec)


@dataclass(frozen=True)
class CapacityResult:
    """Largest passing codebook size (and search space) per mode."""

    f: int
    per_mode: dict[str, tuple[int, int]]  # mode -> (max passing M, prod M^F)
    cells: tuple[CellResult, ...]

    def capacity_ratio(self) -> float | None:
        """Stochastic over deterministic search-space ratio, when both ran."""
        if "stochastic" not in self.per_mode or "deterministic" not in self.per_mode:
            return None
        s = self.per_mode["stochastic"][1]
        d = self.per_mode["deterministic"][1]
        if d == 0:
            return float("inf") if s > 0 else None
        return s / d


def run_capacity(spec: ExperimentSpec) -> CapacityResult:
    """Escalate M at fixed F until accuracy drops below the 99% target.

    Walks spec.m_values in increasing order per mode and stops at the first
    failing size (larger sizes would only be slower to fail).
    """
    if len(spec.f_values) != 1:
        raise ValueError("capacity search runs at a single F; give one f_value")
    f = spec.f_values[0]
    sizes = sorted(spec.m_values)
    per_mode: dict[str, tuple[int, int]] = {}
    cells: list[CellResult] = []
    for mode in spec.modes:
        best = (0, 0)
        for m in sizes:
            cell = _run_cell(spec, mode, f, m)
            cells.append(cell)
            if cell.accuracy_pct >= ACCURACY_TARGET_PCT:
                best = (m, m**f)
            else:
                break
        per_mode[mode] = best
    return CapacityResult(f=f, per_mode=per_mode, cells=tuple(cells))


@dataclass(frozen=True)
class AdcStudyResult:
    """Cumulative accuracy-versus-iteration curves per ADC precision.

    Keys are ADC bit widths, the string "ideal" (noisy but unquantized),
    or "deterministic" (the noise-free reference).
    """

    f: int
    m: int
    variants: tuple[int | str, ...]
    cells: dict[int | str, CellResult]
    curves: dict[int | str, tuple[tuple[int, float], ...]]  # key -> ((t, pct), ...)
    iterations_to_target: dict[int | str, int | None]


def _cumulative_curve(
    first_match: tuple[int, ...], trials: int, cap: int
) -> tuple[tuple[int, float], ...]:
    """Fraction of trials whose decode first matched truth by iteration t."""
    if not first_match:
        return ((cap, 0.0),)
    counts = np.bincount(np.asarray(first_match), minlength=cap + 1)
    cum = np.cumsum(counts)
    last = max(first_match)
    return tuple(
        (t, 100.0 * float(cum[t]) / trials) for t in range(1, last + 1)
    )


def run_adc_study(
    spec: ExperimentSpec,
    variants: tuple[int | str, ...] = (4, 8, "ideal", "deterministic"),
) -> AdcStudyResult:
    """Compare convergence speed across ADC precisions at one (F, M) cell."""
    if len(spec.f_values) != 1 or len(spec.m_values) != 1:
        raise ValueError("adc study runs a single (F, M) cell")
    f, m = spec.f_values[0], spec.m_values[0]
    cells: dict[int | str, CellResult] = {}
    curves: dict[int | str, tuple[tuple[int, float], ...]] = {}
    to_target: dict[int | str, int | None] = {}
    cap = spec.iteration_cap(m**f)
    for variant in variants:
        if variant == "deterministic":
            cell = _run_cell(spec, "deterministic", f, m)
        else:
            cell = _run_cell(spec, "stochastic", f, m, adc_bits=variant)
        cells[variant] = cell
        curve = _cumulative_curve(cell.first_match, cell.trials, cap)
        curves[variant] = curve
        reach = None
        for t, pct in curve:
            if pct >= ACCURACY_TARGET_PCT:
                reach = t
                break
        to_target[variant] = reach
    return AdcStudyResult(
        f=f, m=m, variants=tuple(variants), cells=cells, curves=curves,
        iterations_to_target=to_target,
    )


@dataclass(frozen=True)
class ChipValidationResult:
    """Imported-stats run: one-shot accuracy and iterations to the target."""

    cell: CellResult
    one_shot_accuracy_pct: float
    iterations_to_target: int | None
    curve: tuple[tuple[int, float], ...]


def run_chip_validation(stats_path: str, spec: ExperimentSpec) -> ChipValidationResult:
    """Run the stochastic mode with a chip-measured noise table."""
    if len(spec.f_values) != 1 or len(spec.m_values) != 1:
        raise ValueError("chip validation runs a single (F, M) cell")
    spec = replace(spec, stats_file=stats_path, modes=("stochastic",))
    f, m = spec.f_values[0], spec.m_values[0]
    cell = _run_cell(spec, "stochastic", f, m)
    cap = spec.iteration_cap(m**f)
    curve = _cumulative_curve(cell.first_match, cell.trials, cap)
    one_shot = 0.0
    for t, pct in curve:
        if t == 1:
            one_shot = pct
        break
    reach = None
    for t, pct in curve:
        if pct >= ACCURACY_TARGET_PCT:
            reach = t
            break
    return ChipValidationResult(
        cell=cell,
        one_shot_accuracy_pct=one_shot,
        iterations_to_target=reach,
        curve=curve,
    )


# ---------------------------------------------------------------------------
# Config files, CSV emission, manifests


def _parse_tuple_int(raw: str) -> tuple[int, ...]:
    return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())


def load_experiment_spec(path: str, overrides: dict | None = None) -> ExperimentSpec:
    """Parse an INI experiment config ([sweep], [noise], [resonator] sections).

    `overrides` (e.g. from CLI flags) replace the corresponding fields after
    parsing.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    kwargs: dict = {}
    if "sweep" in parser:
        s = parser["sweep"]
        if "f_values" in s:
            kwargs["f_values"] = _parse_tuple_int(s["f_values"])
        if "m_values" in s:
            kwargs["m_values"] = _parse_tuple_int(s["m_values"])
        if "n" in s:
            kwargs["n"] = s.getint("n")
        if "modes" in s:
            kwargs["modes"] = tuple(
                tok.strip() for tok in s["modes"].split(",") if tok.strip()
            )
        if "trials" in s:
            kwargs["trials"] = s.getint("trials")
        if "max_iterations" in s and s["max_iterations"].strip():
            kwargs["max_iterations"] = s.getint("max_iterations")
        if "extended" in s:
            kwargs["extended"] = s.getboolean("extended")
        if "master_seed" in s:
            kwargs["master_seed"] = s.getint("master_seed")
    if "noise" in parser:
        nsec = parser["noise"]
        if "sigma_rel" in nsec:
            kwargs["sigma_rel"] = nsec.getfloat("sigma_rel")
        if "adc_bits" in nsec:
            raw = nsec["adc_bits"].strip()
            kwargs["adc_bits"] = raw if raw == "ideal" else int(raw)
        if "adc_range" in nsec and nsec["adc_range"].strip():
            kwargs["adc_range"] = nsec.getfloat("adc_range")
        if "vtgt_scale" in nsec:
            raw = nsec["vtgt_scale"].strip()
            kwargs["vtgt_scale"] = None if raw.lower() == "auto" else float(raw)
        if "threshold_frac" in nsec:
            kwargs["threshold_frac"] = nsec.getfloat("threshold_frac")
        if "stats_file" in nsec and nsec["stats_file"].strip():
            kwargs["stats_file"] = nsec["stats_file"].strip()
    if "resonator" in parser:
        r = parser["resonator"]
        if "tie_policy" in r:
            kwargs["tie_policy"] = r["tie_policy"].strip()
        if "init_policy" in r:
            kwargs["init_policy"] = r["init_policy"].strip()
        if "update_schedule" in r:
            kwargs["update_schedule"] = r["update_schedule"].strip()
        if "cycle_window" in r and r["cycle_window"].strip():
            raw = r["cycle_window"].strip()
            kwargs["cycle_window"] = None if raw.lower() == "none" else int(raw)
    if overrides:
        kwargs.update(overrides)
    return ExperimentSpec(**kwargs)


def config_digest(path: str | None, spec: ExperimentSpec | None = None) -> str:
    """SHA-256 of the config file bytes, or of the spec repr when no file."""
    h = hashlib.sha256()
    if path is not None:
        h.update(Path(path).read_bytes())
    elif spec is not None:
        h.update(repr(spec).encode("utf-8"))
    else:
        raise ValueError("config_digest needs a path or a spec")
    return h.hexdigest()


def _fmt(value: float | None, precision: int = 3) -> str:
    if value is None:
        return "nan"
    return f"{value:.{precision}f}"


def write_sweep_csv(result: SweepResult, path: str, digest: str) -> None:
    """Emit one row per cell; deterministic byte-for-byte given the spec."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "mode", "F", "M", "N", "sigma_rel", "adc_bits", "vtgt_scale",
                "trials", "accuracy_pct", "mean_iterations",
                "median_iterations", "failures_cycle", "failures_cap",
                "similarity_mvms", "projection_mvms", "unbinds",
            ]
        )
        for c in result.cells:
            writer.writerow(
                [
                    c.mode, c.f, c.m, c.n, f"{c.sigma_rel:g}", str(c.adc_bits),
                    f"{c.vtgt_scale:g}", c.trials, f"{c.accuracy_pct:.1f}",
                    _fmt(c.mean_iterations), _fmt(c.median_iterations, 1),
                    c.failures_cycle, c.failures_cap,
                    c.similarity_mvms, c.projection_mvms, c.unbinds,
                ]
            )


def write_capacity_csv(result: CapacityResult, path: str, digest: str) -> None:
    """Per-mode ceilings first, then the cells that were run."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "F", "max_passing_M", "search_space"])
        for mode, (m, space) in result.per_mode.items():
            writer.writerow([mode, result.f, m, space])
        ratio = result.capacity_ratio()
        if ratio is not None:
            writer.writerow(["capacity_ratio", result.f, "", f"{ratio:.3f}"])
        writer.writerow([])
        writer.writerow(["mode", "F", "M", "trials", "accuracy_pct"])
        for c in result.cells:
            writer.writerow([c.mode, c.f, c.m, c.trials, f"{c.accuracy_pct:.1f}"])


def write_adc_study_csv(
    result: AdcStudyResult, curves_path: str, summary_path: str, digest: str
) -> None:
    with open(curves_path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "iteration", "cumulative_accuracy_pct"])
        for variant in result.variants:
            for t, pct in result.curves[variant]:
                writer.writerow([str(variant), t, f"{pct:.1f}"])
    with open(summary_path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["variant", "trials", "accuracy_pct", "mean_iterations",
             "iterations_to_99pct"]
        )
        for variant in result.variants:
            cell = result.cells[variant]
            reach = result.iterations_to_target[variant]
            writer.writerow(
                [
                    str(variant), cell.trials, f"{cell.accuracy_pct:.1f}",
                    _fmt(cell.mean_iterations),
                    "never" if reach is None else reach,
                ]
            )


def write_chip_validation_csv(
    result: ChipValidationResult, curve_path: str, summary_path: str, digest: str
) -> None:
    with open(curve_path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "cumulative_accuracy_pct"])
        for t, pct in result.curve:
            writer.writerow([t, f"{pct:.1f}"])
    with open(summary_path, "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["trials", "accuracy_pct", "one_shot_accuracy_pct",
             "iterations_to_99pct", "mean_iterations"]
        )
        reach = result.iterations_to_target
        writer.writerow(
            [
                result.cell.trials,
                f"{result.cell.accuracy_pct:.1f}",
                f"{result.one_shot_accuracy_pct:.1f}",
                "never" if reach is None else reach,
                _fmt(result.cell.mean_iterations),
            ]
        )


def write_manifest(
    path: str,
    command: str,
    digest: str,
    master_seed: int,
    wall_s: float,
    outputs: list[str],
    extra: dict[str, str] | None = None,
) -> None:
    """Write the run manifest (key=value lines)."""
    lines = [
        f"command={command}",
        f"config_digest={digest}",
        f"master_seed={master_seed}",
        f"version={__version__}",
        f"wall_s={wall_s:.3f}",
        f"outputs={','.join(outputs)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
