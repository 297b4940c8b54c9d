"""Command-line benchmark harness.

Subcommands: sweep, capacity, adc-study, chip-validate, perception, ppa,
oracle-check, verify.  Every experiment run writes a manifest recording the
config digest, master seed, package version, and wall time; result CSVs
carry the digest on their first line so `verify` can cross-check them.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from ._version import __version__
from .bench import (
    ExperimentSpec,
    config_digest,
    load_experiment_spec,
    run_adc_study,
    run_capacity,
    run_chip_validation,
    run_sweep,
    write_adc_study_csv,
    write_capacity_csv,
    write_chip_validation_csv,
    write_manifest,
    write_sweep_csv,
)
from .noise import NoiseModel
from .oracle import brute_force_factorize
from .perception import (
    CorruptionSpec,
    SceneSpec,
    default_codebooks,
    encode_scene,
    evaluate_perception,
)
from .ppa import DESIGN_KINDS, compare, default_config, evaluate, load_ppa_config
from .resonator import ResonatorConfig, factorize, make_problem
from .rng import RngStream

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message: str):  # noqa: D102 - argparse contract
        raise _UsageError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (INI)")
    parser.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    parser.add_argument("--trials", type=int, help="override trials per cell")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")


def _build_parser() -> _Parser:
    parser = _Parser(prog="holofact", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="accuracy/iteration sweep over (mode, F, M)")
    _add_common(p)
    p.add_argument("--extended", action="store_true",
                   help="raise the iteration ceiling to 1e6 (multi-hour cells)")

    p = sub.add_parser("capacity", help="largest passing codebook size per mode")
    _add_common(p)

    p = sub.add_parser("adc-study", help="convergence curves per ADC precision")
    _add_common(p)

    p = sub.add_parser("chip-validate", help="run with an imported chip-noise table")
    _add_common(p)
    p.add_argument("--stats", required=True, help="chip-noise CSV path")

    p = sub.add_parser("perception", help="scene attribute recovery benchmark")
    _add_common(p)
    p.add_argument("--scenes", type=int, default=1000, help="number of scenes")
    p.add_argument("--flip-fraction", type=float, default=0.05,
                   help="fraction of query coordinates flipped")

    p = sub.add_parser("ppa", help="area/throughput/energy report per design")
    p.add_argument("--config", help="design config file (INI)")
    p.add_argument("--out", help="optional output directory for the CSV report")

    p = sub.add_parser("oracle-check", help="resonator vs brute-force agreement")
    _add_common(p)
    p.add_argument("--problems", type=int, default=500, help="number of problems")
    p.add_argument("--max-space", type=int, default=4096,
                   help="largest allowed product of codebook sizes")

    p = sub.add_parser("verify", help="recompute and match manifest digests")
    p.add_argument("--out", default="results", help="directory holding manifest.txt")
    p.add_argument("--config", help="config file to re-digest (optional)")
    return parser


def _spec_from_args(args, defaults: ExperimentSpec | None = None) -> ExperimentSpec:
    overrides: dict = {"master_seed": args.seed, "threads": args.threads}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if getattr(args, "extended", False):
        overrides["extended"] = True
    if args.config:
        return load_experiment_spec(args.config, overrides)
    base = defaults if defaults is not None else ExperimentSpec()
    return replace(base, **overrides)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _digest(args, spec) -> str:
    return config_digest(args.config, spec) if args.config else config_digest(None, spec)


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    out = _out_dir(args)
    digest = _digest(args, spec)
    t0 = time.perf_counter()
    result = run_sweep(spec)
    wall = time.perf_counter() - t0
    write_sweep_csv(result, str(out / "sweep.csv"), digest)
    write_manifest(
        str(out / "manifest.txt"), "sweep", digest, spec.master_seed, wall,
        ["sweep.csv"],
    )
    for cell in result.cells:
        print(
            f"{cell.mode} F={cell.f} M={cell.m}: {cell.accuracy_pct:.1f}% "
            f"(mean its {cell.mean_iterations if cell.mean_iterations is None else round(cell.mean_iterations, 1)})"
        )
    return 0


def _cmd_capacity(args) -> int:
    defaults = ExperimentSpec(f_values=(4,), m_values=(16, 32, 64), trials=200)
    spec = _spec_from_args(args, defaults)
    out = _out_dir(args)
    digest = _digest(args, spec)
    t0 = time.perf_counter()
    result = run_capacity(spec)
    wall = time.perf_counter() - t0
    write_capacity_csv(result, str(out / "capacity.csv"), digest)
    extra = {}
    ratio = result.capacity_ratio()
    if ratio is not None:
        extra["capacity_ratio"] = f"{ratio:.3f}"
    write_manifest(
        str(out / "manifest.txt"), "capacity", digest, spec.master_seed, wall,
        ["capacity.csv"], extra,
    )
    for mode, (m, space) in result.per_mode.items():
        print(f"{mode}: max passing M={m} (search space {space})")
    if ratio is not None:
        print(f"capacity ratio (stochastic/deterministic): {ratio:.1f}x")
    return 0


def _cmd_adc_study(args) -> int:
    defaults = ExperimentSpec(
        f_values=(3,), m_values=(128,), trials=300, max_iterations=10000
    )
    spec = _spec_from_args(args, defaults)
    out = _out_dir(args)
    digest = _digest(args, spec)
    t0 = time.perf_counter()
    result = run_adc_study(spec)
    wall = time.perf_counter() - t0
    write_adc_study_csv(
        result, str(out / "adc_curves.csv"), str(out / "adc_summary.csv"), digest
    )
    write_manifest(
        str(out / "manifest.txt"), "adc-study", digest, spec.master_seed, wall,
        ["adc_curves.csv", "adc_summary.csv"],
    )
    for variant in result.variants:
        reach = result.iterations_to_target[variant]
        print(
            f"adc={variant}: accuracy {result.cells[variant].accuracy_pct:.1f}%, "
            f"99% cumulative at iteration {reach if reach is not None else 'never'}"
        )
    return 0


def _cmd_chip_validate(args) -> int:
    defaults = ExperimentSpec(f_values=(3,), m_values=(16,), trials=1000)
    spec = _spec_from_args(args, defaults)
    out = _out_dir(args)
    digest = _digest(args, spec)
    t0 = time.perf_counter()
    result = run_chip_validation(args.stats, spec)
    wall = time.perf_counter() - t0
    write_chip_validation_csv(
        result, str(out / "chip_curve.csv"), str(out / "chip_summary.csv"), digest
    )
    write_manifest(
        str(out / "manifest.txt"), "chip-validate", digest, spec.master_seed, wall,
        ["chip_curve.csv", "chip_summary.csv"], {"stats_file": args.stats},
    )
    reach = result.iterations_to_target
    print(f"one-shot accuracy: {result.one_shot_accuracy_pct:.1f}%")
    print(f"99% cumulative at iteration {reach if reach is not None else 'never'}")
    return 0


def _cmd_perception(args) -> int:
    out = _out_dir(args)
    scene_spec = SceneSpec()
    corruption = CorruptionSpec(flip_fraction=args.flip_fraction)
    stream = RngStream(args.seed)
    codebooks = default_codebooks(1024, stream.derive("codebooks"), scene_spec)
    problems = [
        encode_scene(scene_spec, codebooks, corruption, stream.derive("scene", i))
        for i in range(args.scenes)
    ]
    config = ResonatorConfig(
        convergence_rule="truth_match",
        tie_policy="random",
        stochastic=NoiseModel.calibrated_default(
            max_m=max(scene_spec.codebook_sizes)
        ),
        rng=stream.derive("resonator"),
    )
    t0 = time.perf_counter()
    report = evaluate_perception(problems, config)
    wall = time.perf_counter() - t0
    spec_repr = (
        f"perception scenes={args.scenes} flip={args.flip_fraction} "
        f"sizes={scene_spec.codebook_sizes}"
    )
    digest = config_digest(args.config, None) if args.config else _hash_text(spec_repr)
    report.to_csv(str(out / "perception.csv"), digest)
    write_manifest(
        str(out / "manifest.txt"), "perception", digest, args.seed, wall,
        ["perception.csv"],
        {"scenes": str(args.scenes), "flip_fraction": str(args.flip_fraction)},
    )
    if report.per_attribute is not None and report.overall is not None:
        for name, acc in zip(report.attributes, report.per_attribute):
            print(f"{name}: {100.0 * acc:.1f}%")
        print(f"all attributes correct: {100.0 * report.overall:.1f}%")
    return 0


def _hash_text(text: str) -> str:
    import hashlib

    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _cmd_ppa(args) -> int:
    if args.config:
        configs = [load_ppa_config(args.config)]
    else:
        configs = [default_config(kind) for kind in DESIGN_KINDS]
    reports = [evaluate(c) for c in configs]
    for report in reports:
        print(report.to_text())
        print()
    if len(reports) == 3:
        by_kind = {r.design_kind: r for r in reports}
        h3d = by_kind["h3d_3tier"]
        sram = by_kind["sram_2d"]
        hybrid = by_kind["hybrid_2d"]
        vs_sram = compare(h3d, sram)
        vs_hybrid = compare(h3d, hybrid)
        print("ratios of the stacked design over the planar designs:")
        print(f"  area vs planar SRAM: {vs_sram['area_ratio']:.2f}x smaller")
        print(f"  area vs planar hybrid: {vs_hybrid['area_ratio']:.2f}x smaller")
        print(f"  compute density vs planar hybrid: {vs_hybrid['density_ratio']:.2f}x")
        print(f"  energy efficiency vs planar SRAM: {vs_sram['efficiency_ratio']:.2f}x")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        digest = (
            config_digest(args.config, None)
            if args.config
            else _hash_text("ppa-defaults")
        )
        path = out / "ppa.csv"
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(f"# config_digest={digest}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["design", "metric", "value"])
            for report in reports:
                for key, value in report.to_csv_rows():
                    writer.writerow([report.design_kind, key, value])
        write_manifest(
            str(out / "manifest.txt"), "ppa", digest, 0, 0.0, ["ppa.csv"]
        )
    return 0


def _cmd_oracle_check(args) -> int:
    out = _out_dir(args)
    stream = RngStream(args.seed)
    n = 1024
    shapes = [(2, 64), (2, 32), (3, 16), (3, 8), (4, 8)]
    shapes = [s for s in shapes if s[1] ** s[0] <= args.max_space]
    mismatches = 0
    converged_count = 0
    rows = []
    t0 = time.perf_counter()
    for i in range(args.problems):
        f, m = shapes[i % len(shapes)]
        problem_stream = stream.derive("oracle-check", i)
        problem = make_problem((m,) * f, n, problem_stream)
        config = ResonatorConfig(
            convergence_rule="state_fixed_point",
            rng=problem_stream.derive("run"),
        )
        res = factorize(problem, config)
        oracle = brute_force_factorize(problem.codebooks, problem.query)
        match = res.recovered == oracle.best_indices
        if res.converged:
            converged_count += 1
            if not match:
                mismatches += 1
        rows.append((i, f, m, res.converged, match, oracle.unique))
    wall = time.perf_counter() - t0
    digest = _hash_text(f"oracle-check problems={args.problems} max={args.max_space}")
    with open(out / "oracle_check.csv", "w", encoding="ascii", newline="") as fh:
        fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["problem", "F", "M", "converged", "matches_oracle", "oracle_unique"]
        )
        for row in rows:
            writer.writerow(row)
    write_manifest(
        str(out / "manifest.txt"), "oracle-check", digest, args.seed, wall,
        ["oracle_check.csv"],
        {"mismatches": str(mismatches), "converged": str(converged_count)},
    )
    print(
        f"{args.problems} problems, {converged_count} converged, "
        f"{mismatches} oracle mismatches"
    )
    return 0 if mismatches == 0 else 2


def _cmd_verify(args) -> int:
    manifest_path = Path(args.out) / "manifest.txt"
    if not manifest_path.exists():
        print(f"manifest not found: {manifest_path}", file=sys.stderr)
        return 1
    entries = {}
    for line in manifest_path.read_text(encoding="ascii").splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            entries[key] = value
    recorded = entries.get("config_digest", "")
    if args.config:
        actual = config_digest(args.config, None)
        if actual != recorded:
            print("config digest mismatch:", file=sys.stderr)
            print(f"  manifest: {recorded}", file=sys.stderr)
            print(f"  config:   {actual}", file=sys.stderr)
            return 2
    ok = True
    for name in entries.get("outputs", "").split(","):
        if not name:
            continue
        path = Path(args.out) / name
        if not path.exists():
            print(f"missing output: {path}", file=sys.stderr)
            ok = False
            continue
        first = path.read_text(encoding="ascii").splitlines()[0]
        expected = f"# config_digest={recorded}"
        if first != expected:
            print(f"digest mismatch in {name}", file=sys.stderr)
            ok = False
    if ok:
        print("manifest verified")
        return 0
    return 2


_COMMANDS = {
    "sweep": _cmd_sweep,
    "capacity": _cmd_capacity,
    "adc-study": _cmd_adc_study,
    "chip-validate": _cmd_chip_validate,
    "perception": _cmd_perception,
    "ppa": _cmd_ppa,
    "oracle-check": _cmd_oracle_check,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
