"""Synthetic holographic perception task: attribute estimation from
corrupted product vectors.

A scene is a tuple of categorical attribute values (type, size, color,
position by default).  Encoding binds the corresponding codebook rows into
one product vector and flips a controlled fraction of coordinates, standing
in for the error of an upstream neural encoder.  Externally produced query
vectors can also be ingested from CSV; the factorizer then disentangles
each query and the evaluator reports per-attribute and all-attribute
accuracy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .hv import Codebook, gen_codebook
from .resonator import FactorizationProblem, ResonatorConfig, factorize
from .rng import RngStream

__all__ = [
    "SceneSpec",
    "CorruptionSpec",
    "PerceptionReport",
    "default_codebooks",
    "encode_scene",
    "ingest_queries",
    "export_queries",
    "evaluate_perception",
]

DEFAULT_ATTRIBUTES = ("type", "size", "color", "position")
# Synthetic cardinalities for the default four-attribute task; documented as
# an invented configuration, not a claim about any published dataset.
DEFAULT_CODEBOOK_SIZES = (8, 4, 8, 9)

_QUERY_HEADER_RE = re.compile(r"^# queries v1 N=(\d+) labeled=([01])$")


@dataclass(frozen=True)
class SceneSpec:
    """Attribute names and codebook sizes of the perception task.

    `values` fixes the attribute indices of one concrete scene; None lets
    :func:`encode_scene` draw them uniformly.
    """

    attributes: tuple[str, ...] = DEFAULT_ATTRIBUTES
    codebook_sizes: tuple[int, ...] = DEFAULT_CODEBOOK_SIZES
    values: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.attributes) != len(self.codebook_sizes):
            raise ValueError("attributes and codebook_sizes must have equal length")
        if len(self.attributes) < 1:
            raise ValueError("at least one attribute required")
        if any(m < 1 for m in self.codebook_sizes):
            raise ValueError("codebook sizes must be >= 1")
        if self.values is not None:
            vals = tuple(int(v) for v in self.values)
            if len(vals) != len(self.attributes):
                raise ValueError("values must have one index per attribute")
            for name, v, m in zip(self.attributes, vals, self.codebook_sizes):
                if not 0 <= v < m:
                    raise ValueError(f"value index {v} out of range for {name} (M={m})")
            object.__setattr__(self, "values", vals)

    @property
    def F(self) -> int:
        return len(self.attributes)


@dataclass(frozen=True)
class CorruptionSpec:
    """Fraction of query coordinates to sign-flip (encoder error model).

    The flip count is round(flip_fraction * N); flipped coordinates are
    drawn without replacement.
    """

    flip_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.flip_fraction < 0.5:
            raise ValueError(
                f"flip_fraction must lie in [0, 0.5), got {self.flip_fraction}"
            )

    def flip_count(self, n: int) -> int:
        return int(round(self.flip_fraction * n))


def default_codebooks(
    n: int, rng: RngStream, spec: SceneSpec | None = None
) -> tuple[Codebook, ...]:
    """Generate one codebook per attribute of `spec` at dimension `n`."""
    spec = spec or SceneSpec()
    gen = rng.generator()
    return tuple(
        gen_codebook(m, n, gen, label=name)
        for name, m in zip(spec.attributes, spec.codebook_sizes)
    )


def encode_scene(
    spec: SceneSpec,
    codebooks: tuple[Codebook, ...],
    corruption: CorruptionSpec,
    rng: RngStream,
) -> FactorizationProblem:
    """Bind the scene's attribute vectors and corrupt the product.

    The ground-truth indices are recorded on the returned problem; the
    corruption level is noted in its metadata.
    """
    if len(codebooks) != spec.F:
        raise ValueError(f"expected {spec.F} codebooks, got {len(codebooks)}")
    for name, m, cb in zip(spec.attributes, spec.codebook_sizes, codebooks):
        if cb.M != m:
            raise ValueError(f"codebook for {name} has M={cb.M}, spec says {m}")
    gen = rng.generator()
    if spec.values is not None:
        values = spec.values
    else:
        values = tuple(int(gen.integers(0, m)) for m in spec.codebook_sizes)
    query = codebooks[0].row(values[0]).astype(np.int8)
    for cb, v in zip(codebooks[1:], values[1:]):
        query = (query * cb.row(v)).astype(np.int8)
    n = codebooks[0].N
    k = corruption.flip_count(n)
    if k > 0:
        flip_at = gen.choice(n, size=k, replace=False)
        query[flip_at] = -query[flip_at]
    return FactorizationProblem(
        codebooks=codebooks,
        query=query,
        truth=values,
        metadata={"flip_fraction": corruption.flip_fraction},
    )


def export_queries(path: str, problems: list[FactorizationProblem]) -> None:
    """Write query vectors (and labels when every problem has truth) as CSV."""
    if not problems:
        raise ValueError("nothing to export")
    n = problems[0].N
    labeled = all(p.truth is not None for p in problems)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# queries v1 N={n} labeled={1 if labeled else 0}\n")
        for p in problems:
            row = [str(int(x)) for x in p.query]
            if labeled:
                assert p.truth is not None
                row += [str(i) for i in p.truth]
            fh.write(",".join(row) + "\n")


def ingest_queries(
    path: str, codebooks: tuple[Codebook, ...]
) -> list[FactorizationProblem]:
    """Load externally produced query vectors against known codebooks.

    Rows carry N values followed by F label indices when the header says
    labeled=1.  Real-valued entries are sign-binarized (ties to +1) and the
    problem metadata records that binarization happened.
    """
    n = codebooks[0].N
    f_count = len(codebooks)
    problems: list[FactorizationProblem] = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        m = _QUERY_HEADER_RE.match(header)
        if m is None:
            raise ValueError(f"{path}:1: malformed query header: {header!r}")
        n_file, labeled = int(m.group(1)), m.group(2) == "1"
        if n_file != n:
            raise ValueError(
                f"{path}:1: file dimension N={n_file} does not match codebooks N={n}"
            )
        expected = n + (f_count if labeled else 0)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != expected:
                raise ValueError(
                    f"{path}:{lineno}: expected {expected} fields "
                    f"(N={n}{', plus ' + str(f_count) + ' labels' if labeled else ''}), "
                    f"got {len(parts)}"
                )
            try:
                vals = np.array([float(p) for p in parts[:n]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed value: {exc}") from exc
            binarized = bool(np.any((vals != 1.0) & (vals != -1.0)))
            query = np.where(vals >= 0, 1, -1).astype(np.int8)
            truth = None
            if labeled:
                truth = tuple(int(p) for p in parts[n:])
            problems.append(
                FactorizationProblem(
                    codebooks=codebooks,
                    query=query,
                    truth=truth,
                    metadata={"binarized": binarized, "source": path},
                )
            )
    return problems


@dataclass(frozen=True)
class PerceptionReport:
    """Per-attribute and all-attribute estimation accuracy.

    For unlabeled inputs accuracies are absent and the mean decode margin
    (|best| - |runner-up| of the final readout) is reported instead.
    """

    attributes: tuple[str, ...]
    n_problems: int
    per_attribute: tuple[float, ...] | None
    overall: float | None
    unlabeled: bool
    mean_margin: float | None = None

    def to_csv(self, path: str, digest: str | None = None) -> None:
        with open(path, "w", encoding="ascii") as fh:
            if digest is not None:
                fh.write(f"# config_digest={digest}\n")
            fh.write("attribute,accuracy_pct\n")
            if self.unlabeled:
                fh.write(f"all,unlabeled (mean margin {self.mean_margin:.2f})\n")
                return
            assert self.per_attribute is not None and self.overall is not None
            for name, acc in zip(self.attributes, self.per_attribute):
                fh.write(f"{name},{100.0 * acc:.2f}\n")
            fh.write(f"all,{100.0 * self.overall:.2f}\n")


def evaluate_perception(
    problems: list[FactorizationProblem], config: ResonatorConfig
) -> PerceptionReport:
    """Factorize every problem and score recovered attribute indices.

    Each problem runs with its own stream derived from config.rng and the
    problem position, so evaluation order cannot change results.
    """
    if not problems:
        raise ValueError("no problems to evaluate")
    first = problems[0]
    attributes = tuple(cb.label or f"factor{i}" for i, cb in enumerate(first.codebooks))
    f_count = len(attributes)
    labeled = all(p.truth is not None for p in problems)
    per_attr_hits = np.zeros(f_count, dtype=np.int64)
    all_hits = 0
    margins: list[float] = []
    for i, problem in enumerate(problems):
        cfg = replace(config, rng=config.rng.derive("perception", i))
        if not labeled and cfg.convergence_rule == "truth_match":
            cfg = replace(cfg, convergence_rule="state_fixed_point")
        result = factorize(problem, cfg)
        if labeled:
            assert problem.truth is not None
            hits = [r == t for r, t in zip(result.recovered, problem.truth)]
            per_attr_hits += np.array(hits, dtype=np.int64)
            all_hits += int(all(hits))
        elif result.decode_margins is not None:
            margins.append(float(np.mean(result.decode_margins)))
    if labeled:
        n = len(problems)
        return PerceptionReport(
            attributes=attributes,
            n_problems=n,
            per_attribute=tuple(float(h) / n for h in per_attr_hits),
            overall=all_hits / n,
            unlabeled=False,
        )
    return PerceptionReport(
        attributes=attributes,
        n_problems=len(problems),
        per_attribute=None,
        overall=None,
        unlabeled=True,
        mean_margin=float(np.mean(margins)) if margins else None,
    )
