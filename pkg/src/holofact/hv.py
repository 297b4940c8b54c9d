"""Bipolar hypervector algebra: generation, binding, bundling, permutation,
similarity, and projection.

Hypervectors are dense 1-D numpy arrays with every element in {-1, +1},
stored as ``int8``.  All inner products are computed in exact integer
arithmetic (values lie in [-N, N], far below any overflow bound for the
supported N <= 2**15), which the factorization oracle and the property
suite rely on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .rng import RngStream

__all__ = [
    "Hypervector",
    "Codebook",
    "random_hypervector",
    "gen_codebook",
    "bind",
    "unbind",
    "bundle",
    "permute",
    "similarity",
    "project",
    "hamming",
]

# A hypervector is a 1-D int8 array of +/-1 entries.
Hypervector = NDArray[np.int8]

MAX_DIMENSION = 2**15

_HEADER_RE = re.compile(r"^# codebook label=(.*) M=(\d+) N=(\d+)$")


def _as_bipolar(v: np.ndarray, what: str = "vector") -> Hypervector:
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{what} must be non-empty")
    out = arr.astype(np.int8, copy=True)
    if not np.all(np.abs(out) == 1) or not np.array_equal(out, arr):
        raise ValueError(f"{what} elements must all be -1 or +1")
    return out


def random_hypervector(n: int, rng: RngStream | np.random.Generator) -> Hypervector:
    """Draw a length-`n` hypervector with i.i.d. uniform +/-1 entries."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    return (gen.integers(0, 2, size=n, dtype=np.int8) * 2 - 1).astype(np.int8)


@dataclass(frozen=True)
class Codebook:
    """An M x N matrix of candidate item vectors for one factor.

    Attributes:
        vectors: int8 array of shape (M, N), entries in {-1, +1}.
        label: human-readable factor name (e.g. "shape").
    """

    vectors: NDArray[np.int8]
    label: str = ""
    _f32: NDArray[np.float32] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.vectors)
        if arr.ndim != 2:
            raise ValueError(f"codebook must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"codebook must be non-empty, got shape {arr.shape}")
        vecs = arr.astype(np.int8, copy=True)
        if not np.all(np.abs(vecs) == 1) or not np.array_equal(vecs, arr):
            raise ValueError("codebook entries must all be -1 or +1")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        # Float32 mirror for fast matmuls; exact for +/-1 entries because all
        # partial sums stay far below 2**24.
        f32 = vecs.astype(np.float32)
        f32.setflags(write=False)
        object.__setattr__(self, "_f32", f32)

    @property
    def M(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def N(self) -> int:
        return int(self.vectors.shape[1])

    def row(self, m: int) -> Hypervector:
        return self.vectors[m]

    def as_float32(self) -> NDArray[np.float32]:
        """Read-only float32 view of the codebook matrix."""
        return self._f32

    def to_csv(self, path: str) -> None:
        """Write the codebook as CSV with a self-describing header line."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# codebook label={self.label} M={self.M} N={self.N}\n")
            for row in self.vectors:
                fh.write(",".join(str(int(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path: str) -> "Codebook":
        """Load a codebook written by :meth:`to_csv`; round-trip is lossless."""
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().rstrip("\n")
            m = _HEADER_RE.match(header)
            if m is None:
                raise ValueError(f"{path}:1: malformed codebook header: {header!r}")
            label, M, N = m.group(1), int(m.group(2)), int(m.group(3))
            rows = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([int(tok) for tok in line.split(",")])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed row: {exc}") from exc
        arr = np.array(rows, dtype=np.int8)
        if arr.shape != (M, N):
            raise ValueError(
                f"{path}: header declares {M}x{N} but file contains shape {arr.shape}"
            )
        return cls(vectors=arr, label=label)


def gen_codebook(
    M: int,
    N: int,
    rng: RngStream | np.random.Generator,
    label: str = "",
    max_attempts_per_row: int = 1000,
) -> Codebook:
    """Generate M distinct random bipolar vectors of dimension N.

    Rows are drawn i.i.d. uniform over {-1, +1}^N; colliding rows are
    redrawn.  Collisions are only plausible at tiny N (the birthday bound at
    N >= 64 is astronomically small), so a bounded number of redraws per row
    guards against the impossible request M > 2**N.
    """
    if M < 2:
        raise ValueError(f"codebook size must be >= 2, got M={M}")
    if N < 1:
        raise ValueError(f"dimension must be >= 1, got N={N}")
    if N > MAX_DIMENSION:
        raise ValueError(f"dimension {N} exceeds supported maximum {MAX_DIMENSION}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    rows = np.empty((M, N), dtype=np.int8)
    seen: set[bytes] = set()
    for i in range(M):
        for _ in range(max_attempts_per_row):
            cand = (gen.integers(0, 2, size=N, dtype=np.int8) * 2 - 1).astype(np.int8)
            key = cand.tobytes()
            if key not in seen:
                seen.add(key)
                rows[i] = cand
                break
        else:
            raise RuntimeError(
                f"could not generate {M} distinct rows at N={N} "
                f"(collision persisted after {max_attempts_per_row} redraws)"
            )
    return Codebook(vectors=rows, label=label)


def _check_same_dim(vs: Sequence[np.ndarray]) -> int:
    n = int(np.asarray(vs[0]).shape[-1])
    for i, v in enumerate(vs):
        arr = np.asarray(v)
        if arr.ndim != 1 or arr.shape[0] != n:
            raise ValueError(
                f"dimension mismatch at index {i}: expected length {n}, "
                f"got shape {arr.shape}"
            )
    return n


def bind(vs: Sequence[Hypervector]) -> Hypervector:
    """Element-wise product of one or more hypervectors (binding).

    Binding is commutative, associative, and self-inverse in bipolar space:
    bind([x, x]) is the all-ones identity vector.
    """
    if len(vs) == 0:
        raise ValueError("bind requires at least one vector")
    _check_same_dim(vs)
    out = np.asarray(vs[0], dtype=np.int8).copy()
    for v in vs[1:]:
        np.multiply(out, np.asarray(v, dtype=np.int8), out=out)
    return out


def unbind(product: Hypervector, vs: Sequence[Hypervector]) -> Hypervector:
    """Remove known factors from a product by re-multiplication.

    ``unbind(bind([x, y]), [y]) == x`` exactly; unbinding with an empty
    factor list is the identity.
    """
    if len(vs) == 0:
        return np.asarray(product, dtype=np.int8).copy()
    return bind([product, *vs])


def bundle(
    vs: Sequence[Hypervector],
    tie_policy: str = "plus_one",
    rng: RngStream | np.random.Generator | None = None,
) -> Hypervector:
    """Element-wise sum followed by sign (superposition of the inputs).

    Coordinates whose sum is exactly zero are ties; `tie_policy` selects
    "plus_one" (deterministic +1) or "random" (fair coin per tie, drawn from
    `rng`, which is then required).
    """
    if len(vs) == 0:
        raise ValueError("bundle requires at least one vector")
    _check_same_dim(vs)
    total = np.zeros(np.asarray(vs[0]).shape[0], dtype=np.int64)
    for v in vs:
        total += np.asarray(v, dtype=np.int64)
    return _sign_with_ties(total, tie_policy, rng)


def _sign_with_ties(
    pre: np.ndarray,
    tie_policy: str,
    rng: RngStream | np.random.Generator | None,
) -> Hypervector:
    out = np.where(pre > 0, 1, -1).astype(np.int8)
    ties = pre == 0
    if ties.any():
        if tie_policy == "plus_one":
            out[ties] = 1
        elif tie_policy == "random":
            if rng is None:
                raise ValueError("tie_policy 'random' requires an rng")
            gen = rng.generator() if isinstance(rng, RngStream) else rng
            out[ties] = gen.integers(0, 2, size=int(ties.sum()), dtype=np.int8) * 2 - 1
        else:
            raise ValueError(f"unknown tie_policy {tie_policy!r}")
    return out


def permute(v: Hypervector, k: int) -> Hypervector:
    """Cyclic rotation of the coordinates by k positions (rho operator).

    ``permute(permute(v, k), -k) == v`` for every k; rotation by N (or 0)
    is the identity.
    """
    arr = np.asarray(v, dtype=np.int8)
    return np.roll(arr, k).astype(np.int8)


def similarity(cb: Codebook, v: Hypervector) -> NDArray[np.int64]:
    """Inner product of every codebook row with `v`, exact integers.

    Entry m equals <cb.row(m), v>, an integer in [-N, N] whose parity
    matches the parity of N.
    """
    arr = np.asarray(v)
    if arr.ndim != 1 or arr.shape[0] != cb.N:
        raise ValueError(
            f"dimension mismatch: codebook N={cb.N}, vector shape {arr.shape}"
        )
    return cb.vectors.astype(np.int64) @ arr.astype(np.int64)


def project(cb: Codebook, a: np.ndarray) -> NDArray[np.float64]:
    """Weighted superposition of the codebook rows (pre-activation reals).

    Entry n equals sum_m a[m] * cb.row(m)[n].  The caller applies the sign
    activation; this function returns the real-valued pre-activation.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != cb.M:
        raise ValueError(
            f"length mismatch: codebook M={cb.M}, coefficient shape {arr.shape}"
        )
    return cb.vectors.astype(np.float64).T @ arr


def hamming(x: Hypervector, y: Hypervector) -> int:
    """Number of coordinates where x and y differ; <x,y> = N - 2*hamming."""
    _check_same_dim([x, y])
    return int(np.count_nonzero(np.asarray(x) != np.asarray(y)))
