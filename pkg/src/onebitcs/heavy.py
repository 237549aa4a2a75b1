"""Heavy-hitter recovery from one-bit count-sketch measurements over dyadic levels.

Level ``l`` partitions ``[n]`` into ``n / 2**l`` intervals of width ``2**l``
(0-based: interval ``a`` covers ``[a * 2**l, (a + 1) * 2**l)``).  For every
level and every scheme ``m`` a fresh Gaussian weight is attached to each
coordinate; each of the ``C1`` repetitions then hashes every interval into
one of ``C0 * k`` buckets with a random sign, reusing the same Gaussians.
A measurement row is one bucket of one repetition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import kernels
from .core import BlockIndex, SignVector, derive_seed


def c_thr() -> float:
    """Largest C with P[Y^2 > 1/C] = 1/10 for standard normal Y."""
    z = NormalDist().inv_cdf(0.95)
    return 1.0 / (z * z)


def next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


@dataclass(frozen=True)
class SketchConfig:
    n: int
    k: int
    c_minus1: float = 1.0
    c0: int = 32
    c1: int = 24
    c2: int = 6
    c_cap: int = 16
    lo_frac: float = 0.2
    hi_frac: float = 0.8
    majority: float = 2.0 / 3.0
    delta_prime_override: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two >= 2 (pad the signal first)")
        if self.k < 1:
            raise ValueError("k must be positive")
        if min(self.c0, self.c1, self.c2, self.c_cap) < 1 or self.c_minus1 <= 0:
            raise ValueError("sketch constants must be positive")

    @property
    def levels(self) -> int:
        return self.n.bit_length() - 1

    @property
    def delta(self) -> float:
        return 1.0 / (self.c_minus1 * self.k * self.levels)

    @property
    def delta_prime(self) -> int:
        if self.delta_prime_override is not None:
            return int(self.delta_prime_override)
        return max(1, math.ceil(math.log2(1.0 / self.delta)))

    @property
    def schemes(self) -> int:
        return self.c2 * self.delta_prime

    @property
    def buckets(self) -> int:
        return self.c0 * self.k

    @property
    def rows_per_level(self) -> int:
        return self.buckets * self.c1 * self.schemes

    @property
    def total_rows(self) -> int:
        return self.levels * self.rows_per_level

    @property
    def heavy_threshold_factor(self) -> float:
        return 1.0 / (10 * self.k)

    @property
    def capacity(self) -> int:
        return self.c_cap * self.k


def interval_of(i, level: int):
    """Index of the level-``level`` interval containing coordinate ``i``."""
    return np.asarray(i) >> level


def interval_span(level: int, a: int) -> range:
    return range(a << level, (a + 1) << level)


@dataclass(eq=False)
class SketchEnsemble:
    """All sketch randomness plus an implicit evaluator for its rows.

    ``gaussians[l]`` has shape ``(M, n)``; ``buckets[l]`` and ``signs[l]``
    have shape ``(M, C1, n >> l)``.
    """

    cfg: SketchConfig
    gaussians: list[np.ndarray] = field(repr=False)
    buckets: list[np.ndarray] = field(repr=False)
    signs: list[np.ndarray] = field(repr=False)

    @property
    def index(self) -> BlockIndex:
        return BlockIndex.from_sizes([self.cfg.rows_per_level] * self.cfg.levels)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.cfg.total_rows, self.cfg.n)

    def row_of(self, level: int, m: int, t: int, q: int) -> int:
        c = self.cfg
        return self.index.global_row(level, (m * c.c1 + t) * c.buckets + q)

    def level_values(self, level: int, x: np.ndarray) -> np.ndarray:
        c = self.cfg
        width = 1 << level
        u = (self.gaussians[level] * x[None, :]).reshape(c.schemes, -1, width).sum(axis=2)
        b = self.buckets[level].astype(np.int64)
        flat = (np.arange(c.schemes)[:, None, None] * c.c1 + np.arange(c.c1)[None, :, None]) * c.buckets + b
        w = self.signs[level] * u[:, None, :]
        return np.bincount(flat.ravel(), weights=w.ravel(), minlength=c.rows_per_level)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.cfg.n:
            raise ValueError("dimension mismatch")
        return np.concatenate([self.level_values(l, x) for l in range(self.cfg.levels)])

    def dense_rows(self) -> np.ndarray:
        """Explicit matrix (small n only)."""
        c = self.cfg
        out = np.zeros((c.total_rows, c.n))
        for l in range(c.levels):
            owner = np.arange(c.n) >> l
            for m in range(c.schemes):
                for t in range(c.c1):
                    base = self.row_of(l, m, t, 0)
                    rows = base + self.buckets[l][m, t, owner]
                    out[rows, np.arange(c.n)] = self.signs[l][m, t, owner] * self.gaussians[l][m]
        return out

    def level_signs(self, y, level: int) -> np.ndarray:
        bits = y.bits if isinstance(y, SignVector) else np.asarray(y)
        c = self.cfg
        return np.ascontiguousarray(bits[self.index.block_slice(level)].reshape(c.schemes, c.c1, c.buckets))


def build_sketch(cfg: SketchConfig) -> SketchEnsemble:
    gaussians, buckets, signs = [], [], []
    for l in range(cfg.levels):
        rng = np.random.default_rng(derive_seed(cfg.seed, "sketch-level", l))
        width = cfg.n >> l
        gaussians.append(rng.standard_normal((cfg.schemes, cfg.n)))
        buckets.append(rng.integers(0, cfg.buckets, size=(cfg.schemes, cfg.c1, width), dtype=np.int32))
        signs.append((2 * rng.integers(0, 2, size=(cfg.schemes, cfg.c1, width), dtype=np.int8) - 1).astype(np.int8))
    return SketchEnsemble(cfg, gaussians, buckets, signs)


@dataclass
class HeavyStats:
    level_sizes: dict = field(default_factory=dict)
    candidates_scored: int = 0
    truncated_levels: list = field(default_factory=list)
    kept: dict = field(default_factory=dict)  # level -> surviving interval indices


def recover_heavy(ens: SketchEnsemble, y, stats: HeavyStats | None = None) -> np.ndarray:
    """Top-down dyadic search for the coordinates carrying most of the l2 mass.

    At each level the children of the surviving intervals are scored: under
    scheme m, an interval is good when its sign agrees with the bucket's
    measurement in more than ``hi_frac * C1`` or fewer than ``lo_frac * C1``
    repetitions.  Intervals good under more than ``majority * M`` schemes
    survive; at most ``c_cap * k`` of them are kept, strongest first.
    """
    cfg = ens.cfg
    stats = stats if stats is not None else HeavyStats()
    lo, hi = cfg.lo_frac * cfg.c1, cfg.hi_frac * cfg.c1
    need = cfg.majority * cfg.schemes
    cands = np.arange(2, dtype=np.int64)  # children of [n]
    for level in range(cfg.levels - 1, -1, -1):
        ylev = ens.level_signs(y, level)
        cnt = kernels.agreement_counts(ylev, ens.buckets[level], ens.signs[level], cands)
        good = ((cnt > hi) | (cnt < lo)).sum(axis=0)
        stats.candidates_scored += cands.size
        keep = good > need
        kept = cands[keep]
        if kept.size > cfg.capacity:
            strength = np.abs(cnt[:, keep] - cfg.c1 / 2.0).sum(axis=0)
            order = np.lexsort((kept, -strength, -good[keep]))
            kept = np.sort(kept[order[: cfg.capacity]])
            stats.truncated_levels.append(level)
        stats.level_sizes[level] = kept.size
        stats.kept[level] = kept
        if level == 0:
            return kept
        cands = np.concatenate([2 * kept, 2 * kept + 1])
        cands.sort()
    return cands


def heavy_indices(x, k: int) -> np.ndarray:
    """Coordinates with |x_i|^2 > ||x_tail(k)||^2 / (10k)."""
    x = np.asarray(x, dtype=float)
    mags = np.sort(np.abs(x))[::-1]
    tail = float(np.sum(mags[k:] ** 2))
    return np.flatnonzero(x * x > tail / (10 * k))
