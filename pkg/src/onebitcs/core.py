"""Signals, sign measurements and the matrix combinators shared by every scheme.

Matrices come in three flavours:

* :class:`RealMatrix` -- dense float storage, used for small problems,
  serialization and the reference combinators.
* :class:`BinaryTestMatrix` -- a 0/1 group-testing matrix stored as two
  sparse indices (rows of each column, columns of each row).
* :class:`GaussianColumns` -- an i.i.d. standard normal matrix whose columns
  are regenerated on demand from ``(seed, column)``, so that decoders can
  touch only the columns they need.

Anything with a ``shape`` and a ``matvec`` method can be fed to
:func:`sign_encode`.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

_SEED_MASK = (1 << 63) - 1


def derive_seed(seed: int, *labels) -> int:
    """Split ``seed`` into an independent child seed named by ``labels``.

    Labels may be ints or strings; the same labels always give the same child.
    """
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    for lab in labels:
        if isinstance(lab, str):
            words.append(zlib.crc32(lab.encode()))
        else:
            lab = int(lab)
            words.extend([lab & 0xFFFFFFFF, (lab >> 32) & 0xFFFFFFFF])
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return ((int(state[0]) << 32) | int(state[1])) & _SEED_MASK


def rng_for(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))


# ---------------------------------------------------------------------------
# signals and sign vectors


@dataclass(frozen=True)
class SparseSignal:
    """A real vector together with the sparsity level it is meant to have."""

    entries: np.ndarray
    declared_k: int

    def __post_init__(self):
        x = np.array(self.entries, dtype=float).ravel()
        x.setflags(write=False)
        object.__setattr__(self, "entries", x)
        if x.size == 0:
            raise ValueError("signal must have positive dimension")
        if not 1 <= self.declared_k <= x.size:
            raise ValueError(f"declared_k={self.declared_k} outside [1, {x.size}]")

    @property
    def n(self) -> int:
        return self.entries.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.entries)

    def is_exactly_sparse(self) -> bool:
        return self.support.size <= self.declared_k

    def is_unit(self, tol: float = 1e-9) -> bool:
        return abs(float(np.linalg.norm(self.entries)) - 1.0) <= tol

    def head(self, k: int | None = None) -> np.ndarray:
        """Indices of the ``k`` largest-magnitude coordinates (stable on ties)."""
        k = self.declared_k if k is None else k
        order = np.argsort(-np.abs(self.entries), kind="stable")
        return np.sort(order[:k])

    def tail_norm_sq(self, k: int | None = None) -> float:
        k = self.declared_k if k is None else k
        mags = np.sort(np.abs(self.entries))[::-1]
        return float(np.sum(mags[k:] ** 2))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class SignVector:
    """Output of the one-bit channel: int8 entries in {+1, -1}."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1:
            raise ValueError("sign vector must be one-dimensional")
        if b.size and not np.all((b == 1) | (b == -1)):
            raise ValueError("sign vector entries must be +1 or -1")
        b = b.astype(np.int8, copy=True)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def m(self) -> int:
        return self.bits.size

    def __len__(self):
        return self.bits.size

    def __getitem__(self, item):
        out = self.bits[item]
        return SignVector(out) if isinstance(item, slice) else int(out)

    def __neg__(self):
        return SignVector(-self.bits)

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    @classmethod
    def concat(cls, parts: Sequence["SignVector"]) -> "SignVector":
        return cls(np.concatenate([p.bits for p in parts]))


def _as_vector(x) -> np.ndarray:
    if isinstance(x, SparseSignal):
        return x.entries
    return np.asarray(x, dtype=float).ravel()


def sign_encode(phi, x, zero_tol: float = 0.0) -> SignVector:
    """Return ``sign(phi @ x)`` with the convention sign(z) = +1 for z >= 0.

    ``zero_tol`` widens the +1 side to ``z >= -zero_tol``.  The default of 0
    is exact for rows whose support misses ``supp(x)``: those dot products are
    sums of exact zeros.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    vec = _as_vector(x)
    if phi.shape[1] != vec.size:
        raise ValueError(f"dimension mismatch: matrix has {phi.shape[1]} columns, x has {vec.size}")
    z = phi.matvec(vec) if hasattr(phi, "matvec") else np.asarray(phi, dtype=float) @ vec
    return SignVector(np.where(z >= -zero_tol, 1, -1).astype(np.int8))


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class RealMatrix:
    entries: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("RealMatrix needs a 2-D array")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def matvec(self, x) -> np.ndarray:
        return self.entries @ _as_vector(x)

    def columns(self, idx) -> np.ndarray:
        return self.entries[:, np.asarray(idx, dtype=np.int64)]

    def to_dense(self) -> np.ndarray:
        return self.entries

    @classmethod
    def gaussian(cls, rows: int, cols: int, seed: int) -> "RealMatrix":
        return cls(np.random.default_rng(seed).standard_normal((rows, cols)), rng_seed=seed)


@dataclass(frozen=True, eq=False)
class BinaryTestMatrix:
    """0/1 matrix indexed both by column (tests containing an item) and by row.

    ``col_ptr``/``col_idx`` hold, for column ``j``, the sorted row indices
    ``col_idx[col_ptr[j]:col_ptr[j+1]]``; ``row_ptr``/``row_idx`` is the
    transpose.
    """

    rows: int
    cols: int
    col_ptr: np.ndarray
    col_idx: np.ndarray
    row_ptr: np.ndarray = field(repr=False, default=None)
    row_idx: np.ndarray = field(repr=False, default=None)
    rng_seed: int = 0

    def __post_init__(self):
        col_ptr = np.asarray(self.col_ptr, dtype=np.int64)
        col_idx = np.asarray(self.col_idx, dtype=np.int64)
        if col_ptr.size != self.cols + 1 or col_ptr[0] != 0 or col_ptr[-1] != col_idx.size:
            raise ValueError("malformed column index")
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= self.rows):
            raise ValueError("row index out of range")
        if self.row_ptr is None:
            owner = np.repeat(np.arange(self.cols, dtype=np.int64), np.diff(col_ptr))
            order = np.lexsort((owner, col_idx))
            row_idx = owner[order]
            row_ptr = np.zeros(self.rows + 1, dtype=np.int64)
            np.cumsum(np.bincount(col_idx, minlength=self.rows), out=row_ptr[1:])
        else:
            row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
            row_idx = np.asarray(self.row_idx, dtype=np.int64)
        for a in (col_ptr, col_idx, row_ptr, row_idx):
            a.setflags(write=False)
        object.__setattr__(self, "col_ptr", col_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "row_idx", row_idx)

    @classmethod
    def from_column_supports(cls, rows: int, supports: Sequence[Sequence[int]], rng_seed: int = 0):
        lens = [len(s) for s in supports]
        col_ptr = np.zeros(len(supports) + 1, dtype=np.int64)
        np.cumsum(lens, out=col_ptr[1:])
        col_idx = (
            np.concatenate([np.unique(np.asarray(s, dtype=np.int64)) for s in supports])
            if supports and sum(lens)
            else np.zeros(0, dtype=np.int64)
        )
        if col_idx.size != col_ptr[-1]:
            raise ValueError("duplicate row index inside a column support")
        return cls(rows, len(supports), col_ptr, col_idx, rng_seed=rng_seed)

    @classmethod
    def from_dense(cls, a, rng_seed: int = 0) -> "BinaryTestMatrix":
        a = np.asarray(a)
        if a.ndim != 2 or not np.all((a == 0) | (a == 1)):
            raise ValueError("binary matrix must be a 2-D 0/1 array")
        owner, row = np.nonzero(a.T)  # column-major order
        col_ptr = np.zeros(a.shape[1] + 1, dtype=np.int64)
        np.cumsum(np.bincount(owner, minlength=a.shape[1]), out=col_ptr[1:])
        return cls(a.shape[0], a.shape[1], col_ptr, row, rng_seed=rng_seed)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def column_support(self, j: int) -> np.ndarray:
        return self.col_idx[self.col_ptr[j] : self.col_ptr[j + 1]]

    def row_support(self, i: int) -> np.ndarray:
        return self.row_idx[self.row_ptr[i] : self.row_ptr[i + 1]]

    @property
    def column_supports(self) -> list[np.ndarray]:
        return [self.column_support(j) for j in range(self.cols)]

    @property
    def row_supports(self) -> list[np.ndarray]:
        return [self.row_support(i) for i in range(self.rows)]

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.rows, self.cols), dtype=np.int8)
        owner = np.repeat(np.arange(self.cols), np.diff(self.col_ptr))
        a[self.col_idx, owner] = 1
        return a

    def matvec(self, x) -> np.ndarray:
        x = _as_vector(x)
        owner = np.repeat(np.arange(self.cols), np.diff(self.col_ptr))
        return np.bincount(self.col_idx, weights=x[owner], minlength=self.rows)

    def outcomes(self, support) -> np.ndarray:
        """Boolean-OR test results: True where a row meets ``support``."""
        pos = np.zeros(self.rows, dtype=bool)
        for j in np.asarray(support, dtype=np.int64).ravel():
            pos[self.column_support(int(j))] = True
        return pos

    def __eq__(self, other):
        if not isinstance(other, BinaryTestMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.col_ptr, other.col_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
        )

    __hash__ = None


class GaussianColumns:
    """Standard normal ``rows x cols`` matrix; column ``j`` is drawn from ``(seed, j)``.

    Nothing is stored, so ``cols`` may be far larger than memory would allow
    for a dense array.
    """

    def __init__(self, rows: int, cols: int, seed: int):
        self.rows = int(rows)
        self.cols = int(cols)
        self.rng_seed = int(seed)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.cols:
            raise IndexError(j)
        return np.random.default_rng([self.rng_seed, int(j)]).standard_normal(self.rows)

    def columns(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64).ravel()
        out = np.empty((self.rows, idx.size))
        for c, j in enumerate(idx):
            out[:, c] = self.column(int(j))
        return out

    def matvec(self, x) -> np.ndarray:
        x = _as_vector(x)
        if x.size != self.cols:
            raise ValueError("dimension mismatch")
        y = np.zeros(self.rows)
        for j in np.flatnonzero(x):
            y += x[j] * self.column(int(j))
        return y

    def to_dense(self) -> np.ndarray:
        return self.columns(np.arange(self.cols))


# ---------------------------------------------------------------------------
# combinators


def _dense(a) -> np.ndarray:
    if isinstance(a, (RealMatrix, BinaryTestMatrix)):
        return a.to_dense()
    return np.asarray(a, dtype=float)


def hadamard(a, b) -> RealMatrix:
    """Entrywise product ``a * b``."""
    da, db = _dense(a), _dense(b)
    if da.shape != db.shape:
        raise ValueError(f"shape mismatch {da.shape} vs {db.shape}")
    seed = getattr(b, "rng_seed", 0)
    return RealMatrix(da * db, rng_seed=seed)


@dataclass(frozen=True)
class BlockIndex:
    """Row layout of a vertical concatenation: block ``b`` occupies rows
    ``offsets[b]:offsets[b+1]``."""

    offsets: tuple[int, ...]

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "BlockIndex":
        off = [0]
        for s in sizes:
            off.append(off[-1] + int(s))
        return cls(tuple(off))

    @property
    def total(self) -> int:
        return self.offsets[-1]

    def __len__(self):
        return len(self.offsets) - 1

    def global_row(self, block: int, local: int) -> int:
        lo, hi = self.offsets[block], self.offsets[block + 1]
        if not 0 <= local < hi - lo:
            raise IndexError(f"row {local} outside block {block}")
        return lo + local

    def block_slice(self, block: int) -> slice:
        return slice(self.offsets[block], self.offsets[block + 1])


def row_direct_sum(blocks):
    """Stack ``blocks`` vertically; returns ``(matrix, BlockIndex)``.

    All-binary input yields a :class:`BinaryTestMatrix`, anything else a
    :class:`RealMatrix`.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("row_direct_sum needs at least one block")
    cols = {b.shape[1] for b in blocks}
    if len(cols) != 1:
        raise ValueError(f"column counts differ: {sorted(cols)}")
    index = BlockIndex.from_sizes([b.shape[0] for b in blocks])
    if all(isinstance(b, BinaryTestMatrix) for b in blocks):
        ncols = blocks[0].cols
        supports = []
        for j in range(ncols):
            supports.append(
                np.concatenate([b.column_support(j) + index.offsets[i] for i, b in enumerate(blocks)])
            )
        return BinaryTestMatrix.from_column_supports(index.total, supports), index
    stacked = np.vstack([_dense(b) for b in blocks])
    return RealMatrix(stacked), index


def tensor_product(a, v) -> RealMatrix:
    """Row-wise tensor product: row ``(i, i2)`` (row-major, ``i`` outer) is
    ``a[i] * v[i2]`` coordinate-wise."""
    da, dv = _dense(a), _dense(v)
    if da.shape[1] != dv.shape[1]:
        raise ValueError(f"column mismatch {da.shape[1]} vs {dv.shape[1]}")
    out = (da[:, None, :] * dv[None, :, :]).reshape(da.shape[0] * dv.shape[0], da.shape[1])
    return RealMatrix(out, rng_seed=getattr(v, "rng_seed", 0))


# ---------------------------------------------------------------------------
# text serialization: "rows cols kind seed" then row-major entries


def dump_matrix(path, m) -> None:
    path = Path(path)
    if isinstance(m, BinaryTestMatrix):
        kind, dense = "binary", m.to_dense()
        lines = [" ".join(str(int(v)) for v in row) for row in dense]
    else:
        kind, dense = "real", _dense(m)
        lines = [" ".join(f"{float(v):.17g}" for v in row) for row in dense]
    seed = int(getattr(m, "rng_seed", 0))
    header = f"{dense.shape[0]} {dense.shape[1]} {kind} {seed}"
    path.write_text("\n".join([header, *lines]) + "\n")


def load_matrix(path):
    tokens = Path(path).read_text().split()
    if len(tokens) < 4:
        raise ValueError("matrix file too short")
    rows, cols, kind, seed = int(tokens[0]), int(tokens[1]), tokens[2], int(tokens[3])
    body = tokens[4:]
    if len(body) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {len(body)}")
    if kind == "binary":
        a = np.array([int(t) for t in body], dtype=np.int8).reshape(rows, cols)
        return BinaryTestMatrix.from_dense(a, rng_seed=seed)
    if kind == "real":
        a = np.array([float(t) for t in body]).reshape(rows, cols)
        return RealMatrix(a, rng_seed=seed)
    raise ValueError(f"unknown matrix kind {kind!r}")
