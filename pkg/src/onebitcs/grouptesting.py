"""Nonadaptive group testing: matrices, disjunctness oracles and decoders.

Test outcomes are boolean arrays, ``True`` meaning a positive test (the
test's pool meets the defective set).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .core import BinaryTestMatrix, RealMatrix, SignVector, derive_seed

DEFAULT_ORACLE_BUDGET = 20_000_000
_MATERIALIZE_LIMIT = 50_000_000


def _positives(outcomes, rows: int) -> np.ndarray:
    pos = np.asarray(outcomes)
    if pos.dtype != bool:
        pos = pos.astype(bool)
    if pos.shape != (rows,):
        raise ValueError(f"expected {rows} outcomes, got shape {pos.shape}")
    return pos


def naive_decode(m: BinaryTestMatrix, outcomes, candidates=None) -> np.ndarray:
    """Return every item (optionally among ``candidates``) that sits in no negative test."""
    pos = _positives(outcomes, m.rows)
    cols = np.arange(m.cols, dtype=np.int64) if candidates is None else np.asarray(candidates, dtype=np.int64)
    keep = kernels.csr_survivors(m.col_ptr, m.col_idx, ~pos, cols)
    return np.sort(cols[keep])


# ---------------------------------------------------------------------------
# exhaustive oracles


def _column_masks(m: BinaryTestMatrix) -> list[int]:
    masks = []
    for j in range(m.cols):
        v = 0
        for i in m.column_support(j):
            v |= 1 << int(i)
        masks.append(v)
    return masks


def _check_budget(n: int, k: int, budget: int) -> None:
    cost = sum(math.comb(n, s) for s in range(k + 1)) * max(n, 1)
    if cost > budget:
        raise ValueError(f"exhaustive check needs ~{cost:.3g} steps, budget is {budget:.3g}")


def is_disjunct(m: BinaryTestMatrix, k: int, budget: int = DEFAULT_ORACLE_BUDGET) -> bool:
    """Brute-force k-disjunctness: no column's support lies inside the union of k others.

    Cost grows like C(n, k) * n; a ValueError is raised above ``budget``.
    """
    n = m.cols
    size = min(k, n - 1)
    _check_budget(n, size, budget)
    masks = _column_masks(m)
    # a cover by fewer than `size` columns extends to one of exactly `size`
    for dset in combinations(range(n), size):
        union = 0
        for j in dset:
            union |= masks[j]
        members = set(dset)
        for j in range(n):
            if j not in members and masks[j] & ~union == 0:
                return False
    return True


def is_list_disjunct(m: BinaryTestMatrix, k: int, l: int, budget: int = DEFAULT_ORACLE_BUDGET) -> bool:
    """Brute-force (k, l)-list-disjunctness.

    For every defective set D with |D| <= k and every disjoint set E with
    |E| = l there must be a row that avoids D and contains a member of E.
    Naive decoding then returns supp(x) plus fewer than ``l`` extra items.
    """
    n = m.cols
    _check_budget(n, k, budget)
    masks = _column_masks(m)
    for size in range(min(k, n) + 1):
        for dset in combinations(range(n), size):
            union = 0
            for j in dset:
                union |= masks[j]
            members = set(dset)
            hidden = sum(1 for j in range(n) if j not in members and masks[j] & ~union == 0)
            # any l of the hidden columns form an E with no separating row
            if hidden >= l:
                return False
    return True


# ---------------------------------------------------------------------------
# random concatenated codes


def concat_length(k: int, n: int, c_d: float = 5.0, rule: str = "proof") -> int:
    """Outer code length d for the random concatenated matrices.

    ``rule="proof"`` gives ceil(c_d * (k log k + log log_k n)), enough for the
    union bound over all pairs of k-sets inside a 4k^2 candidate pool.
    ``rule="short"`` gives 5 log k + ceil(log log_k n / k).
    """
    b = max(k, 2)
    loglog = math.log2(max(math.log(max(n, 2)) / math.log(b), 2.0))
    if rule == "proof":
        return max(1, math.ceil(c_d * (k * math.log2(b) + loglog)))
    if rule == "short":
        return max(1, math.ceil(5 * math.log2(b) + math.ceil(loglog / k)))
    raise ValueError(f"unknown d rule {rule!r}")


def forall_length(k: int, n: int, margin_bits: float = 10.0) -> int:
    """Outer length making a random 4k-ary concatenated code (k,k)-list-disjunct
    over all of [n] except with probability 2**-margin_bits.

    Each block lets k codewords cover k others with probability at most
    (k/q)^k = 4^-k.
    """
    pairs = math.comb(n, k) * math.comb(max(n - k, 0), k)
    bits = math.log2(max(pairs, 1)) + margin_bits
    return max(1, math.ceil(bits / (2 * k)))


@dataclass(frozen=True)
class ConcatCodeMatrix:
    """Identity code over [4k] concatenated with a random outer code of length d.

    Column j has a single 1 in each of the d consecutive blocks of q = 4k
    rows, at row ``b*q + codeword[j][b]``.  Symbols come from a counter-based
    hash of ``(rng_seed, j, b)``, so a column can be produced without
    building the rest of the matrix.
    """

    m_cols: int
    k: int
    d: int
    rng_seed: int

    @property
    def q(self) -> int:
        return 4 * self.k

    @property
    def rows(self) -> int:
        return self.q * self.d

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.m_cols)

    def symbols(self, cols) -> np.ndarray:
        cols = np.asarray(cols, dtype=np.int64)
        return kernels.concat_symbols(self.rng_seed, cols, self.d, self.q)

    def column_rows(self, cols) -> np.ndarray:
        """Row indices of the given columns, shape ``(len(cols), d)``."""
        return self.symbols(cols) + (np.arange(self.d, dtype=np.int64) * self.q)[None, :]

    @property
    def codeword_table(self) -> np.ndarray:
        if self.m_cols * self.d > _MATERIALIZE_LIMIT:
            raise MemoryError("codeword table too large to materialize")
        return self.symbols(np.arange(self.m_cols))

    @property
    def base(self) -> BinaryTestMatrix:
        rows = self.column_rows(np.arange(self.m_cols)) if self.m_cols * self.d <= _MATERIALIZE_LIMIT else None
        if rows is None:
            raise MemoryError("matrix too large to materialize")
        col_ptr = np.arange(self.m_cols + 1, dtype=np.int64) * self.d
        return BinaryTestMatrix(self.rows, self.m_cols, col_ptr, rows.ravel(), rng_seed=self.rng_seed)

    def outcomes(self, support) -> np.ndarray:
        pos = np.zeros(self.rows, dtype=bool)
        support = np.asarray(support, dtype=np.int64)
        if support.size:
            pos[self.column_rows(support).ravel()] = True
        return pos

    def survivors(self, outcomes, candidates) -> np.ndarray:
        """Naive decoding restricted to ``candidates``."""
        pos = _positives(outcomes, self.rows)
        cands = np.asarray(candidates, dtype=np.int64)
        keep = kernels.concat_filter(self.rng_seed, cands, self.d, self.q, ~pos)
        return cands[keep]


def build_concat_matrix(m_cols: int, k: int, d: int, seed: int) -> ConcatCodeMatrix:
    if k < 1 or d < 1 or m_cols < 1:
        raise ValueError("m_cols, k and d must be positive")
    return ConcatCodeMatrix(int(m_cols), int(k), int(d), int(seed))


# ---------------------------------------------------------------------------
# recursive two-stage construction


@dataclass(eq=False)
class GTNode:
    universe: int
    matrix: ConcatCodeMatrix
    offset: int = 0  # first global row of this node's own matrix
    split: int = 0  # sqrt(universe) for internal nodes
    high: "GTNode | None" = None  # keyed on idx // split
    low: "GTNode | None" = None  # keyed on idx % split
    path: str = ""

    @property
    def is_leaf(self) -> bool:
        return self.high is None

    def row_slice(self) -> slice:
        return slice(self.offset, self.offset + self.matrix.rows)


@dataclass(eq=False)
class RecursiveGTMatrix:
    """Two-stage group testing matrix built by recursive squaring.

    Rows are laid out as ``high-subtree | low-subtree | own matrix`` at every
    internal node.  Items ``>= n`` exist only as padding and never test
    positive.
    """

    n: int
    k: int
    padded_n: int
    d: int
    root: GTNode
    total_rows: int
    nodes: list[GTNode] = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.total_rows, self.n)

    @property
    def rows(self) -> int:
        return self.total_rows

    def local_indices(self, cols) -> dict[int, np.ndarray]:
        """Map global columns to each node's own column index (keyed by id(node))."""
        cols = np.asarray(cols, dtype=np.int64)
        out = {}
        stack = [(self.root, cols)]
        while stack:
            node, idx = stack.pop()
            out[id(node)] = idx
            if not node.is_leaf:
                stack.append((node.high, idx // node.split))
                stack.append((node.low, idx % node.split))
        return out

    def column_rows(self, cols) -> np.ndarray:
        """Global row indices of each column, shape ``(len(cols), weight)``."""
        local = self.local_indices(cols)
        parts = [node.matrix.column_rows(local[id(node)]) + node.offset for node in self.nodes]
        return np.concatenate(parts, axis=1) if parts else np.zeros((len(cols), 0), dtype=np.int64)

    @property
    def column_weight(self) -> int:
        return self.d * len(self.nodes)

    def outcomes(self, support) -> np.ndarray:
        pos = np.zeros(self.total_rows, dtype=bool)
        support = np.asarray(support, dtype=np.int64)
        if support.size:
            pos[self.column_rows(support).ravel()] = True
        return pos

    def to_binary(self) -> BinaryTestMatrix:
        if self.n * self.column_weight > _MATERIALIZE_LIMIT:
            raise MemoryError("matrix too large to materialize")
        rows = np.sort(self.column_rows(np.arange(self.n)), axis=1)
        col_ptr = np.arange(self.n + 1, dtype=np.int64) * self.column_weight
        return BinaryTestMatrix(self.total_rows, self.n, col_ptr, rows.ravel())


def padded_universe(n: int, k: int) -> tuple[int, int]:
    """Return ``(N, T)``: N = b**(2**T) is the smallest such power >= n, b = max(k, 2).

    For n <= b**2 no padding happens and T = 0.
    """
    b = max(k, 2)
    if n <= b * b:
        return n, 0
    t, size = 1, b * b
    while size < n:
        t += 1
        size = size * size
    return size, t


def build_recursive_matrix(
    n: int, k: int, seed: int = 0, c_d: float = 5.0, d_rule: str = "proof", d: int | None = None
) -> RecursiveGTMatrix:
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    big_n, _ = padded_universe(n, k)
    leaf_max = max(k, 2) ** 2
    d = concat_length(k, big_n, c_d, d_rule) if d is None else int(d)
    nodes: list[GTNode] = []

    def make(universe: int, path: str) -> GTNode:
        mat = build_concat_matrix(universe, k, d, derive_seed(seed, "gt-node", path))
        node = GTNode(universe, mat, path=path)
        if universe > leaf_max:
            node.split = math.isqrt(universe)
            node.high = make(node.split, path + "R")
            node.low = make(node.split, path + "C")
        nodes.append(node)
        return node

    root = make(big_n, "")

    def layout(node: GTNode, offset: int) -> int:
        if not node.is_leaf:
            offset = layout(node.high, offset)
            offset = layout(node.low, offset)
        node.offset = offset
        return offset + node.matrix.rows

    total = layout(root, 0)
    nodes.sort(key=lambda nd: nd.offset)
    return RecursiveGTMatrix(n, k, big_n, d, root, total, nodes)


@dataclass
class DecodeStats:
    candidates_checked: int = 0
    node_outputs: dict = field(default_factory=dict)


def recursive_decode(a: RecursiveGTMatrix, outcomes, stats: DecodeStats | None = None) -> np.ndarray:
    """Bottom-up two-stage decoding of a :class:`RecursiveGTMatrix`.

    ``outcomes`` covers all ``a.total_rows`` tests.  Leaves decode their whole
    (small) universe; an internal node only examines the pairs
    ``high * split + low`` of its children's outputs.  Pass a
    :class:`DecodeStats` to record how many candidates were examined.
    """
    pos = _positives(outcomes, a.total_rows)
    stats = stats if stats is not None else DecodeStats()

    def solve(node: GTNode) -> np.ndarray:
        if node.is_leaf:
            cands = np.arange(node.universe, dtype=np.int64)
        else:
            hi = solve(node.high)
            lo = solve(node.low)
            cands = (hi[:, None] * node.split + lo[None, :]).ravel()
        stats.candidates_checked += cands.size
        found = node.matrix.survivors(pos[node.row_slice()], cands)
        stats.node_outputs[node.path] = found.size
        return np.sort(found)

    found = solve(a.root)
    return found[found < a.n]


def full_scan_decode(a: RecursiveGTMatrix, outcomes) -> np.ndarray:
    """Baseline: naive decoding of the root matrix over all n items."""
    pos = _positives(outcomes, a.total_rows)
    root = a.root
    sub = pos[root.row_slice()]
    chunk = 1 << 18
    found = []
    for start in range(0, a.n, chunk):
        cands = np.arange(start, min(a.n, start + chunk), dtype=np.int64)
        found.append(root.matrix.survivors(sub, cands))
    return np.concatenate(found) if found else np.zeros(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# Kautz-Singleton and tensored (real-valued) tests


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % f for f in range(2, math.isqrt(p) + 1))


def _digits_needed(n: int, q: int) -> int:
    length, cap = 1, q
    while cap < n:
        length += 1
        cap *= q
    return length


def kautz_singleton_params(n: int, k: int) -> tuple[int, int]:
    """Smallest prime q (and message length L) with q**L >= n and q >= k(L-1)+1."""
    q = 2
    while True:
        if _is_prime(q):
            length = _digits_needed(n, q)
            if q >= k * (length - 1) + 1:
                return q, length
        q += 1


def build_kautz_singleton(n: int, k: int, q: int | None = None) -> BinaryTestMatrix:
    """Reed-Solomon over GF(q) concatenated with the identity code: a q^2 x n matrix.

    Column j evaluates the polynomial whose coefficients are the base-q
    digits of j at every field element.  Two columns share at most L-1 rows,
    so the matrix is k-disjunct whenever q >= k(L-1)+1.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    if q is None:
        q, length = kautz_singleton_params(n, k)
    else:
        if not _is_prime(q):
            raise ValueError("q must be prime")
        length = _digits_needed(n, q)
        if length > q:
            raise ValueError(f"q={q} too small to give {n} distinct codewords")
        if q < k * (length - 1) + 1:
            warnings.warn(f"q={q} does not guarantee {k}-disjunctness for n={n}", stacklevel=2)
    cols = np.arange(n, dtype=np.int64)
    coeffs = np.empty((n, length), dtype=np.int64)
    rest = cols.copy()
    for i in range(length):
        coeffs[:, i] = rest % q
        rest //= q
    alphas = np.arange(q, dtype=np.int64)
    powers = np.ones((length, q), dtype=np.int64)
    for i in range(1, length):
        powers[i] = (powers[i - 1] * alphas) % q
    values = (coeffs @ powers) % q  # (n, q): evaluation at each alpha
    rows = alphas[None, :] * q + values
    col_ptr = np.arange(n + 1, dtype=np.int64) * q
    return BinaryTestMatrix(q * q, n, col_ptr, np.sort(rows, axis=1).ravel())


def vandermonde(k: int, n: int, seed: int, kind: str = "vandermonde") -> RealMatrix:
    """k x n matrix whose k x k minors are all nonzero (almost surely).

    Nodes are drawn uniformly from [1, 2]; row i holds node**i.  For large k
    the powers get badly conditioned, and ``kind="gaussian"`` gives an i.i.d.
    normal matrix with the same minor property.
    """
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        return RealMatrix(rng.standard_normal((k, n)), rng_seed=seed)
    if kind != "vandermonde":
        raise ValueError(kind)
    if k > 12:
        warnings.warn("Vandermonde rows beyond 12 are ill-conditioned; consider kind='gaussian'", stacklevel=2)
    nodes = rng.uniform(1.0, 2.0, size=n)
    return RealMatrix(nodes[None, :] ** np.arange(k)[:, None], rng_seed=seed)


def zero_tests(y_pos, y_neg, k: int) -> np.ndarray:
    """Tests whose k tensored measurements all read as zero.

    A measurement z reads as zero iff sign(z) = sign(-z) = +1.
    """
    yp = np.asarray(y_pos)
    yn = np.asarray(y_neg)
    if yp.shape != yn.shape or yp.size % k:
        raise ValueError("sign vectors must have equal length divisible by k")
    zero = (yp == 1) & (yn == 1)
    return zero.reshape(-1, k).all(axis=1)


def modified_decode(a: BinaryTestMatrix, v, y_pos, y_neg, candidates=None) -> np.ndarray:
    """Decode from ``sign((a (x) v) x)`` and ``sign(-(a (x) v) x)``.

    Test j of ``a`` counts as negative when all of its ``v.rows`` tensored
    measurements are zero; naive decoding then proceeds as usual.
    """
    kv = v.shape[0]
    y_pos = y_pos.bits if isinstance(y_pos, SignVector) else y_pos
    y_neg = y_neg.bits if isinstance(y_neg, SignVector) else y_neg
    if len(y_pos) != a.rows * kv:
        raise ValueError(f"expected {a.rows * kv} measurements, got {len(y_pos)}")
    negative = zero_tests(y_pos, y_neg, kv)
    return naive_decode(a, ~negative, candidates)


class TensoredMatrix:
    """Implicit ``a (x) v`` for binary ``a``: row ``j*v.rows + r`` is ``a[j] * v[r]``."""

    def __init__(self, a: BinaryTestMatrix, v: RealMatrix):
        if a.cols != v.shape[1]:
            raise ValueError("column mismatch")
        self.a = a
        self.v = v

    @property
    def shape(self) -> tuple[int, int]:
        return (self.a.rows * self.v.shape[0], self.a.cols)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        kv = self.v.shape[0]
        out = np.zeros((self.a.rows, kv))
        vd = self.v.to_dense()
        for i in np.flatnonzero(x):
            out[self.a.column_support(int(i))] += vd[:, i] * x[i]
        return out.ravel()
