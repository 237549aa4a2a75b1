"""Pure numpy versions of the decoder kernels (used when the extension is absent)."""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
BLOCK = np.uint64(0xD6E8FEB86659FD93)
_CHUNK = 1 << 16


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def concat_symbols(seed, cols, d, q):
    """Outer-code symbols, shape ``(len(cols), d)``, values in ``[0, q)``."""
    cols = np.asarray(cols, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        h1 = _mix64(np.uint64(seed) + (cols + np.uint64(1)) * GOLDEN)
        b = (np.arange(1, d + 1, dtype=np.uint64) * BLOCK)[None, :]
        h = _mix64(h1[:, None] ^ b)
    return (h % np.uint64(q)).astype(np.int64)


def concat_filter(seed, cols, d, q, negative):
    """True for candidate columns that appear in no negative test."""
    cols = np.asarray(cols, dtype=np.int64)
    negative = np.asarray(negative, dtype=bool)
    out = np.empty(cols.size, dtype=bool)
    base = (np.arange(d, dtype=np.int64) * q)[None, :]
    for start in range(0, cols.size, _CHUNK):
        chunk = cols[start : start + _CHUNK]
        rows = base + concat_symbols(seed, chunk, d, q)
        out[start : start + chunk.size] = ~negative[rows].any(axis=1)
    return out


def csr_survivors(col_ptr, col_idx, negative, cols):
    """Naive-decoding filter on an explicit sparse matrix, restricted to ``cols``."""
    cols = np.asarray(cols, dtype=np.int64)
    negative = np.asarray(negative, dtype=bool)
    starts = col_ptr[cols]
    lens = col_ptr[cols + 1] - starts
    if cols.size == 0:
        return np.zeros(0, dtype=bool)
    total = int(lens.sum())
    if total == 0:
        return np.ones(cols.size, dtype=bool)
    owner = np.repeat(np.arange(cols.size), lens)
    offs = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
    hits = negative[col_idx[np.repeat(starts, lens) + offs]]
    bad = np.bincount(owner[hits], minlength=cols.size) > 0
    return ~bad


def score_level(y, bucket, sign, cands, lo, hi):
    """Number of schemes under which each candidate interval is "good".

    ``y`` has shape ``(M, T, B)``, ``bucket``/``sign`` shape ``(M, T, A)``.
    For each scheme the agreement count over ``T`` repetitions is compared
    against the thresholds ``cnt > hi`` or ``cnt < lo``.
    """
    cands = np.asarray(cands, dtype=np.int64)
    if cands.size == 0:
        return np.zeros(0, dtype=np.int64)
    b = bucket[:, :, cands]
    s = sign[:, :, cands]
    obs = np.take_along_axis(y, b.astype(np.int64), axis=2)
    cnt = (obs == s).sum(axis=1)
    good = (cnt > hi) | (cnt < lo)
    return good.sum(axis=0).astype(np.int64)


def agreement_counts(y, bucket, sign, cands):
    """Raw agreement counts, shape ``(M, len(cands))``; used for diagnostics."""
    cands = np.asarray(cands, dtype=np.int64)
    b = bucket[:, :, cands]
    obs = np.take_along_axis(y, b.astype(np.int64), axis=2)
    return (obs == sign[:, :, cands]).sum(axis=1).astype(np.int64)
