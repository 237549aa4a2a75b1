"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Every kernel is checked for identical output before it is timed.
"""

import argparse
import time

import numpy as np

from onebitcs.core import derive_seed
from onebitcs.grouptesting import build_concat_matrix
from onebitcs.heavy import SketchConfig, build_sketch
from onebitcs.kernels import implementations


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def cases():
    rng = np.random.default_rng(0)
    q, d, cols = 16, 40, np.arange(200_000, dtype=np.int64)
    negative = rng.random(q * d) < 0.7
    yield "concat_symbols", lambda K: K.concat_symbols(11, cols, d, q)
    yield "concat_filter", lambda K: K.concat_filter(11, cols, d, q, negative)

    base = build_concat_matrix(20_000, 3, 30, derive_seed(1, "bench")).base
    neg = rng.random(base.rows) < 0.6
    sub = np.arange(base.cols, dtype=np.int64)
    yield "csr_survivors", lambda K: K.csr_survivors(base.col_ptr, base.col_idx, neg, sub)

    ens = build_sketch(SketchConfig(n=4096, k=4, seed=3))
    c = ens.cfg
    y = np.where(rng.random((c.schemes, c.c1, c.buckets)) < 0.5, 1, -1).astype(np.int8)
    cands = np.arange(4096, dtype=np.int64)
    yield "agreement_counts", lambda K: K.agreement_counts(y, ens.buckets[0], ens.signs[0], cands)
    yield "score_level", lambda K: K.score_level(y, ens.buckets[0], ens.signs[0], cands, 0.2 * c.c1, 0.8 * c.c1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = implementations()
    if "cython" not in impls:
        print("compiled kernels not built; only the numpy fallback is available")
    print(f"{'kernel':<18}" + "".join(f"{name + ' ms':>14}" for name in impls) + f"{'speedup':>10}")
    for name, fn in cases():
        outs = {b: np.asarray(fn(K)) for b, K in impls.items()}
        ref = outs["numpy"]
        for b, out in outs.items():
            if not np.array_equal(out, ref):
                raise SystemExit(f"{name}: {b} output differs from numpy")
        times = {b: _time(lambda K=K: fn(K), args.repeat) for b, K in impls.items()}
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<18}" + "".join(f"{times[b]:>14.3f}" for b in impls) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
