import os
import subprocess
import sys

import numpy as np
import pytest

from onebitcs import kernels, _fallback
from onebitcs.heavy import SketchConfig, build_sketch
from onebitcs.grouptesting import build_concat_matrix

IMPLS = kernels.implementations()


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "numpy")
    assert "numpy" in IMPLS


def test_pure_python_switch():
    env = dict(os.environ, ONEBIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from onebitcs import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_concat_kernels_agree(name):
    K = IMPLS[name]
    rng = np.random.default_rng(0)
    cols = rng.integers(0, 1 << 40, size=5000)
    sym = K.concat_symbols(123, cols, 9, 12)
    assert np.array_equal(sym, _fallback.concat_symbols(123, cols, 9, 12))
    assert sym.min() >= 0 and sym.max() < 12
    neg = rng.random(108) < 0.5
    assert np.array_equal(K.concat_filter(123, cols, 9, 12, neg), _fallback.concat_filter(123, cols, 9, 12, neg))


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_csr_kernel_agrees(name):
    K = IMPLS[name]
    base = build_concat_matrix(500, 2, 6, 4).base
    neg = np.random.default_rng(1).random(base.rows) < 0.4
    cols = np.arange(500)
    got = K.csr_survivors(base.col_ptr, base.col_idx, neg, cols)
    assert np.array_equal(got, _fallback.csr_survivors(base.col_ptr, base.col_idx, neg, cols))
    dense = base.to_dense().astype(bool)
    assert np.array_equal(np.asarray(got, dtype=bool), ~(dense & neg[:, None]).any(axis=0))


@pytest.mark.parametrize("name", sorted(IMPLS))
def test_sketch_kernels_agree(name):
    K = IMPLS[name]
    ens = build_sketch(SketchConfig(n=64, k=2, c0=4, c1=6, c2=2, seed=3))
    c = ens.cfg
    rng = np.random.default_rng(2)
    y = np.where(rng.random((c.schemes, c.c1, c.buckets)) < 0.5, 1, -1).astype(np.int8)
    cands = np.arange(32, dtype=np.int64)
    got = K.agreement_counts(y, ens.buckets[1], ens.signs[1], cands)
    ref = _fallback.agreement_counts(y, ens.buckets[1], ens.signs[1], cands)
    assert np.array_equal(got, ref)
    # direct definition
    for m in range(c.schemes):
        for i, a in enumerate(cands):
            want = sum(int(y[m, t, ens.buckets[1][m, t, a]] == ens.signs[1][m, t, a]) for t in range(c.c1))
            assert ref[m, i] == want
    lo, hi = 1.2, 4.8
    assert np.array_equal(K.score_level(y, ens.buckets[1], ens.signs[1], cands, lo, hi),
                          _fallback.score_level(y, ens.buckets[1], ens.signs[1], cands, lo, hi))
