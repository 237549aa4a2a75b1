import json
import math
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

import _oracle
from onebitcs.core import BinaryTestMatrix, RealMatrix, load_matrix, sign_encode
from onebitcs.grouptesting import (
    DecodeStats,
    TensoredMatrix,
    build_concat_matrix,
    build_kautz_singleton,
    build_recursive_matrix,
    concat_length,
    forall_length,
    full_scan_decode,
    is_disjunct,
    is_list_disjunct,
    kautz_singleton_params,
    modified_decode,
    naive_decode,
    padded_universe,
    recursive_decode,
    vandermonde,
    zero_tests,
)

CORPUS = Path(__file__).resolve().parent / "corpus"


def B(a):
    return BinaryTestMatrix.from_dense(np.asarray(a, dtype=int))


# -- naive decoding ---------------------------------------------------------


def test_naive_identity():
    assert naive_decode(B(np.eye(3)), np.array([False, True, False])).tolist() == [1]


def test_naive_all_ones_row():
    assert naive_decode(B(np.ones((1, 5))), np.array([True])).tolist() == list(range(5))


def test_naive_length_mismatch():
    with pytest.raises(ValueError):
        naive_decode(B(np.eye(3)), np.array([True, False]))


def test_naive_random_1_disjunct_singletons():
    rng = np.random.default_rng(12)
    while True:
        a = (rng.random((10, 12)) < 0.4).astype(int)
        if _oracle.disjunct(a, 1):
            break
    m = B(a)
    assert is_disjunct(m, 1)
    for j in range(12):
        assert naive_decode(m, m.outcomes([j])).tolist() == [j]


def test_naive_candidates_restrict():
    m = B(np.eye(4))
    pos = m.outcomes([0, 2])
    assert naive_decode(m, pos, candidates=[2, 3]).tolist() == [2]


# -- oracles ----------------------------------------------------------------


def test_identity_is_disjunct():
    for n in (2, 5, 8):
        for k in range(1, n):
            assert is_disjunct(B(np.eye(n)), k)


def test_all_ones_not_disjunct():
    assert not is_disjunct(B(np.ones((1, 4))), 1)


def test_disjunct_implies_list_disjunct_on_identity():
    for l in (1, 2, 3):
        assert is_list_disjunct(B(np.eye(4)), 2, l)


def test_all_zero_not_list_disjunct():
    z = BinaryTestMatrix.from_column_supports(3, [[], [], [], []])
    for k in (1, 2):
        for l in (1, 2):
            assert not is_list_disjunct(z, k, l)


def test_bernoulli_20x16_matches_set_oracle():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a = (rng.random((20, 16)) < 1 / 3).astype(int)
        assert is_list_disjunct(B(a), 2, 2) == _oracle.list_disjunct(a, 2, 2)
        assert is_disjunct(B(a), 2) == _oracle.disjunct(a, 2)


def test_oracle_budget_guard():
    with pytest.raises(ValueError):
        is_disjunct(B(np.eye(60)), 5, budget=1000)


def test_corpus_verdicts():
    manifest = json.loads((CORPUS / "manifest.json").read_text())
    assert len(manifest) >= 15
    for entry in manifest:
        m = load_matrix(CORPUS / entry["file"])
        assert m.cols <= 14
        dense = m.to_dense()
        for k, verdict in entry["disjunct"].items():
            assert is_disjunct(m, int(k)) == verdict == _oracle.disjunct(dense, int(k)), entry["name"]
        for kl, verdict in entry["list_disjunct"].items():
            k, l = map(int, kl.split(","))
            assert is_list_disjunct(m, k, l) == verdict == _oracle.list_disjunct(dense, k, l), entry["name"]


# -- concatenated codes -----------------------------------------------------


def test_concat_structure():
    c = build_concat_matrix(3, 1, 2, seed=4)
    base = c.base
    assert base.shape == (8, 3)
    for j in range(3):
        rows = base.column_support(j)
        assert rows.size == 2
        assert sorted(r // 4 for r in rows) == [0, 1]
    assert np.array_equal(c.column_rows([0, 1, 2]) % 4, c.codeword_table)


def test_concat_deterministic_and_seeded():
    a = build_concat_matrix(50, 2, 6, seed=1).codeword_table
    assert np.array_equal(a, build_concat_matrix(50, 2, 6, seed=1).codeword_table)
    assert not np.array_equal(a, build_concat_matrix(50, 2, 6, seed=2).codeword_table)


def test_concat_symbols_uniform():
    t = build_concat_matrix(20000, 2, 5, seed=8).codeword_table.ravel()
    freq = np.bincount(t, minlength=8) / t.size
    assert np.all(np.abs(freq - 1 / 8) < 4 * math.sqrt((1 / 8) * (7 / 8) / t.size))


def test_concat_survivors_match_naive():
    c = build_concat_matrix(200, 2, 7, seed=3)
    pos = c.outcomes([5, 77])
    assert np.array_equal(c.survivors(pos, np.arange(200)), naive_decode(c.base, pos))


def test_concat_list_disjunct_rate():
    # k=2, d=12, 64 columns: a random set of 16 columns is (2,2)-list-disjunct for most seeds
    ok = 0
    for seed in range(200):
        c = build_concat_matrix(64, 2, 12, seed=seed)
        cols = np.random.default_rng(seed).choice(64, size=16, replace=False)
        sub = BinaryTestMatrix.from_column_supports(c.rows, [c.base.column_support(int(j)) for j in cols])
        ok += is_list_disjunct(sub, 2, 2)
    assert ok / 200 >= 0.9


def test_lengths():
    assert concat_length(3, 6561) == math.ceil(5 * (3 * math.log2(3) + math.log2(8)))
    assert concat_length(4, 1 << 16, rule="short") == 5 * 2 + 1
    with pytest.raises(ValueError):
        concat_length(2, 10, rule="bogus")
    assert forall_length(2, 64) == math.ceil((math.log2(math.comb(64, 2) * math.comb(62, 2)) + 10) / 4)


# -- recursive construction -------------------------------------------------


def test_padded_universe():
    assert padded_universe(9, 3) == (9, 0)
    assert padded_universe(10, 3) == (81, 2)
    assert padded_universe(6561, 3) == (6561, 3)
    assert padded_universe(3, 1) == (3, 0)


def test_base_case_single_node():
    a = build_recursive_matrix(9, 3, seed=1)
    assert len(a.nodes) == 1 and a.root.is_leaf
    pos = a.outcomes([2, 7])
    assert np.array_equal(recursive_decode(a, pos), naive_decode(a.root.matrix.base, pos))


def test_one_recursion_step_rows():
    a = build_recursive_matrix(81, 3, seed=2)
    assert len(a.nodes) == 3
    assert a.total_rows == a.root.matrix.rows + a.root.high.matrix.rows + a.root.low.matrix.rows
    assert a.root.offset == a.total_rows - a.root.matrix.rows


def test_total_rows_scale():
    k, n = 4, 65536
    a = build_recursive_matrix(n, k, seed=0)
    assert a.total_rows == sum(nd.matrix.rows for nd in a.nodes)
    # nodes ~ log_b n, each 4k*d rows: c = 4d / log2(b) absorbs the d-rule
    c = 4 * a.d / math.log2(max(k, 2))
    predicted = c * k * math.log2(n)
    assert predicted / 2 <= a.total_rows <= 2 * predicted


def test_leaf_and_depth_invariants():
    a = build_recursive_matrix(6561, 3, seed=0)

    def walk(node, depth):
        assert node.universe == round(a.padded_n ** (1 / 2**depth))
        if node.is_leaf:
            assert node.universe <= 9
        else:
            walk(node.high, depth + 1)
            walk(node.low, depth + 1)

    walk(a.root, 0)


def test_binary_form_matches_implicit():
    a = build_recursive_matrix(100, 2, seed=5)
    b = a.to_binary()
    rng = np.random.default_rng(0)
    for _ in range(20):
        supp = rng.choice(100, size=2, replace=False)
        assert np.array_equal(b.outcomes(supp), a.outcomes(supp))


def test_recursive_zero_signal():
    a = build_recursive_matrix(6561, 3, seed=4)
    assert recursive_decode(a, np.zeros(a.total_rows, dtype=bool)).size == 0


def test_recursive_decode_superset_and_budget():
    a = build_recursive_matrix(6561, 3, seed=11)
    rng = np.random.default_rng(3)
    for _ in range(50):
        supp = np.sort(rng.choice(6561, size=3, replace=False))
        stats = DecodeStats()
        s = recursive_decode(a, a.outcomes(supp), stats)
        assert set(supp) <= set(s.tolist())
        assert stats.candidates_checked <= len(a.nodes) * 4 * 9


def test_padding_never_returned():
    a = build_recursive_matrix(100, 3, seed=2)
    assert a.padded_n == 6561
    s = recursive_decode(a, a.outcomes([99, 3]))
    assert s.max() < 100 and {3, 99} <= set(s.tolist())


def test_full_scan_agrees_on_root():
    a = build_recursive_matrix(6561, 3, seed=6)
    pos = a.outcomes([1, 500, 6000])
    fs = full_scan_decode(a, pos)
    assert {1, 500, 6000} <= set(fs.tolist())
    assert set(recursive_decode(a, pos).tolist()) <= set(fs.tolist())


# -- Kautz-Singleton and tensored tests -------------------------------------


def test_ks_params():
    assert kautz_singleton_params(27, 2) == (5, 3)
    assert kautz_singleton_params(10, 1) == (3, 3)


@pytest.mark.parametrize("n", [8, 20, 64])
def test_ks_k1_disjunct(n):
    assert is_disjunct(build_kautz_singleton(n, 1), 1)


def test_ks_q7_n27():
    m = build_kautz_singleton(27, 2, q=7)
    assert m.rows == 49 and is_disjunct(m, 2)
    assert _oracle.disjunct(m.to_dense(), 2)


def test_ks_constant_weight():
    m = build_kautz_singleton(40, 2)
    q = math.isqrt(m.rows)
    assert all(m.column_support(j).size == q for j in range(40))


def test_ks_rejects_bad_q():
    with pytest.raises(ValueError):
        build_kautz_singleton(27, 2, q=6)
    with pytest.warns(UserWarning):
        build_kautz_singleton(27, 3, q=5)


def test_vandermonde_minors():
    v = vandermonde(3, 10, seed=1)
    assert v.shape == (3, 10)
    for cols in combinations(range(10), 3):
        assert abs(np.linalg.det(v.entries[:, cols])) > 1e-8
    with pytest.warns(UserWarning):
        vandermonde(13, 20, seed=0)
    assert vandermonde(13, 20, seed=0, kind="gaussian").shape == (13, 20)


def _tensored_signs(a, v, x):
    t = TensoredMatrix(a, v)
    return sign_encode(t, x), sign_encode(t, -x)


def test_zero_tests():
    yp = np.array([1, 1, -1, 1, 1, 1])
    yn = np.array([1, 1, 1, -1, 1, 1])
    assert zero_tests(yp, yn, 2).tolist() == [True, False, True]
    with pytest.raises(ValueError):
        zero_tests(yp, yn, 4)


def test_modified_decode_k1_classic():
    a = build_kautz_singleton(16, 1)
    v = RealMatrix(np.full((1, 16), 2.0))
    x = np.zeros(16)
    x[9] = -3.0
    assert modified_decode(a, v, *_tensored_signs(a, v, x)).tolist() == [9]


def test_modified_decode_zero_signal():
    a = build_kautz_singleton(16, 2)
    v = vandermonde(2, 16, seed=0)
    assert modified_decode(a, v, *_tensored_signs(a, v, np.zeros(16))).size == 0


def test_modified_decode_exact_on_ks():
    a = build_kautz_singleton(32, 2)
    rng = np.random.default_rng(7)
    for trial in range(100):
        v = vandermonde(2, 32, seed=trial)
        x = np.zeros(32)
        supp = rng.choice(32, size=2, replace=False)
        x[supp] = rng.standard_normal(2)
        assert modified_decode(a, v, *_tensored_signs(a, v, x)).tolist() == sorted(supp.tolist())


def test_zero_pattern_matches_boolean_outcomes():
    a = build_kautz_singleton(32, 3)
    rng = np.random.default_rng(9)
    for trial in range(50):
        v = vandermonde(3, 32, seed=trial)
        x = np.zeros(32)
        supp = rng.choice(32, size=3, replace=False)
        x[supp] = rng.standard_normal(3)
        yp, yn = _tensored_signs(a, v, x)
        assert np.array_equal(~zero_tests(yp.bits, yn.bits, 3), a.outcomes(supp))


def test_modified_decode_length_check():
    a = build_kautz_singleton(16, 2)
    v = vandermonde(2, 16, seed=0)
    with pytest.raises(ValueError):
        modified_decode(a, v, np.ones(3, dtype=np.int8), np.ones(3, dtype=np.int8))
