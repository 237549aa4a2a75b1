"""Regenerate the certified matrix corpus: python3 tests/corpus/build_corpus.py

Verdicts come from the set-based oracle in tests/_oracle.py.
"""

import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from _oracle import disjunct, list_disjunct  # noqa: E402


def kautz_singleton_dense(q, length, n):
    """Reed-Solomon degree < length over GF(q), identity inner code, first n codewords."""
    rows = np.zeros((q * q, n), dtype=np.uint8)
    for j in range(n):
        coeffs = [(j // q**t) % q for t in range(length)]
        for x in range(q):
            val = sum(c * x**t for t, c in enumerate(coeffs)) % q
            rows[x * q + val, j] = 1
    return rows


def matrices():
    rng = np.random.default_rng(20240611)
    yield "identity8", np.eye(8, dtype=np.uint8)
    yield "ks_q3_n9", kautz_singleton_dense(3, 2, 9)
    yield "ks_q5_n14", kautz_singleton_dense(5, 2, 14)
    yield "ks_q3_n14_len3", kautz_singleton_dense(3, 3, 14)
    # a repeated column: never disjunct, but list-disjunct once one false positive is allowed
    ks = kautz_singleton_dense(5, 2, 13)
    yield "ks_q5_twin", np.hstack([ks, ks[:, :1]])
    for i, (rows, n, p) in enumerate([(6, 8, 0.4), (10, 10, 0.3), (12, 12, 0.25), (14, 14, 0.3),
                                      (16, 12, 0.2), (20, 14, 0.2), (9, 14, 0.35), (24, 14, 0.15),
                                      (18, 10, 0.25), (8, 6, 0.5), (30, 12, 0.15), (36, 14, 0.12),
                                      (28, 10, 0.2), (40, 14, 0.1), (32, 13, 0.18)]):
        a = (rng.random((rows, n)) < p).astype(np.uint8)
        for j in np.flatnonzero(a.sum(axis=0) == 0):
            a[rng.integers(rows), j] = 1
        yield f"bernoulli{i}_{rows}x{n}", a


def main():
    manifest = []
    for name, a in matrices():
        rows, cols = a.shape
        path = HERE / f"{name}.txt"
        with open(path, "w") as fh:
            fh.write(f"{rows} {cols} binary 0\n")
            for r in a:
                fh.write(" ".join(str(int(v)) for v in r) + "\n")
        verdict = {
            "name": name,
            "file": path.name,
            "disjunct": {str(k): disjunct(a, k) for k in (1, 2, 3)},
            "list_disjunct": {f"{k},{l}": list_disjunct(a, k, l) for k in (1, 2, 3) for l in (1, 2, 3)},
        }
        manifest.append(verdict)
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


if __name__ == "__main__":
    main()
