"""Monte-Carlo trial driver, CSV rows and the decode-time scaling report."""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np

from .core import derive_seed, rng_for
from .schemes import (
    ForEachScheme,
    SchemeConfig,
    SchemeReport,
    build_scheme,
    exhaustive_signals,
    make_signal,
    run_trial,
)


@dataclass(frozen=True)
class TrialRow:
    scheme: str
    n: int
    k: int
    delta: float
    seed: int
    measurements: int
    stage1_size: int
    squared_error: float
    success: int
    build_ms: float
    encode_ms: float
    decode_ms: float

    @classmethod
    def from_report(cls, r: SchemeReport, timings: bool = True) -> "TrialRow":
        t = (r.build_ms, r.encode_ms, r.decode_ms) if timings else (0.0, 0.0, 0.0)
        return cls(
            r.scheme, r.n, r.k, float(r.delta), int(r.seed), r.measurements_used,
            int(r.stage1_set.size), float(r.squared_error), int(r.success), *map(float, t),
        )

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_fields(self) -> list[str]:
        return [_fmt(v) for v in astuple(self)]

    @classmethod
    def parse(cls, row: dict | list) -> "TrialRow":
        if isinstance(row, dict):
            row = [row[name] for name in cls.header()]
        vals = []
        for f, raw in zip(fields(cls), row):
            vals.append(raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw)))
        return cls(*vals)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_rows(stream, rows) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TrialRow.header())
    for row in rows:
        w.writerow(row.to_fields())


def read_rows(stream) -> list[TrialRow]:
    return [TrialRow.parse(r) for r in csv.DictReader(stream)]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_rows(buf, rows)
    return buf.getvalue()


def worker_count() -> int:
    raw = os.environ.get("ONEBIT_THREADS", "1")
    try:
        return max(1, min(int(raw), os.cpu_count() or 1))
    except ValueError:
        return 1


def trial_config(cfg: SchemeConfig, t: int) -> SchemeConfig:
    return cfg.replace(seed=derive_seed(cfg.seed, "trial", t))


def _one_trial(cfg: SchemeConfig, signal: str, t: int) -> SchemeReport:
    x = make_signal(signal, cfg.n, cfg.k, rng_for(cfg.seed, "signal", t))
    return run_trial(trial_config(cfg, t), x)


def monte_carlo(cfg: SchemeConfig, trials: int, signal: str, workers: int | None = None) -> list[SchemeReport]:
    """Independent trials, each with a fresh matrix draw; results in trial order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1:
        return [_one_trial(cfg, signal, t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: _one_trial(cfg, signal, t), range(trials)))


def exhaustive(cfg: SchemeConfig, tests=None) -> list[SchemeReport]:
    """One matrix draw, every k-support of ``[n]`` (all sign patterns for ``forall``)."""
    if cfg.scheme not in ("forall", "support"):
        raise ValueError("exhaustive sweeps apply to the forall and support schemes")
    t0 = time.perf_counter()
    scheme = build_scheme(cfg, tests)
    build_ms = (time.perf_counter() - t0) * 1e3
    rng = rng_for(cfg.seed, "exhaustive")
    out = []
    for x in exhaustive_signals(cfg.n, cfg.k, rng, sign_patterns=cfg.scheme == "forall"):
        r = run_trial(cfg, x, scheme)
        r.build_ms = build_ms
        out.append(r)
    return out


def summarize(reports) -> dict:
    if not reports:
        return {"trials": 0, "success_rate": float("nan"), "mean_error": float("nan"), "median_decode_ms": float("nan")}
    return {
        "trials": len(reports),
        "success_rate": float(np.mean([r.success for r in reports])),
        "mean_error": float(np.mean([r.squared_error for r in reports])),
        "median_decode_ms": float(np.median([r.decode_ms for r in reports])),
    }


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class ScalingRow:
    n: int
    trials: int
    median_decode_ms: float
    median_baseline_ms: float


@dataclass(frozen=True)
class ScalingReport:
    rows: list
    exponent: float
    baseline_exponent: float

    @property
    def sublinear(self) -> bool:
        return self.exponent < 0.5


def fit_exponent(ns, times) -> float:
    """Slope of log(time) against log(n)."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(times, float)), 1)[0])


def _best_of(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def scaling_report(
    scheme: str,
    k: int,
    n_list,
    trials: int,
    seed: int,
    delta: float = 0.25,
    repeats: int = 3,
    baseline: bool = True,
    **constants,
) -> ScalingReport:
    """Median stage-1 decode time per n, with a full-scan baseline for contrast.

    Each trial draws its own matrix and signal; the decoder runs ``repeats``
    times on the same measurements and the fastest run is kept, which damps
    scheduler noise without hiding any per-call work.
    """
    ns = list(n_list)
    if ns != sorted(ns):
        raise ValueError("n_list must be ascending")
    if scheme not in ("foreach", "noiseless_foreach"):
        raise ValueError("scaling report is defined for the foreach scheme")
    rows = []
    for n in ns:
        cfg = SchemeConfig("foreach", n, k, delta, seed=derive_seed(seed, "scaling", n), **constants)
        fast, slow = [], []
        for t in range(trials):
            tcfg = trial_config(cfg, t)
            sch = ForEachScheme(tcfg)
            x = make_signal("random-sparse", n, k, rng_for(cfg.seed, "signal", t))
            y = sch.encode(x)
            fast.append(_best_of(lambda: sch.stage1(y), repeats))
            if baseline:
                slow.append(_best_of(lambda: sch.stage1_full_scan(y), 1))
        rows.append(ScalingRow(n, trials, float(np.median(fast)), float(np.median(slow)) if slow else float("nan")))
    exp = fit_exponent(ns, [r.median_decode_ms for r in rows]) if len(ns) > 1 else float("nan")
    bexp = fit_exponent(ns, [r.median_baseline_ms for r in rows]) if baseline and len(ns) > 1 else float("nan")
    return ScalingReport(rows, exp, bexp)
