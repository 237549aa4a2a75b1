import csv
import io
import math

import pytest

from onebitcs import bench
from onebitcs.bench import TrialRow, read_rows, rows_to_csv
from onebitcs.cli import main, parse_constants, ConfigError


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_support_exhaustive(tmp_path, capsys):
    code, out = run(tmp_path, "--scheme", "support", "--n", "27", "--k", "2", "--trials", "0", "--exhaustive")
    assert code == 0
    rows = read_rows(out.open())
    assert len(rows) == math.comb(27, 2)
    assert all(r.success == 1 for r in rows)
    assert "success_rate=1.0000" in capsys.readouterr().out


def test_header_order(tmp_path):
    _, out = run(tmp_path, "run", "--scheme", "support", "--n", "27", "--k", "2", "--trials", "2")
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["scheme", "n", "k", "delta", "seed", "measurements", "stage1_size",
                      "squared_error", "success", "build_ms", "encode_ms", "decode_ms"]


def test_l2l2_smoke(tmp_path):
    code, out = run(tmp_path, "--scheme", "l2l2", "--n", "16", "--k", "1", "--delta", "1.0",
                    "--trials", "1", "--signal", "onehot")
    assert code == 0
    (row,) = read_rows(out.open())
    assert row.success == 1 and row.squared_error <= 1.0


def test_byte_identical(tmp_path):
    args = ["--scheme", "foreach", "--n", "729", "--k", "2", "--trials", "4", "--seed", "5", "--no-timings"]
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_threads_keep_order(tmp_path, monkeypatch):
    args = ["--scheme", "forall", "--n", "32", "--k", "2", "--trials", "6", "--seed", "2", "--no-timings"]
    _, a = run(tmp_path, *args, name="a.csv")
    monkeypatch.setenv("ONEBIT_THREADS", "4")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_round_trip_exact():
    rows = [TrialRow("l2l2", 16, 1, 0.1, 3, 10, 2, 1 / 3, 1, math.pi, 1e-300, 2.5e17)]
    assert read_rows(io.StringIO(rows_to_csv(rows))) == rows


def test_success_consistent_with_error(tmp_path):
    _, out = run(tmp_path, "--scheme", "forall", "--n", "64", "--k", "2", "--trials", "5", "--delta", "0.25")
    for r in read_rows(out.open()):
        assert r.success == int(r.squared_error <= r.delta)


@pytest.mark.parametrize("args", [
    ["--scheme", "foreach", "--n", "100", "--k", "2", "--trials", "0", "--exhaustive"],
    ["--scheme", "support", "--n", "2000", "--k", "3", "--trials", "0", "--exhaustive"],
    ["--scheme", "support", "--n", "27", "--k", "2", "--trials", "3", "--exhaustive"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--delta", "2"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--constants", "bogus=1"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--constants", "c0=abc"],
    ["--scheme", "foreach", "--n", "64", "--k", "2", "--signal", "planted"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--dump-matrix", "m.txt"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--signal", "nope"],
    ["--scheme", "l2l2", "--n", "64", "--k", "2", "--trials", "-1"],
])
def test_invalid_config_exits_2(tmp_path, args, capsys):
    code, _ = run(tmp_path, *args)
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_dump_and_load(tmp_path):
    m = tmp_path / "m.txt"
    code, a = run(tmp_path, "--scheme", "support", "--n", "27", "--k", "2", "--trials", "0",
                  "--exhaustive", "--dump-matrix", str(m), "--no-timings", name="a.csv")
    assert code == 0 and m.read_text().startswith("25 27 binary")
    code, b = run(tmp_path, "--scheme", "support", "--n", "27", "--k", "2", "--trials", "0",
                  "--exhaustive", "--load-matrix", str(m), "--no-timings", name="b.csv")
    assert code == 0 and a.read_bytes() == b.read_bytes()
    code, _ = run(tmp_path, "--scheme", "forall", "--n", "30", "--k", "2", "--trials", "0",
                  "--exhaustive", "--load-matrix", str(m))
    assert code == 2


def test_dump_foreach(tmp_path):
    m = tmp_path / "m.txt"
    code, _ = run(tmp_path, "--scheme", "foreach", "--n", "81", "--k", "2", "--trials", "1", "--dump-matrix", str(m))
    assert code == 0 and m.read_text().split()[1] == "81"


def test_constants_parsing():
    assert parse_constants(["c0=8", "c_g=12.5", "d_rule=short", "ks_q=7"]) == {
        "c0": 8, "c_g": 12.5, "d_rule": "short", "ks_q": 7}
    with pytest.raises(ConfigError):
        parse_constants(["n=3"])


def test_constants_applied(tmp_path):
    _, out = run(tmp_path, "--scheme", "support", "--n", "27", "--k", "2", "--trials", "1",
                 "--constants", "ks_q=7")
    (row,) = read_rows(out.open())
    assert row.measurements == 2 * 49 * 2


def test_scaling_command(capsys):
    assert main(["scaling", "--k", "2", "--n-list", "256,4096,65536", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "n,trials,median_decode_ms,median_baseline_ms"
    assert "exponent=" in out


def test_scaling_rejects_unsorted(capsys):
    assert main(["scaling", "--n-list", "81,9", "--trials", "1"]) == 2


def test_fit_exponent():
    assert bench.fit_exponent([10, 100, 1000], [1, 10, 100]) == pytest.approx(1.0)
    assert bench.fit_exponent([10, 100, 1000], [3, 3, 3]) == pytest.approx(0.0, abs=1e-12)


def test_summary_empty():
    s = bench.summarize([])
    assert s["trials"] == 0 and math.isnan(s["success_rate"])


def test_stdout_output(capsys):
    assert main(["--scheme", "support", "--n", "27", "--k", "2", "--trials", "2", "--out", "-"]) == 0
    captured = capsys.readouterr()
    rows = list(csv.reader(io.StringIO(captured.out)))
    assert len(rows) == 3 and "success_rate" in captured.err
