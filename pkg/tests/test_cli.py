import csv
import subprocess
import sys

import pytest

from ssgvi.cli import BENCH_FIELDS, main, resolve_model
from ssgvi.io import load_model
from ssgvi.model import UsageError, validate_model


def test_solve_ptvi_chain(capsys):
    assert main(["solve", "--alg", "ptvi", "tvi-chain:25"]) == 0
    out = capsys.readouterr().out
    assert "value:      0.6" in out and "Precise" in out


def test_solve_tvi_stalls(capsys):
    assert main(["solve", "--alg", "tvi", "tvi-chain:25"]) == 1
    assert "Stalled" in capsys.readouterr().out


def test_solve_vi_warns(capsys):
    assert main(["solve", "--alg", "vi", "fig1"]) == 0
    cap = capsys.readouterr()
    assert "no guarantee" in cap.err
    value = float(cap.out.split("value:")[1].split()[0]) if "value:" in cap.out else None
    assert value is not None and abs(value - 0.5) <= 1e-3


def test_solve_flags(capsys):
    args = ["solve", "--alg", "bvi", "--epsilon", "1e-4", "--mode", "relative", "--deflate-every", "5",
            "--gauss-seidel", "--timeout-s", "10", "--max-iter", "100000", "fig1"]
    assert main(args) == 0
    assert "Converged" in capsys.readouterr().out


def test_usage_errors(capsys, tmp_path):
    assert main(["solve", "no-such-thing"]) == 2
    assert main(["solve", "--epsilon", "-1", "fig1"]) == 2
    bad = tmp_path / "bad.ssg"
    bad.write_text("ssg 1\nstates 1\n")
    assert main(["solve", str(bad)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--alg", "nope", "fig1"])
    assert exc.value.code == 2


def test_resolve_model_specs():
    assert resolve_model("fig1").n == 4
    assert resolve_model("simple-scc:100:2").n == 100
    assert resolve_model("random:12:3").n == 12
    with pytest.raises(UsageError):
        resolve_model("tvi-chain")


def test_generate_and_analyze(tmp_path, capsys):
    out = tmp_path / "corpus"
    assert main(["generate", "--kind", "random", "--n", "100", "--count", "10", "--seed", "7", "--out", str(out)]) == 0
    files = sorted(out.glob("*.ssg"))
    assert len(files) == 10
    for f in files:
        m = load_model(f)
        assert validate_model(m).ok and m.n == 100
    csv_path = tmp_path / "features.csv"
    assert main(["analyze", str(out), "--out", str(csv_path)]) == 0
    rows = list(csv.reader(csv_path.open()))
    assert len(rows) == 12 and rows[-1][0] == "aggregate_mean"


def test_generate_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["generate", "--kind", "tree", "--n", "15", "--count", "3", "--seed", "1", "--out", str(tmp_path / d)])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_generate_handcrafted(tmp_path):
    assert main(["generate", "--kind", "simple-scc", "--n", "40", "--m", "2", "--out", str(tmp_path)]) == 0
    assert load_model(tmp_path / "simple-scc_40.ssg").n == 40


def test_bench_matrix_and_append(tmp_path):
    out = tmp_path / "corpus"
    main(["generate", "--kind", "random", "--n", "8", "--count", "3", "--seed", "2", "--out", str(out)])
    csv_path = tmp_path / "bench.csv"
    args = ["bench", str(out), "--algs", "bvi,ovi,ptvi", "--timeout-s", "20", "--workers", "3", "--out", str(csv_path)]
    assert main(args) == 0
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 9
    assert list(rows[0].keys()) == list(BENCH_FIELDS)
    assert {(r["model_name"], r["algorithm"]) for r in rows} == {
        (f.stem, a) for f in out.glob("*.ssg") for a in ("bvi", "ovi", "ptvi")
    }
    for r in rows:
        assert float(r["value_at_initial_lower"]) <= float(r["value_at_initial_upper"])
    assert main(args + ["--append"]) == 0
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 18


def test_bench_timeout_recorded(tmp_path):
    csv_path = tmp_path / "bench.csv"
    assert main(["bench", "ovi-hard:300", "--algs", "bvi", "--timeout-s", "0.2", "--out", str(csv_path)]) == 0
    (row,) = list(csv.DictReader(csv_path.open()))
    assert row["status"] == "Timeout"


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ssgvi.cli", "solve", "--alg", "si", "fig1"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.5" in r.stdout
