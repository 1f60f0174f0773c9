import csv
import io
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from occwalk.cli import main
from occwalk.riesz import riesz_walk_alphas


def rows_of(path: Path) -> list[dict]:
    return list(csv.DictReader(io.StringIO(path.read_text())))


def only(out: Path, pattern: str) -> Path:
    (path,) = sorted(out.glob(pattern))
    return path


def test_occupation_hadamard_two_steps(tmp_path):
    code = main([
        "occupation", "--model", "hadamard", "--steps", "2", "--engine", "brute",
        "--alignment", "transition-rules", "--format", "csv", "--out", str(tmp_path),
    ])
    assert code == 0
    rows = rows_of(only(tmp_path, "hadamard-n2-*.csv"))
    got = [(int(r["r"]), float(r["prob"])) for r in rows]
    assert [r for r, _ in got] == [0, 1, 2]
    assert [p for _, p in got] == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)


def test_occupation_all_formats_and_matrix(tmp_path):
    dump = tmp_path / "u.csv"
    code = main([
        "occupation", "--model", "constant", "--alpha", "3/5", "--steps", "10",
        "--format", "csv,json", "--format", "svg", "--dump-matrix", str(dump), "--out", str(tmp_path),
    ])
    assert code == 0
    stem = only(tmp_path, "constant-3-5-n10-*.csv").stem
    for suffix in (".json", ".svg", ".cdf.svg"):
        assert (tmp_path / f"{stem}{suffix}").exists()
    assert dump.read_text().startswith("row,col,re,im\n")


def test_classical_exact(tmp_path):
    assert main(["classical", "exact", "--steps", "4", "--out", str(tmp_path)]) == 0
    rows = rows_of(only(tmp_path, "classical-exact-n4-*.csv"))
    assert [r["prob"] for r in rows] == ["3/8", "0", "1/4", "0", "3/8"]


@pytest.mark.parametrize("mode", ["enumerate", "montecarlo", "arcsine"])
def test_classical_modes(tmp_path, mode):
    args = ["classical", mode, "--out", str(tmp_path), "--format", "json"]
    if mode != "arcsine":
        args += ["--steps", "6"]
    if mode == "montecarlo":
        args += ["--seed", "11", "--trials", "2000"]
    assert main(args) == 0
    data = json.loads(only(tmp_path, "*.json").read_text())
    decode = Fraction if data["exact"] else float
    assert abs(sum(decode(p) for p in data["probs"]) - 1) <= 1e-9
    if mode == "arcsine":
        assert data["n"] == 100


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model: constant\nalpha: 12/13\nsteps: 6\nengine: density\nformat: json\n")
    out = tmp_path / "o"
    assert main(["occupation", "--config", str(cfg), "--steps", "8", "--out", str(out)]) == 0
    data = json.loads(only(out, "*.json").read_text())
    assert data["n"] == 8 and data["engine"] == "density"
    assert data["config"]["model"]["alpha"] == "12/13"
    cfgj = tmp_path / "run.json"
    cfgj.write_text(json.dumps({"model": "hadamard", "steps": 3, "format": "csv"}))
    assert main(["occupation", "--config", str(cfgj), "--out", str(out)]) == 0
    only(out, "hadamard-n3-*.csv")


def test_riesz_alphas(tmp_path, capsys):
    assert main(["riesz-alphas", "--count", "8"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["index"] for r in rows] == list(range(-9, 8))
    seq = riesz_walk_alphas()
    for r in rows:
        assert r["re"] == seq.alpha(r["index"]) and r["im"] == 0
        assert r["rho"] == pytest.approx((1 - r["re"] ** 2) ** 0.5, abs=1e-15)
    target = tmp_path / "a.json"
    assert main(["riesz-alphas", "--count", "4", "--alpha-minus-one", "0.5", "--output", str(target)]) == 0
    rows = {r["index"]: r for r in json.loads(target.read_text())}
    assert rows[-1]["re"] == 0.5


def test_sweep_steps(tmp_path, capsys):
    code = main(["sweep", "--model", "polynomial_coin", "--steps", "10,20,30", "--out", str(tmp_path)])
    assert code == 0
    index = json.loads((tmp_path / "index.json").read_text())
    assert [e["steps"] for e in index["runs"]] == [10, 20, 30]
    assert (tmp_path / "sweep-cdf.svg").exists()


def test_sweep_alphas_and_runs_file(tmp_path):
    assert main(["sweep", "--model", "constant", "--alphas", "3/5,12/13", "--steps", "12", "--jobs", "2",
                 "--out", str(tmp_path / "a")]) == 0
    assert len(json.loads((tmp_path / "a" / "index.json").read_text())["runs"]) == 2
    plan = tmp_path / "sweep.yaml"
    plan.write_text("engine: density\nruns:\n  - {model: hadamard, steps: 4}\n  - {model: riesz, steps: 6}\n")
    assert main(["sweep", "--config", str(plan), "--out", str(tmp_path / "b")]) == 0
    runs = json.loads((tmp_path / "b" / "index.json").read_text())["runs"]
    assert [r["steps"] for r in runs] == [4, 6]


def test_plot_command(tmp_path):
    main(["occupation", "--model", "hadamard", "--steps", "6", "--format", "json", "--out", str(tmp_path)])
    record = only(tmp_path, "hadamard-n6-*.json")
    target = tmp_path / "p.svg"
    assert main(["plot", str(record), "--kind", "cdf", "--output", str(target)]) == 0
    assert "<svg" in target.read_text()


@pytest.mark.parametrize(
    "argv,code",
    [
        (["occupation", "--model", "constant", "--steps", "3"], 2),
        (["occupation", "--model", "constant", "--alpha", "7/5", "--steps", "3"], 2),
        (["occupation", "--model", "hadamard"], 2),
        (["classical", "enumerate", "--steps", "30"], 2),
        (["sweep", "--model", "hadamard"], 2),
        (["occupation", "--model", "hadamard", "--steps", "25", "--engine", "brute"], 3),
        (["occupation", "--model", "hadamard", "--steps", "10", "--window", "8"], 3),
    ],
)
def test_exit_codes(tmp_path, argv, code):
    assert main(argv + ["--out", str(tmp_path)]) == code


@pytest.mark.parametrize("argv", [["occupation", "--model", "nonsense"], ["occupation", "--format", "png"]])
def test_argparse_usage_error_exit_two(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_io_error_exit_four(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["occupation", "--model", "hadamard", "--steps", "2", "--out", str(blocker / "d")]) == 4
    assert main(["occupation", "--config", str(tmp_path / "missing.yaml")]) == 4
    assert main(["plot", str(tmp_path / "missing.json")]) == 4


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "occwalk.cli", "classical", "exact", "--steps", "2", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "classical-exact n=2" in proc.stdout
