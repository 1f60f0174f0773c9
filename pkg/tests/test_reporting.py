import csv
import io
import json
import os
import re
import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from occwalk import reporting
from occwalk.errors import EngineGuardError, InvalidConfigError, LightConeError, OutputError
from occwalk.models import ModelSpec, build_unitary
from occwalk.reporting import (
    ResultRecord,
    RunConfig,
    compute,
    csv_bytes,
    dump_matrix,
    json_bytes,
    plot,
    plot_many,
    run,
    sweep,
)
from occwalk.svg import Frame

GOLDEN = Path(__file__).parent / "golden"
SVG_NS = "{http://www.w3.org/2000/svg}"

GOLDEN_CASES = {
    "hadamard-rules-brute-n2": dict(model="hadamard", steps=2, engine="brute", alignment="transition-rules"),
    "classical-exact-n4": dict(model="classical-exact", steps=4),
    "arcsine-n4": dict(model="arcsine", steps=4),
    "polynomial-block-n12": dict(model="polynomial_coin", steps=12, engine="transform", method="block"),
}


def read_csv(data: bytes) -> list[dict]:
    return list(csv.DictReader(io.StringIO(data.decode())))


def svg_root(text: str) -> ET.Element:
    return ET.fromstring(text)


def polylines(root: ET.Element) -> list[list[tuple[float, float]]]:
    out = []
    for el in root.iter(f"{SVG_NS}polyline"):
        pts = [tuple(map(float, p.split(","))) for p in el.get("points").split()]
        out.append(pts)
    return out


# ------------------------------------------------------------------ golden files


def produce(name: str, out: Path, threads: int = 1) -> dict[str, bytes]:
    cfg = RunConfig(**GOLDEN_CASES[name], formats=("csv", "json", "svg"), out=str(out), threads=threads)
    rec = run(cfg)
    return {Path(p).name.replace(cfg.stem, name): Path(p).read_bytes() for p in rec.files.values()}


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_files(name, tmp_path):
    files = produce(name, tmp_path)
    assert len(files) == 4
    for fname, data in files.items():
        golden = GOLDEN / fname
        if os.environ.get("OCCWALK_UPDATE_GOLDEN"):
            GOLDEN.mkdir(exist_ok=True)
            golden.write_bytes(data)
        assert golden.read_bytes() == data, fname


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_files_independent_of_threads(name, tmp_path):
    assert produce(name, tmp_path / "a", threads=1) == produce(name, tmp_path / "b", threads=4)


def test_golden_hadamard_values():
    rows = read_csv((GOLDEN / "hadamard-rules-brute-n2.csv").read_bytes())
    assert [r["r"] for r in rows] == ["0", "1", "2"]
    assert [float(r["ratio"]) for r in rows] == [0, 0.5, 1]
    assert np.allclose([float(r["prob"]) for r in rows], [0.5, 0, 0.5], atol=1e-15)
    assert float(rows[-1]["cdf"]) == pytest.approx(1.0, abs=1e-15)


def test_golden_classical_values():
    rows = read_csv((GOLDEN / "classical-exact-n4.csv").read_bytes())
    assert [r["prob"] for r in rows] == ["3/8", "0", "1/4", "0", "3/8"]
    assert [r["cdf"] for r in rows] == ["3/8", "3/8", "5/8", "5/8", "1"]
    data = json.loads((GOLDEN / "classical-exact-n4.json").read_text())
    assert data["exact"] is True and data["probs"] == ["3/8", "0", "1/4", "0", "3/8"]


def test_golden_arcsine_values():
    rows = read_csv((GOLDEN / "arcsine-n4.csv").read_bytes())
    cdf = [float(r["cdf"]) for r in rows]
    assert cdf[2] == pytest.approx(0.5, abs=1e-15)
    assert cdf[1] == pytest.approx(1 / 3, abs=1e-15)  # (2/pi) asin(1/2)


# ------------------------------------------------------------------ run + cache


def test_csv_rows_sum_to_one(tmp_path):
    for kw in (
        dict(model="riesz", steps=15),
        dict(model="constant", alpha="12/13", steps=9, engine="density"),
        dict(model="classical-montecarlo", steps=6, trials=5000, seed=7),
        dict(model="arcsine", steps=50),
    ):
        rec = run(RunConfig(**kw, formats=("csv",), out=str(tmp_path)))
        rows = read_csv(Path(rec.files["csv"]).read_bytes())
        assert abs(sum(float(r["prob"]) for r in rows) - 1) <= 1e-9
        assert abs(float(rows[-1]["cdf"]) - 1) <= 1e-9


def test_cache_hit_identical_bytes(tmp_path):
    cfg = RunConfig("riesz", 20, formats=("csv", "json", "svg"), out=str(tmp_path))
    first = run(cfg)
    before = {k: Path(v).read_bytes() for k, v in first.files.items()}
    cache = tmp_path / "cache" / f"{cfg.config_hash()}.json"
    cache_bytes = cache.read_bytes()
    second = run(cfg)
    assert not first.cached and second.cached
    assert {k: Path(v).read_bytes() for k, v in second.files.items()} == before
    assert cache.read_bytes() == cache_bytes
    assert second.to_dict() == first.to_dict()


def test_corrupt_cache_is_recomputed(tmp_path):
    cfg = RunConfig("hadamard", 6, out=str(tmp_path))
    run(cfg)
    cache = tmp_path / "cache" / f"{cfg.config_hash()}.json"
    cache.write_text("{not json")
    rec = run(cfg)
    assert not rec.cached
    assert json.loads(cache.read_text())["n"] == 6


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError):
        run(RunConfig("hadamard", 2, out=str(blocker / "sub")))


def test_json_schema(tmp_path):
    rec = compute(RunConfig("constant", 8, alpha="3/5"))
    d = json.loads(json_bytes(rec))
    for key in ("config", "engine", "n", "probs", "cdf", "diagnostics", "version", "config_hash"):
        assert key in d
    assert {"pre_clamp_sum", "boundary_mass"} <= set(d["diagnostics"])
    assert "wall_time" not in d
    assert ResultRecord.from_dict(d).to_dict() == d


def test_exact_record_round_trip():
    rec = compute(RunConfig("classical-enumerate", 6))
    back = ResultRecord.from_dict(json.loads(json_bytes(rec)))
    assert back.exact and back.probs == rec.probs and all(isinstance(p, Fraction) for p in back.probs)
    assert csv_bytes(back) == csv_bytes(rec)


def test_montecarlo_record_metadata():
    rec = compute(RunConfig("classical-montecarlo", 4, trials=1000, seed=5))
    assert rec.metadata["rng"] and sum(rec.metadata["counts"]) == 1000
    assert rec.config["seed"] == 5


def test_malformed_record():
    with pytest.raises(InvalidConfigError):
        ResultRecord.from_dict({"n": 1})


# ------------------------------------------------------------------ config


def test_config_hash_canonical():
    a = RunConfig("riesz", 10, threads=1, out="x", formats=("csv",))
    b = RunConfig("riesz", 10, threads=8, out="y", formats=("svg",))
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != RunConfig("riesz", 10, alignment="transition-rules").config_hash()
    assert a.config_hash() != RunConfig("riesz", 10, engine="density").config_hash()
    assert RunConfig("constant", 3, alpha="3/5").config_hash() == RunConfig("constant", 3, alpha=0.6).config_hash()
    assert re.fullmatch(r"[0-9a-f]{64}", a.config_hash())


def test_from_mapping():
    cfg = RunConfig.from_mapping({"model": "constant", "alpha": "12/13", "steps": "7", "riesz-depth": 4, "format": "csv,svg"})
    assert cfg.alpha == Fraction(12, 13) and cfg.steps == 7 and cfg.formats == ("csv", "svg")
    with pytest.raises(InvalidConfigError):
        RunConfig.from_mapping({"model": "hadamard", "steps": 1, "colour": "red"})
    with pytest.raises(InvalidConfigError):
        RunConfig.from_mapping({"model": "hadamard"})


@pytest.mark.parametrize(
    "kwargs,error",
    [
        (dict(model="hadamard", steps=21, engine="brute"), EngineGuardError),
        (dict(model="hadamard", steps=10, window=11), LightConeError),
        (dict(model="hadamard", steps=-1), InvalidConfigError),
        (dict(model="ising", steps=3), InvalidConfigError),
        (dict(model="constant", steps=3), InvalidConfigError),
        (dict(model="constant", steps=3, alpha="5/4"), InvalidConfigError),
        (dict(model="hadamard", steps=3, engine="magic"), InvalidConfigError),
        (dict(model="hadamard", steps=3, formats=("png",)), InvalidConfigError),
        (dict(model="classical-enumerate", steps=25), InvalidConfigError),
        (dict(model="classical-montecarlo", steps=3, trials=0), InvalidConfigError),
        (dict(model="arcsine", steps=0), InvalidConfigError),
    ],
)
def test_config_validation(kwargs, error):
    with pytest.raises(error):
        RunConfig(**kwargs)


# ------------------------------------------------------------------ plots


def test_svg_structure():
    rec = compute(RunConfig("riesz", 12))
    for kind in ("density", "cdf"):
        root = svg_root(plot(rec, kind))
        assert root.get("viewBox") == "0 0 800 500"
        assert len(polylines(root)) == 1
        assert root.get("data-config-hash") == rec.config_hash
        entries = {e.get("key"): e.text for e in root.iter(f"{SVG_NS}entry")}
        assert entries["config-hash"] == rec.config_hash
        title = "".join(root.find(f"{SVG_NS}title").itertext())
        assert rec.label in title and "n=12" in title and "transform" in title


def test_svg_one_polyline_per_series():
    recs = [compute(RunConfig("hadamard", n)) for n in (4, 6, 8)]
    root = svg_root(plot_many(recs, "cdf"))
    assert len(polylines(root)) == 3
    assert root.get("data-config-hash") == ",".join(r.config_hash for r in recs)


def test_density_points_and_cdf_steps():
    rec = compute(RunConfig("classical-exact", 4))
    frame = Frame(ymax=1.0)
    (dens,) = polylines(svg_root(plot(rec, "density")))
    assert len(dens) == 5
    (cdf,) = polylines(svg_root(plot(rec, "cdf")))
    # a step curve holds each value until the next abscissa
    xs = [frame.data_x(x) for x, _ in cdf]
    assert xs == sorted(xs) and len(cdf) > 5
    ys = sorted({round(frame.data_y(y), 2) for _, y in cdf})
    assert ys == [0.0, 0.38, 0.62, 1.0]  # the step rises from 0 at x = 0


def test_arcsine_cdf_through_midpoint():
    rec = compute(RunConfig("arcsine", 100))
    frame = Frame(ymax=1.0)
    (pts,) = polylines(svg_root(plot(rec, "cdf")))
    x, y = min(pts, key=lambda p: abs(p[0] - frame.px(0.5)))
    assert abs(x - frame.px(0.5)) <= 1.0
    assert abs(y - frame.py(0.5)) <= 1.0


def test_hadamard_n120_edge_maxima():
    rec = compute(RunConfig("hadamard", 120))
    p = rec.float_probs()
    assert abs(sum(p) - 1) <= 1e-10
    assert int(np.argmax(p)) in (0, 120)
    assert p[0] == pytest.approx(p.max(), abs=1e-12) and p[-1] == pytest.approx(p.max(), abs=1e-12)
    (pts,) = polylines(svg_root(plot(rec, "density")))
    top = min(y for _, y in pts)
    assert pts[0][1] == top and pts[-1][1] == top


def test_plot_errors():
    rec = compute(RunConfig("hadamard", 2))
    with pytest.raises(InvalidConfigError):
        plot(rec, "histogram")
    with pytest.raises(InvalidConfigError):
        plot_many([], "density")


# ------------------------------------------------------------------ sweeps


def test_sweep_polynomial_triple(tmp_path):
    cfgs = [RunConfig("polynomial_coin", n, formats=("csv", "svg")) for n in (60, 90, 110)]
    res = sweep(cfgs, str(tmp_path))
    assert len(res) == 3 and not res.errors
    index = json.loads(Path(res.index_path).read_text())
    assert [e["steps"] for e in index["runs"]] == [60, 90, 110]
    assert all(e["status"] == "ok" for e in index["runs"])
    root = svg_root((tmp_path / "sweep-density.svg").read_text())
    assert len(polylines(root)) == 3


def test_sweep_constant_pair(tmp_path):
    cfgs = [RunConfig("constant", 120, alpha=a) for a in ("3/5", "12/13")]
    res = sweep(cfgs, str(tmp_path), jobs=2)
    assert len(res) == 2
    assert [r.label for r in res] == ["constant(3/5)", "constant(12/13)"]


def test_sweep_collects_errors(tmp_path, monkeypatch):
    real = reporting.compute

    def flaky(cfg):
        if cfg.steps == 5:
            raise EngineGuardError("simulated failure")
        return real(cfg)

    monkeypatch.setattr(reporting, "compute", flaky)
    res = sweep([RunConfig("hadamard", n) for n in (4, 5, 6)], str(tmp_path))
    assert [r.n for r in res] == [4, 6]
    assert res.errors[0]["steps"] == 5 and res.errors[0]["exit_code"] == 3
    index = json.loads(Path(res.index_path).read_text())
    assert [e["status"] for e in index["runs"]] == ["ok", "error", "ok"]


def test_sweep_empty():
    with pytest.raises(InvalidConfigError):
        sweep([])


# ------------------------------------------------------------------ matrix dump


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_dump_matrix(tmp_path, fmt):
    u = build_unitary(ModelSpec("constant", Fraction(3, 5)), 3)
    path = tmp_path / f"u.{fmt}"
    dump_matrix(u, path)
    if fmt == "csv":
        rows = read_csv(path.read_bytes())
        entries = [(int(r["row"]), int(r["col"]), complex(float(r["re"]), float(r["im"]))) for r in rows]
    else:
        entries = [(r, c, complex(a, b)) for r, c, a, b in json.loads(path.read_text())["entries"]]
    dense = u.to_dense()
    assert len(entries) == np.count_nonzero(dense)
    for r, c, v in entries:
        assert u.entry(r, c) == v
    with pytest.raises(InvalidConfigError):
        dump_matrix(u, tmp_path / "u.txt")
