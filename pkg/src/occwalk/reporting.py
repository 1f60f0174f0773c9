"""Runs, records, caching and file output.

A :class:`RunConfig` names one computation.  :func:`run` executes it,
stores the :class:`ResultRecord` in a content-addressed cache under
``<out>/cache/<hash>.json`` and writes the requested CSV, JSON and SVG
files.  The emitted bytes depend only on the configuration and the tool
version: wall time is kept on the in-memory record and never written.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .basis import initial_state
from .classical import arcsine_cdf, enumerate_paths, exact_distribution, monte_carlo
from .cmv import BandedUnitary
from .engines import BRUTE_FORCE_MAX_STEPS, ENGINES, run_engine
from .errors import EngineGuardError, InvalidConfigError, LightConeError, OccupationError, OutputError
from .models import DEFAULT_ALIGNMENT, DEFAULT_RIESZ_DEPTH, MODEL_TAGS, ModelSpec, build_unitary
from .svg import Series, line_chart

__all__ = [
    "RunConfig",
    "ResultRecord",
    "SweepResult",
    "CLASSICAL_KINDS",
    "ALL_MODELS",
    "FORMATS",
    "TRANSFORM_METHODS",
    "run",
    "sweep",
    "compute",
    "plot",
    "plot_many",
    "csv_bytes",
    "json_bytes",
    "dump_matrix",
    "parse_rational",
    "parse_complex",
]

log = logging.getLogger(__name__)

CLASSICAL_KINDS = ("classical-exact", "classical-enumerate", "classical-montecarlo", "arcsine")
ALL_MODELS = MODEL_TAGS + CLASSICAL_KINDS
FORMATS = ("csv", "json", "svg")
TRANSFORM_METHODS = ("corner", "block")
DEFAULT_ARCSINE_POINTS = 100


def parse_rational(text) -> Fraction:
    """``"3/5"``, ``"0.6"`` or a number as an exact fraction."""
    if isinstance(text, Fraction):
        return text
    try:
        if isinstance(text, float):
            return Fraction(text).limit_denominator(10**12)
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise InvalidConfigError(f"not a rational number: {text!r}") from None


def parse_complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "")) if not isinstance(text, (int, float, complex)) else complex(text)
    except ValueError:
        raise InvalidConfigError(f"not a complex number: {text!r}") from None


def _frac_str(f: Fraction) -> str:
    """``num/den``, or the bare integer when the denominator is 1."""
    return str(Fraction(f))


def _g17(v: float) -> str:
    return f"{v:.17g}"


@dataclass(frozen=True)
class RunConfig:
    """One computation.  ``threads``, ``out`` and ``formats`` do not affect
    results and are left out of the configuration hash."""

    model: str
    steps: int
    engine: str = "transform"
    method: str = "corner"
    alpha: Fraction | None = None
    alpha_minus_one: complex = 0j
    riesz_depth: int = DEFAULT_RIESZ_DEPTH
    alignment: str = DEFAULT_ALIGNMENT
    window: int | None = None
    seed: int = 0
    trials: int = 100_000
    formats: tuple[str, ...] = ("csv", "json")
    out: str = "out"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.model not in ALL_MODELS:
            raise InvalidConfigError(f"unknown model {self.model!r}; choose from {', '.join(ALL_MODELS)}")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 0:
            raise InvalidConfigError(f"steps must be a non-negative integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", parse_rational(self.alpha))
        object.__setattr__(self, "alpha_minus_one", parse_complex(self.alpha_minus_one))
        object.__setattr__(self, "formats", tuple(self.formats))
        for f in self.formats:
            if f not in FORMATS:
                raise InvalidConfigError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be >= 1, got {self.threads}")
        if self.is_quantum:
            if self.engine not in ENGINES:
                raise InvalidConfigError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINES)}")
            if self.method not in TRANSFORM_METHODS:
                raise InvalidConfigError(f"unknown transform method {self.method!r}")
            if self.window is not None and self.window < 1:
                raise InvalidConfigError(f"window must be >= 1, got {self.window}")
            # the two engine guards are reported as such (exit code 3)
            if self.engine == "brute" and self.steps > BRUTE_FORCE_MAX_STEPS:
                raise EngineGuardError(
                    f"engine=brute needs steps <= {BRUTE_FORCE_MAX_STEPS}, got {self.steps}"
                )
            if self.window is not None and self.window < self.steps + 2:
                raise LightConeError(
                    f"window {self.window} is inside the light cone; need >= steps + 2 = {self.steps + 2}"
                )
            self.model_spec()
        if self.model == "classical-montecarlo":
            if self.trials < 1:
                raise InvalidConfigError(f"trials must be >= 1, got {self.trials}")
            if not 0 <= self.seed < 2**64:
                raise InvalidConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.model == "classical-enumerate" and self.steps > 24:
            raise InvalidConfigError(f"enumeration needs steps <= 24, got {self.steps}")
        if self.model == "arcsine" and self.steps < 1:
            raise InvalidConfigError("arcsine needs at least one grid interval")

    @property
    def is_quantum(self) -> bool:
        return self.model in MODEL_TAGS

    @property
    def effective_window(self) -> int:
        return self.window if self.window is not None else self.steps + 2

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            self.model,
            self.alpha,
            alpha_minus_one=self.alpha_minus_one,
            riesz_depth=self.riesz_depth,
            alignment=self.alignment,
        )

    def canonical(self) -> dict:
        d: dict = {"steps": self.steps}
        if self.is_quantum:
            d["model"] = self.model_spec().canonical()
            d["engine"] = self.engine
            if self.engine == "transform":
                d["method"] = self.method
            d["window"] = self.effective_window
        else:
            d["model"] = {"tag": self.model}
        if self.model == "classical-montecarlo":
            d["seed"] = self.seed
            d["trials"] = self.trials
        return d

    def config_hash(self) -> str:
        blob = json.dumps({"config": self.canonical(), "version": __version__}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def label(self) -> str:
        return self.model_spec().label if self.is_quantum else self.model

    @property
    def stem(self) -> str:
        tag = self.model if self.model != "constant" else f"constant-{self.alpha.numerator}-{self.alpha.denominator}"
        return f"{tag}-n{self.steps}-{self.config_hash()[:12]}"

    @classmethod
    def from_mapping(cls, data: Mapping, **overrides) -> "RunConfig":
        """Build from a dict with flag-style keys (dashes or underscores)."""
        known = set(cls.__dataclass_fields__)
        merged: dict = {}
        for key, value in {**data, **overrides}.items():
            k = key.replace("-", "_")
            if k == "format":
                k = "formats"
            if k not in known:
                raise InvalidConfigError(f"unknown configuration key {key!r}")
            if value is not None:
                merged[k] = value
        if "formats" in merged and isinstance(merged["formats"], str):
            merged["formats"] = tuple(f for f in merged["formats"].split(",") if f)
        for k in ("model", "steps"):
            if k not in merged:
                raise InvalidConfigError(f"configuration needs {k!r}")
        for k in ("steps", "riesz_depth", "seed", "trials", "threads", "window"):
            if k in merged:
                try:
                    merged[k] = int(merged[k])
                except (TypeError, ValueError):
                    raise InvalidConfigError(f"{k} must be an integer, got {merged[k]!r}") from None
        return cls(**merged)


@dataclass
class ResultRecord:
    """Outcome of one :class:`RunConfig`.

    ``probs`` and ``cdf`` hold floats, or :class:`Fraction` values when
    ``exact`` is set.  ``wall_time`` is informational and not serialized.
    """

    config: dict
    config_hash: str
    label: str
    engine: str
    n: int
    probs: tuple
    cdf: tuple
    diagnostics: dict
    version: str = __version__
    exact: bool = False
    metadata: dict = field(default_factory=dict)
    wall_time: float = 0.0
    cached: bool = False
    files: dict = field(default_factory=dict)

    def float_probs(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def float_cdf(self) -> np.ndarray:
        return np.array([float(c) for c in self.cdf])

    def to_dict(self) -> dict:
        enc = _frac_str if self.exact else float
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "label": self.label,
            "engine": self.engine,
            "n": self.n,
            "exact": self.exact,
            "probs": [enc(p) for p in self.probs],
            "cdf": [enc(c) for c in self.cdf],
            "diagnostics": self.diagnostics,
            "metadata": self.metadata,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ResultRecord":
        try:
            exact = bool(d.get("exact", False))
            dec = Fraction if exact else float
            return cls(
                config=d["config"],
                config_hash=d["config_hash"],
                label=d.get("label", ""),
                engine=d["engine"],
                n=int(d["n"]),
                probs=tuple(dec(p) for p in d["probs"]),
                cdf=tuple(dec(c) for c in d["cdf"]),
                diagnostics=dict(d["diagnostics"]),
                version=d["version"],
                exact=exact,
                metadata=dict(d.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfigError(f"malformed result record: {exc}") from None


def json_bytes(record: ResultRecord) -> bytes:
    return (json.dumps(record.to_dict(), sort_keys=True, indent=1) + "\n").encode()


def csv_bytes(record: ResultRecord) -> bytes:
    """``r,ratio,prob,cdf``; rationals as ``num/den`` in exact mode."""
    lines = ["r,ratio,prob,cdf"]
    n = record.n
    for r, (p, c) in enumerate(zip(record.probs, record.cdf)):
        ratio = _g17(r / n) if n else "0"
        if record.exact:
            lines.append(f"{r},{ratio},{_frac_str(p)},{_frac_str(c)}")
        else:
            lines.append(f"{r},{ratio},{_g17(float(p))},{_g17(float(c))}")
    return ("\n".join(lines) + "\n").encode()


def _title(record: ResultRecord) -> str:
    return f"{record.label}, n={record.n}, engine={record.engine}"


def plot(record: ResultRecord, kind: str = "density") -> str:
    """SVG of the density (discrete probabilities) or the cdf (step curve)."""
    return plot_many([record], kind)


def plot_many(records: Sequence[ResultRecord], kind: str = "density") -> str:
    if kind not in ("density", "cdf"):
        raise InvalidConfigError(f"plot kind must be 'density' or 'cdf', got {kind!r}")
    if not records or any(len(r.probs) == 0 for r in records):
        raise InvalidConfigError("cannot plot an empty record")
    series = []
    for rec in records:
        x = np.arange(rec.n + 1) / rec.n if rec.n else np.zeros(1)
        y = rec.float_probs() if kind == "density" else rec.float_cdf()
        series.append(Series(f"{rec.label}, n={rec.n}", x, y, step=(kind == "cdf" and rec.engine != "arcsine")))
    title = _title(records[0]) if len(records) == 1 else f"{kind}: " + "; ".join(
        f"{r.label} n={r.n}" for r in records
    )
    meta = {"config-hash": ",".join(r.config_hash for r in records), "version": __version__, "kind": kind}
    return line_chart(
        series,
        title=title,
        y_label="P(N_n = r)" if kind == "density" else "P(N_n <= r)",
        metadata=meta,
        ymax=1.0 if kind == "cdf" else None,
    )


def _atomic_write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _cumulative(probs: Sequence) -> tuple:
    if probs and isinstance(probs[0], Fraction):
        out, acc = [], Fraction(0)
        for p in probs:
            acc += p
            out.append(acc)
        return tuple(out)
    return tuple(float(c) for c in np.cumsum(np.asarray(probs, dtype=float)))


def compute(config: RunConfig) -> ResultRecord:
    """Run the computation named by ``config`` without touching the disk."""
    start = time.perf_counter()
    exact = False
    meta: dict = {}
    n = config.steps
    if config.is_quantum:
        window = config.effective_window
        u = build_unitary(config.model_spec(), window)
        dist = run_engine(
            config.engine, u, initial_state(window), n, threads=config.threads, method=config.method
        )
        probs = tuple(float(p) for p in dist.probs)
        diag = {k: float(v) for k, v in sorted(dist.diagnostics.items())}
        engine = config.engine
    elif config.model in ("classical-exact", "classical-enumerate"):
        dist = exact_distribution(n) if config.model == "classical-exact" else enumerate_paths(n)
        probs, exact, engine = dist.probs, True, dist.source
        diag = {"pre_clamp_sum": float(dist.total), "boundary_mass": 0.0}
    elif config.model == "classical-montecarlo":
        emp = monte_carlo(n, config.trials, config.seed)
        probs, engine = tuple(float(p) for p in emp.probs), "montecarlo"
        diag = {"pre_clamp_sum": math.fsum(probs), "boundary_mass": 0.0}
        meta = {**emp.metadata, "counts": list(emp.counts), "seed": emp.seed, "trials": emp.trials}
    else:
        grid = [arcsine_cdf(r / n) for r in range(n + 1)]
        probs = tuple([0.0] + [grid[r] - grid[r - 1] for r in range(1, n + 1)])
        diag = {"pre_clamp_sum": math.fsum(probs), "boundary_mass": 0.0}
        engine = "arcsine"
        cdf = tuple(grid)
    if config.model != "arcsine":
        cdf = _cumulative(probs)
    return ResultRecord(
        config=config.canonical(),
        config_hash=config.config_hash(),
        label=config.label,
        engine=engine,
        n=n,
        probs=probs,
        cdf=cdf,
        diagnostics=diag,
        exact=exact,
        metadata=meta,
        wall_time=time.perf_counter() - start,
    )


def _emit(record: ResultRecord, config: RunConfig) -> dict:
    out = Path(config.out)
    files = {}
    for fmt in config.formats:
        if fmt == "csv":
            path, data = out / f"{config.stem}.csv", csv_bytes(record)
        elif fmt == "json":
            path, data = out / f"{config.stem}.json", json_bytes(record)
        else:
            path = out / f"{config.stem}.svg"
            data = plot(record, "density").encode()
            cdf_path = out / f"{config.stem}.cdf.svg"
            _atomic_write(cdf_path, plot(record, "cdf").encode())
            files["svg-cdf"] = str(cdf_path)
        _atomic_write(path, data)
        files[fmt] = str(path)
    return files


def run(config: RunConfig) -> ResultRecord:
    """Compute (or load from cache) and write the requested outputs."""
    cache = Path(config.out) / "cache" / f"{config.config_hash()}.json"
    record = None
    if cache.exists():
        try:
            record = ResultRecord.from_dict(json.loads(cache.read_text()))
            record.cached = True
            log.info("cache hit %s", cache)
        except (OSError, json.JSONDecodeError, InvalidConfigError) as exc:
            log.warning("ignoring unreadable cache entry %s: %s", cache, exc)
            record = None
    if record is None:
        record = compute(config)
        _atomic_write(cache, json_bytes(record))
        log.info("%s: %.3f s", config.label, record.wall_time)
    record.files = _emit(record, config)
    return record


@dataclass
class SweepResult:
    records: list
    errors: list
    index_path: str

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def sweep(configs: Sequence[RunConfig], out: str | None = None, *, jobs: int = 1) -> SweepResult:
    """Run every config; failures are collected in the index, not raised."""
    configs = list(configs)
    if not configs:
        raise InvalidConfigError("sweep needs at least one configuration")
    out_dir = Path(out if out is not None else configs[0].out)
    configs = [replace(c, out=str(out_dir)) for c in configs]

    def one(c: RunConfig):
        try:
            return run(c), None
        except OccupationError as exc:
            return None, {"label": c.label, "steps": c.steps, "error": str(exc), "exit_code": exc.exit_code}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, configs))
    else:
        results = [one(c) for c in configs]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    entries = []
    for c, (rec, err) in zip(configs, results):
        entry = {"label": c.label, "steps": c.steps, "config_hash": c.config_hash()}
        if rec is not None:
            entry["status"] = "ok"
            entry["files"] = {k: Path(v).name for k, v in sorted(rec.files.items())}
        else:
            entry["status"] = "error"
            entry["error"] = err["error"]
        entries.append(entry)
    index = {"version": __version__, "runs": entries}
    if records:
        for kind in ("density", "cdf"):
            svg_path = out_dir / f"sweep-{kind}.svg"
            _atomic_write(svg_path, plot_many(records, kind).encode())
        index["plots"] = ["sweep-density.svg", "sweep-cdf.svg"]
    index_path = out_dir / "index.json"
    _atomic_write(index_path, (json.dumps(index, sort_keys=True, indent=1) + "\n").encode())
    return SweepResult(records, errors, str(index_path))


def dump_matrix(u: BandedUnitary, path: str | os.PathLike, fmt: str | None = None) -> None:
    """Write the nonzero entries of ``u`` (flat indices) as CSV or JSON."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    coo = u.to_sparse().tocoo()
    shift = 2 * u.window
    order = np.lexsort((coo.col, coo.row))
    rows = [
        (int(coo.row[i]) - shift, int(coo.col[i]) - shift, float(coo.data[i].real), float(coo.data[i].imag))
        for i in order
    ]
    if fmt == "csv":
        text = "row,col,re,im\n" + "".join(f"{r},{c},{_g17(a)},{_g17(b)}\n" for r, c, a, b in rows)
    elif fmt == "json":
        payload = {"window": u.window, "closure": u.closure, "entries": [list(t) for t in rows]}
        text = json.dumps(payload, indent=1) + "\n"
    else:
        raise InvalidConfigError(f"matrix dump format must be csv or json, got {fmt!r}")
    _atomic_write(path, text.encode())
