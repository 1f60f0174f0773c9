"""Command-line front end (``occwalk``).

Subcommands: ``occupation``, ``classical``, ``riesz-alphas``, ``sweep``
and ``plot``.  Values may come from a JSON or YAML file given with
``--config``; flags given on the command line override the file.

Exit codes: 0 success, 2 invalid configuration, 3 engine guard, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .cmv import ALIGNMENTS
from .engines import ENGINES
from .errors import InvalidConfigError, OccupationError, OutputError
from .models import MODEL_TAGS
from .reporting import (
    FORMATS,
    TRANSFORM_METHODS,
    DEFAULT_ARCSINE_POINTS,
    ResultRecord,
    RunConfig,
    dump_matrix,
    parse_complex,
    plot,
    run,
    sweep,
)

__all__ = ["main", "build_parser"]

log = logging.getLogger("occwalk")

CLASSICAL_MODES = {
    "exact": "classical-exact",
    "enumerate": "classical-enumerate",
    "montecarlo": "classical-montecarlo",
    "arcsine": "arcsine",
}


def _formats(text: str) -> list[str]:
    out = [f.strip() for f in text.split(",") if f.strip()]
    for f in out:
        if f not in FORMATS:
            raise argparse.ArgumentTypeError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
    return out


def _steps_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument(
        "--format", type=_formats, action="extend", dest="format",
        help="csv, json or svg; repeat or comma-separate (default: csv,json)",
    )
    p.add_argument("--config", type=Path, help="JSON or YAML file with the same keys as the flags")


def _add_quantum(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODEL_TAGS)
    p.add_argument("--alpha", help="rational coefficient of the constant model, e.g. 3/5")
    p.add_argument("--alpha-minus-one", help="free coefficient alpha_-1 of the Riesz walk (complex)")
    p.add_argument("--riesz-depth", type=int, help="number of Riesz product factors kept")
    p.add_argument("--alignment", choices=tuple(ALIGNMENTS), help="placement of CMV indices on the line")
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--method", choices=TRANSFORM_METHODS, help="transform engine variant (default: corner)")
    p.add_argument("--window", type=int, help="half-width of the site window (default: steps + 2)")
    p.add_argument("--threads", type=int, help="worker threads for the block transform")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="occwalk", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("occupation", help="occupation-time law of a monitored quantum walk")
    _add_quantum(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--dump-matrix", type=Path, help="also write the one-step matrix (.csv or .json)")
    _add_output(p)

    p = sub.add_parser("classical", help="classical coin-tossing laws")
    p.add_argument("mode", choices=tuple(CLASSICAL_MODES))
    p.add_argument("--steps", type=int, help="tosses (grid intervals for arcsine)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    _add_output(p)

    p = sub.add_parser("riesz-alphas", help="Verblunsky coefficients of the Riesz walk as JSON")
    p.add_argument("--count", type=int, default=32, help="coefficients alpha_0..alpha_{count-1} and fair partners")
    p.add_argument("--alpha-minus-one", default="0")
    p.add_argument("--riesz-depth", type=int, default=6)
    p.add_argument("--output", type=Path, help="file to write (default: stdout)")

    p = sub.add_parser("sweep", help="several runs with a combined index and overlay plots")
    _add_quantum(p)
    p.add_argument("--steps", type=_steps_list, help="comma-separated step counts")
    p.add_argument("--alphas", help="comma-separated rationals for the constant model")
    p.add_argument("--jobs", type=int, default=1, help="configs run in parallel")
    _add_output(p)

    p = sub.add_parser("plot", help="SVG from a JSON result record")
    p.add_argument("input", type=Path)
    p.add_argument("--kind", choices=("density", "cdf"), default="density")
    p.add_argument("--output", type=Path, help="SVG file (default: next to the input)")
    return parser


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise OutputError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InvalidConfigError(f"cannot parse config file {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidConfigError(f"config file {path} must hold a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


_RUN_KEYS = (
    "model", "alpha", "alpha_minus_one", "riesz_depth", "alignment", "engine", "method",
    "window", "threads", "steps", "seed", "trials", "out", "format",
)


def _flags(args: argparse.Namespace) -> dict:
    return {k: getattr(args, k) for k in _RUN_KEYS if getattr(args, k, None) is not None}


def _merged(args: argparse.Namespace, **fixed) -> dict:
    data = _load_config_file(getattr(args, "config", None))
    data.update(_flags(args))
    data.update(fixed)
    return data


def _report(record: ResultRecord) -> None:
    where = ", ".join(f"{k}={v}" for k, v in sorted(record.files.items()))
    status = "cached" if record.cached else f"{record.wall_time:.2f} s"
    print(f"{record.label} n={record.n} engine={record.engine} [{status}] {where}")


def _cmd_occupation(args) -> int:
    config = RunConfig.from_mapping(_merged(args))
    if not config.is_quantum:
        raise InvalidConfigError(f"occupation needs a quantum model, got {config.model!r}")
    record = run(config)
    if args.dump_matrix is not None:
        from .models import build_unitary

        dump_matrix(build_unitary(config.model_spec(), config.effective_window), args.dump_matrix)
    _report(record)
    return 0


def _cmd_classical(args) -> int:
    data = _merged(args, model=CLASSICAL_MODES[args.mode])
    if args.mode == "arcsine":
        data.setdefault("steps", DEFAULT_ARCSINE_POINTS)
    record = run(RunConfig.from_mapping(data))
    _report(record)
    return 0


def _cmd_riesz(args) -> int:
    from .riesz import riesz_walk_alphas

    if args.count < 1:
        raise InvalidConfigError(f"count must be >= 1, got {args.count}")
    seq = riesz_walk_alphas(args.count, parse_complex(args.alpha_minus_one), depth=args.riesz_depth)
    rows = []
    for j in range(-args.count - 1, args.count):
        a = complex(seq.alpha(j))
        rows.append({"index": j, "re": a.real, "im": a.imag, "rho": seq.rho(j)})
    text = json.dumps(rows, indent=1) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        try:
            args.output.write_text(text)
        except OSError as exc:
            raise OutputError(f"cannot write {args.output}: {exc}") from exc
    return 0


def _cmd_sweep(args) -> int:
    base = _load_config_file(args.config)
    runs = base.pop("runs", None)
    base.update(_flags(args))
    configs = []
    if runs is not None:
        if not isinstance(runs, list):
            raise InvalidConfigError("'runs' in a sweep file must be a list")
        for entry in runs:
            configs.append(RunConfig.from_mapping({**base, **entry}))
    else:
        steps = base.pop("steps", None)
        if steps is None:
            raise InvalidConfigError("sweep needs --steps or a 'runs' list")
        steps = steps if isinstance(steps, list) else [steps]
        alphas = args.alphas.split(",") if args.alphas else [base.pop("alpha", None)]
        for a in alphas:
            for n in steps:
                configs.append(RunConfig.from_mapping({**base, "alpha": a, "steps": n}))
    result = sweep(configs, jobs=args.jobs)
    for rec in result.records:
        _report(rec)
    for err in result.errors:
        print(f"error: {err['label']} n={err['steps']}: {err['error']}", file=sys.stderr)
    print(f"index: {result.index_path}")
    return max((e["exit_code"] for e in result.errors), default=0)


def _cmd_plot(args) -> int:
    try:
        data = json.loads(args.input.read_text())
    except OSError as exc:
        raise OutputError(f"cannot read {args.input}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"{args.input} is not JSON: {exc}") from None
    svg = plot(ResultRecord.from_dict(data), args.kind)
    target = args.output or args.input.with_suffix(f".{args.kind}.svg")
    try:
        target.write_text(svg)
    except OSError as exc:
        raise OutputError(f"cannot write {target}: {exc}") from exc
    print(target)
    return 0


COMMANDS = {
    "occupation": _cmd_occupation,
    "classical": _cmd_classical,
    "riesz-alphas": _cmd_riesz,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except OccupationError as exc:
        print(f"occwalk: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"occwalk: {exc}", file=sys.stderr)
        return OutputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
