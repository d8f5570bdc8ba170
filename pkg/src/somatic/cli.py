"""Command-line entry point.

    somatic dict nearest E P A [--k K] [--lexicon PATH]
    somatic dict validate PATH
    somatic transform --prior-x a:0.2,b:0.8 --mu-y 2 --sigma-y 1.23 --gamma 0.3 --anchors a:1.3,b:-0.7
    somatic experiment NAME [--set k=v ...] [--format csv|json] [--out DIR]
                            [--lexicon PATH] [--collapse exact|moment] [--calibrate]

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .epa import EpaVector, nearest_label
from .experiments import EXPERIMENTS, SWEEP_ALIASES, ExperimentRecord
from .lexicon_io import LexiconFormatError, load_lexicon, sample_lexicon_path
from .sequential import ConformityConfig, calibrate_conformity
from .transform import (
    CategoricalBelief,
    GaussianBelief,
    NumericalError,
    SomaticPotential,
    entropy,
    posterior_x,
    posterior_y,
)

log = logging.getLogger("somatic")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

COLLAPSE_FLAGS = {"exact": "exact", "moment": "moment_match"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    experiment: str
    overrides: dict[str, Any] = field(default_factory=dict)
    fmt: str = "csv"
    out: Path = Path("results")
    lexicon: Path | None = None
    collapse: str | None = None
    seed: int | None = None  # reserved; every computation is deterministic
    calibrate: bool = False


# --- formatting ---------------------------------------------------------------

def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def _csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _columns(rows: Sequence[dict]) -> list[str]:
    cols: list[str] = []
    for row in rows:
        cols += [k for k in row if k not in cols]
    return cols


def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def _table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return _cell(v)

    cells = [[str(c) for c in columns]] + [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells) + "\n"


# --- dict -------------------------------------------------------------------

def cmd_dict_nearest(args) -> int:
    lex, report = load_lexicon(args.lexicon)
    for n, reason in report.rejects:
        log.warning("%s line %d rejected: %s", args.lexicon, n, reason)
    query = EpaVector(args.e, args.p, args.a)
    hits = nearest_label(lex, query, args.k, "squared_euclidean")
    rows = [{"rank": i + 1, "label": label, "squared_euclidean": d, "euclidean": math.sqrt(d)}
            for i, (label, d) in enumerate(hits)]
    cols = ["rank", "label", "squared_euclidean", "euclidean"]
    sys.stdout.write(_json_text(rows) if args.format == "json" else _csv_text(rows, cols))
    return EXIT_OK


def cmd_dict_validate(args) -> int:
    _, report = load_lexicon(args.path)
    sys.stdout.write(report.summary() + "\n")
    return EXIT_DATA if report.rejects else EXIT_OK


# --- transform ----------------------------------------------------------------

def _parse_pairs(text: str, flag: str) -> list[tuple[str, float]]:
    pairs = []
    for item in text.split(","):
        label, sep, value = item.rpartition(":")
        if not sep or not label:
            raise UsageError(f"{flag}: expected label:value, got {item!r}")
        try:
            pairs.append((label, float(value)))
        except ValueError:
            raise UsageError(f"{flag}: {value!r} is not a number") from None
    return pairs


def cmd_transform(args) -> int:
    prior_items = _parse_pairs(args.prior_x, "--prior-x")
    labels = [k for k, _ in prior_items]
    weights = [v for _, v in prior_items]
    if any(w < 0 for w in weights):
        raise ValueError("--prior-x probabilities must be nonnegative")
    total = math.fsum(weights)
    if abs(total - 1.0) > 1e-6:
        log.warning("--prior-x sums to %r; renormalizing", total)
    prior = CategoricalBelief.from_weights(labels, weights)
    pot = SomaticPotential(dict(_parse_pairs(args.anchors, "--anchors")), args.gamma)
    prior_y = GaussianBelief(args.mu_y, args.sigma_y)
    post = posterior_x(prior, prior_y, pot)
    mix = posterior_y(prior, prior_y, pot)

    x_rows = [{"label": x, "anchor": pot.anchor(x), "prior": p, "posterior": post[x]}
              for x, p in prior.items()]
    y_rows = [{"label": labels[i], "weight": w, "mean": m, "sd": s}
              for i, (w, m, s) in enumerate(mix.components)]
    summary = {"prior_entropy": entropy(prior), "post_entropy": entropy(post),
               "post_y_mean": mix.mean(), "post_y_sd": math.sqrt(mix.variance())}
    if args.format == "json":
        sys.stdout.write(_json_text({"posterior_x": x_rows, "posterior_y": y_rows, **summary}))
    else:
        sys.stdout.write(_csv_text(x_rows, ["label", "anchor", "prior", "posterior"]) + "\n")
        sys.stdout.write(_csv_text(y_rows, ["label", "weight", "mean", "sd"]) + "\n")
        sys.stdout.write(_csv_text([summary], list(summary)))
    return EXIT_OK


# --- experiment ---------------------------------------------------------------

def _parse_value(name: str, text: str, is_list: bool):
    if text.lower() == "none":
        return None
    if name == "collapse":
        if text not in COLLAPSE_FLAGS.values() and text not in COLLAPSE_FLAGS:
            raise UsageError(f"collapse must be one of {sorted(COLLAPSE_FLAGS)}")
        return COLLAPSE_FLAGS.get(text, text)
    try:
        if is_list:
            return tuple(float(t) for t in text.split(","))
        if name == "steps":
            return int(text)
        return float(text)
    except ValueError:
        raise UsageError(f"--set {name}: cannot parse {text!r}") from None


def _parse_sets(name: str, items: Sequence[str]) -> dict[str, Any]:
    spec = EXPERIMENTS[name]
    aliases = SWEEP_ALIASES.get(name, {})
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key = aliases.get(key, key)
        if key not in spec.defaults:
            known = sorted(set(spec.defaults) | set(aliases))
            raise UsageError(f"unknown parameter {key!r} for {name}; known: {known}")
        out[key] = _parse_value(key, value, key in spec.list_params)
    return out


def _lexicon_params(cfg: RunConfig) -> dict[str, float]:
    spec = EXPERIMENTS[cfg.experiment]
    if cfg.lexicon is None or not spec.lexicon_anchors:
        return {}
    lex, _ = load_lexicon(cfg.lexicon)
    params = {}
    for param, (label, dim) in spec.lexicon_anchors.items():
        if param in cfg.overrides:
            continue
        if label not in lex:
            raise ValueError(f"lexicon {cfg.lexicon} has no entry {label!r} needed for {param}")
        params[param] = getattr(lex[label].mean, dim)
    return params


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def write_records(records: Sequence[ExperimentRecord], out: Path, name: str, fmt: str) -> list[dict]:
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, rec in enumerate(records):
        row = rec.flat()
        if rec.grid is not None:
            grid_name = f"{name}_grid_{i:03d}.{fmt}"
            if fmt == "json":
                _write(out / grid_name, _json_text([list(p) for p in rec.grid]))
            else:
                _write(out / grid_name, _csv_text([{"y": y, "density": d} for y, d in rec.grid],
                                                  ["y", "density"]))
            row["grid_file"] = grid_name
        rows.append(row)
    body = _json_text(rows) if fmt == "json" else _csv_text(rows, _columns(rows))
    _write(out / f"{name}.{fmt}", body)
    return rows


def run_experiment(cfg: RunConfig) -> list[dict]:
    if cfg.experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {cfg.experiment!r}; valid: {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[cfg.experiment]
    params = {**spec.defaults, **_lexicon_params(cfg), **cfg.overrides}
    if cfg.collapse is not None and "collapse" in params:
        params["collapse"] = COLLAPSE_FLAGS[cfg.collapse]

    if cfg.calibrate:
        if cfg.experiment != "conformity":
            raise UsageError("--calibrate applies only to the conformity experiment")
        base_keys = ("prior_wrong", "mu_y", "sigma_y", "gamma", "p_other_given_wrong")
        result = calibrate_conformity(ConformityConfig(**{k: params[k] for k in base_keys}))
        cfg.out.mkdir(parents=True, exist_ok=True)
        rows = list(result.rows)
        body = _json_text(rows) if cfg.fmt == "json" else _csv_text(rows, _columns(rows))
        _write(cfg.out / f"calibration.{cfg.fmt}", body)
        log.info("calibrated anchor_gap=%r collapse=%s (squared error %.3g)",
                 result.best.anchor_gap, result.best.collapse, result.error)
        params["anchor_gap"] = result.best.anchor_gap
        params["collapse"] = result.best.collapse

    records = spec.run(**params)
    rows = write_records(records, cfg.out, cfg.experiment, cfg.fmt)
    shown = [{k: v for k, v in r.items() if k != "grid_file"} for r in rows]
    sys.stdout.write(_table(shown, _columns(shown)))
    return rows


def cmd_experiment(args) -> int:
    cfg = RunConfig(
        experiment=args.name,
        overrides=_parse_sets(args.name, args.set or []) if args.name in EXPERIMENTS else {},
        fmt=args.format,
        out=Path(args.out) if args.out else Path("results") / args.name,
        lexicon=Path(args.lexicon) if args.lexicon else None,
        collapse=args.collapse,
        seed=args.seed,
        calibrate=args.calibrate,
    )
    run_experiment(cfg)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="somatic", description="Somatic transform toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dict", help="lexicon queries")
    dsub = d.add_subparsers(dest="dict_command", required=True)
    near = dsub.add_parser("nearest", help="nearest labels to an EPA point")
    near.add_argument("e", type=float)
    near.add_argument("p", type=float)
    near.add_argument("a", type=float)
    near.add_argument("--k", type=int, default=1)
    near.add_argument("--lexicon", default=sample_lexicon_path())
    near.add_argument("--format", choices=("csv", "json"), default="csv")
    near.set_defaults(func=cmd_dict_nearest)
    val = dsub.add_parser("validate", help="check a lexicon file and report rejected lines")
    val.add_argument("path")
    val.set_defaults(func=cmd_dict_validate)

    t = sub.add_parser("transform", help="one somatic transform")
    t.add_argument("--prior-x", required=True, help="label:prob,label:prob,...")
    t.add_argument("--mu-y", type=float, required=True)
    t.add_argument("--sigma-y", type=float, required=True)
    t.add_argument("--gamma", type=float, required=True)
    t.add_argument("--anchors", required=True, help="label:value,label:value,...")
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.set_defaults(func=cmd_transform)

    e = sub.add_parser("experiment", help="reproduce a simulation")
    e.add_argument("name", help=f"one of {', '.join(EXPERIMENTS)}")
    e.add_argument("--set", action="append", metavar="K=V", help="override a parameter")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out", help="output directory (default results/NAME)")
    e.add_argument("--lexicon", help="take anchors from this lexicon file")
    e.add_argument("--collapse", choices=tuple(COLLAPSE_FLAGS))
    e.add_argument("--calibrate", action="store_true",
                   help="conformity only: re-fit the anchor gap and write calibration.<fmt>")
    e.add_argument("--seed", type=int, help="accepted for compatibility; unused")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"somatic: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, LexiconFormatError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"somatic: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
