"""Command-line interface: ``npdif analyze`` and ``npdif simulate``.

Both subcommands accept ``--config FILE`` holding a JSON object whose keys
mirror the long flag names (``group_col`` or ``group-col``); explicit flags
override config values.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import statistic as st
from .analysis import ANALYZE_METHODS, DEFAULT_ZETAS, AnalysisConfig, analyze, curve_data, empirical_points
from .data import load_response_csv
from .harness import ExperimentGrid, emit_report, run_grid
from .smoothing import KERNELS

RESULT_COLUMNS = ("item", "method", "zeta", "statistic", "sigma2", "z", "p_value", "dif")

_COMMON_KEYS = ("zeta", "kernel", "method", "alpha", "support_size", "bootstrap", "seed",
                "out", "jobs")
_ANALYZE_KEYS = ("input", "group_col", "reference_label") + _COMMON_KEYS
_SIMULATE_KEYS = ("grid", "replications") + _COMMON_KEYS


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with keys mirroring the flags")
    p.add_argument("--zeta", type=float, action="append", help="bandwidth exponent (repeatable)")
    p.add_argument("--kernel", choices=KERNELS)
    p.add_argument("--method", action="append", choices=st.METHODS, help="method (repeatable)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--support-size", type=int, help="reduced-support size; 0 disables reduction")
    p.add_argument("--bootstrap", type=int, help="bootstrap replicates B")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npdif", description="Nonparametric DIF detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="test every item of a response CSV for DIF")
    a.add_argument("--input", help="CSV with 0/1 item columns and a group column")
    a.add_argument("--group-col")
    a.add_argument("--reference-label", help="group label of the reference group")
    _common(a)

    s = sub.add_parser("simulate", help="run a Monte Carlo grid from a JSON config")
    s.add_argument("grid", nargs="?", help="JSON grid config (same as --config)")
    s.add_argument("--replications", type=int)
    _common(s)
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def _merge(args, config: dict, keys) -> dict:
    """Flags win over config values; unknown config keys are errors."""
    unknown = set(config) - set(keys)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(config)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    for k in ("zeta", "method"):
        if k in merged and not isinstance(merged[k], list):
            merged[k] = [merged[k]]
    return merged


def _support_size(v):
    return None if v == 0 else v


def _write_csv(path: Path, rows, columns):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in columns})


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if v != v else repr(round(v, 10))
    return v


def cmd_analyze(opts: dict) -> Path:
    if not opts.get("input"):
        raise UsageError("analyze needs --input")
    methods = opts.get("method", list(ANALYZE_METHODS))
    if not methods:
        raise UsageError("at least one --method is required")
    kw = {k: opts[k] for k in ("kernel", "alpha", "bootstrap", "seed") if k in opts}
    if "support_size" in opts:
        kw["support_size"] = _support_size(opts["support_size"])
    try:
        cfg = AnalysisConfig(zetas=list(opts.get("zeta", DEFAULT_ZETAS)), methods=list(methods), **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rm = load_response_csv(opts["input"], group_col=opts.get("group_col", "group"),
                           reference_label=opts.get("reference_label"))
    rows = analyze(rm, cfg, jobs=opts.get("jobs", 1))
    out = Path(opts.get("out", "npdif_out"))
    out.mkdir(parents=True, exist_ok=True)
    diag_keys = sorted({k for r in rows for k in r} - set(RESULT_COLUMNS))
    _write_csv(out / "results.csv", rows, RESULT_COLUMNS + tuple(diag_keys))
    doc = {"n_reference": rm.n0, "n_focal": rm.n1,
           "alpha": cfg.alpha, "seed": cfg.seed, "results": [_jsonable(r) for r in rows]}
    (out / "results.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    _write_csv(out / "curves.csv", curve_data(rm, cfg), ("item", "zeta", "group", "x", "m_hat"))
    _write_csv(out / "empirical.csv", empirical_points(rm),
               ("item", "group", "bin", "x", "proportion", "count"))
    return out


def _jsonable(row):
    out = {}
    for k, v in row.items():
        if isinstance(v, float) and v != v:
            v = None
        elif isinstance(v, float):
            v = round(v, 10)
        out[k] = v
    return out


def cmd_simulate(opts: dict) -> Path:
    path = opts.get("grid")
    renames = {"zeta": "zetas", "method": "methods"}
    doc = {renames.get(k, k): v for k, v in _load_config(path).items()}
    for k, v in opts.items():
        if k in ("grid", "out", "jobs"):
            continue
        doc[renames.get(k, k)] = v
    if "support_size" in doc:
        doc["support_size"] = _support_size(doc["support_size"])
    if "methods" in doc and not doc["methods"]:
        raise UsageError("at least one --method is required")
    try:
        grid = ExperimentGrid.from_dict(doc)
    except (TypeError, KeyError) as exc:
        raise UsageError(f"invalid grid config: {exc}") from exc
    metrics = run_grid(grid, jobs=opts.get("jobs", 1))
    out = Path(opts.get("out", "npdif_out"))
    emit_report(metrics, out, grid)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            opts = _merge(args, _load_config(args.config), _ANALYZE_KEYS)
            out = cmd_analyze(opts)
        else:
            if args.grid and args.config:
                raise UsageError("give the grid config either positionally or via --config")
            args.grid = args.grid or args.config
            opts = _merge(args, {}, _SIMULATE_KEYS)
            if not opts.get("grid"):
                raise UsageError("simulate needs a grid config")
            out = cmd_simulate(opts)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"npdif: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"npdif: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
