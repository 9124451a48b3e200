"""Command-line entry point: ``ssle-security <command> [options]``.

Every command writes a table (CSV or JSON) whose metadata echoes the fully
resolved configuration. Options may come from ``--config FILE`` (a JSON object
keyed by option name, dashes or underscores) and are overridden by flags.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 Monte-Carlo deviation
above ``Z_LIMIT`` standard errors in ``simulate``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any

import numpy as np

from . import __version__
from .core import DomainError, GameKind, ParameterError, SolverError
from .grinding import (
    CONTINUOUS_TIME_PLE_THRESHOLD,
    grinding_series,
    grinding_table,
    threshold_report,
)
from .montecarlo import (
    SimConfig,
    estimate_brw_cdf,
    estimate_gap_pmf,
    estimate_win_probability,
)
from .persistence import persistence_parameter
from .private_game import (
    expected_gap_coefficient,
    fixed_length_win_probability,
    gap_pmf,
    win_probability,
)

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_DEVIATION = 4
Z_LIMIT = 5.0

_KIND_ORDER = {k.value: i for i, k in enumerate(GameKind)}
CURVE_COLUMNS = ["kind", "alpha", "n", "probability", "log10_probability"]

DEFAULTS: dict[str, dict[str, Any]] = {
    "curve": {"source": "private", "kinds": "ssle,ple", "alpha": "0.33", "n": "1:600"},
    "gap-coefficient": {"alpha": "0.01:0.49:0.01"},
    "threshold": {},
    "persistence": {
        "source": "private", "kinds": "ssle,ple", "alpha": "0.33", "epsilon": 1e-12, "method": "auto",
    },
    "simulate": {
        "kind": "ssle",
        "alpha": "0.33",
        "n": 10,
        "runs": 100_000,
        "target": "win",
        "saturation_cap": 1_000_000,
        "multiplier": 50.0,
        "threads": None,
    },
}
COMMON_DEFAULTS = {"format": "csv", "out": None, "seed": 0}


class UsageError(Exception):
    pass


# --- argument parsing -----------------------------------------------------------------


def parse_float_list(text: str) -> list[float]:
    """``"0.1,0.2"`` or ``"start:stop:step"`` (inclusive stop)."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"float range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"empty float range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    """``"1:600"``, ``"0:100:10"`` (inclusive) or ``"10,20,30"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start or start < 0:
                raise UsageError(f"invalid horizon range {text!r}")
            return list(range(start, stop + 1, step))
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse horizon range {text!r}") from None
    if not values or min(values) < 0:
        raise UsageError(f"invalid horizon list {text!r}")
    return values


def parse_kinds(text: str) -> list[GameKind]:
    try:
        kinds = {GameKind.parse(k) for k in str(text).split(",") if k.strip()}
    except ParameterError as e:
        raise UsageError(str(e)) from None
    if not kinds:
        raise UsageError("no game kinds given")
    return [k for k in GameKind if k in kinds]


def _check_alphas(alphas: list[float], upper: float = 1.0) -> list[float]:
    if not alphas:
        raise UsageError("no alpha values given")
    for a in alphas:
        if not (0.0 < a < upper) and not (upper == 0.5 and a == 0.5):
            raise UsageError(f"alpha={a} outside (0, {upper})")
    return sorted(set(alphas))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ssle-security",
        description="Private-attack and grinding security of SSLE vs PLE longest-chain PoS.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=["csv", "json"], default=None)
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--config", default=None, help="JSON file of option values")
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("curve", help="win-probability curves over a grid of alpha and n")
    sp.add_argument("--source", choices=["private", "fixed", "grinding"], default=None,
                    help="private: any-length win; fixed: Pr[G_n >= 0]; grinding: b_n")
    sp.add_argument("--kinds", default=None, help="comma list of ssle, ple, ind")
    sp.add_argument("--alpha", default=None, help="comma list or start:stop:step")
    sp.add_argument("--n", default=None, help="start:stop[:step] or comma list")
    common(sp)

    sp = sub.add_parser("gap-coefficient", help="per-round drift of the expected gap")
    sp.add_argument("--alpha", default=None)
    common(sp)

    sp = sub.add_parser("threshold", help="grinding security thresholds with solver diagnostics")
    common(sp)

    sp = sub.add_parser("persistence", help="epsilon-persistence parameters and SSLE reduction")
    sp.add_argument("--source", choices=["private", "grinding"], default=None)
    sp.add_argument("--kinds", default=None)
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--method", choices=["auto", "scan", "fit"], default=None,
                    help="exact scan, fitted extrapolation, or scan with fit fallback")
    common(sp)

    sp = sub.add_parser("simulate", help="Monte-Carlo estimate vs analytic value")
    sp.add_argument("--kind", default=None)
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--runs", type=int, default=None)
    sp.add_argument("--target", choices=["gap-pmf", "win", "brw-max"], default=None)
    sp.add_argument("--saturation-cap", dest="saturation_cap", type=int, default=None)
    sp.add_argument("--multiplier", type=float, default=None,
                    help="catch-up horizon as a multiple of n")
    sp.add_argument("--threads", type=int, default=None)
    common(sp)
    return p


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then config file, then explicit flags."""
    cfg: dict[str, Any] = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in data.items():
            k = key.replace("-", "_")
            if k not in cfg:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            cfg[k] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    cfg["command"] = args.command
    return cfg


# --- commands -------------------------------------------------------------------------


def _prob_row(kind: GameKind, alpha: float, n: int, log_p: float) -> dict:
    return {
        "kind": kind.value,
        "alpha": alpha,
        "n": n,
        "probability": math.exp(log_p),
        "log10_probability": log_p / math.log(10.0),
    }


def cmd_curve(cfg: dict) -> list[dict]:
    source = cfg["source"]
    kinds = parse_kinds(cfg["kinds"])
    alphas = _check_alphas(parse_float_list(cfg["alpha"]))
    ns = sorted(set(parse_int_range(cfg["n"])))
    rows = []
    for kind in kinds:
        for a in alphas:
            if source == "private":
                for n in ns:
                    rows.append(_prob_row(kind, a, n, win_probability(kind, a, n).value.log_value))
            elif source == "fixed" or kind is GameKind.IND:
                # the independent game has no grinding variant: its non-grinding
                # fixed-length series is plotted next to the grinding curves
                for n in ns:
                    rows.append(_prob_row(kind, a, n, fixed_length_win_probability(kind, a, n).log_value))
            else:
                series = grinding_series(kind, a, max(ns))
                rows.extend(_prob_row(kind, a, n, float(series[n])) for n in ns)
    return rows


def cmd_gap_coefficient(cfg: dict) -> list[dict]:
    alphas = _check_alphas(parse_float_list(cfg["alpha"]), upper=0.5)
    return [
        {
            "alpha": a,
            "coeff_ssle": expected_gap_coefficient(GameKind.SSLE, a),
            "coeff_ple": expected_gap_coefficient(GameKind.PLE, a),
        }
        for a in alphas
    ]


def cmd_threshold(cfg: dict) -> list[dict]:
    rows = []
    for kind in (GameKind.SSLE, GameKind.PLE):
        rep = threshold_report(kind)
        rows.append({
            "kind": kind.value,
            "threshold": rep.alpha,
            "iterations": rep.iterations,
            "speed_residual": rep.residual,
            "closed_form_threshold": rep.closed_alpha,
            "closed_form_residual": rep.closed_residual,
            "cross_check_delta": rep.cross_check_delta,
            "continuous_time_reference": CONTINUOUS_TIME_PLE_THRESHOLD if kind is GameKind.PLE else None,
        })
    return rows


def cmd_persistence(cfg: dict) -> list[dict]:
    kinds = parse_kinds(cfg["kinds"])
    alphas = _check_alphas(parse_float_list(cfg["alpha"]))
    eps = float(cfg["epsilon"])
    if not (0.0 < eps < 1.0):
        raise UsageError(f"epsilon must lie in (0, 1), got {eps}")
    rows = []
    for a in alphas:
        reports = {k: persistence_parameter(k, a, eps, cfg["source"], cfg["method"]) for k in kinds}
        s, p = reports.get(GameKind.SSLE), reports.get(GameKind.PLE)
        reduction = None
        if s is not None and p is not None and s.reachable and p.reachable:
            reduction = 100.0 * (1.0 - s.n0 / p.n0)
        for k, rep in reports.items():
            rows.append({
                "kind": k.value,
                "alpha": a,
                "epsilon": eps,
                "source": rep.source,
                "n0": rep.n0,
                "method": rep.method,
                "proxy": rep.proxy,
                "reduction_percent": reduction,
            })
    rows.sort(key=lambda r: (_KIND_ORDER[r["kind"]], r["alpha"]))
    return rows


def _z(estimate: float, analytic: float, runs: int) -> float:
    se = math.sqrt(max(analytic * (1.0 - analytic), 0.0) / runs)
    if se == 0.0:
        return 0.0 if estimate == analytic else math.inf
    return (estimate - analytic) / se


def cmd_simulate(cfg: dict) -> list[dict]:
    kind = GameKind.parse(cfg["kind"])
    alphas = parse_float_list(cfg["alpha"])
    if len(alphas) != 1:
        raise UsageError("simulate takes a single alpha")
    a = _check_alphas(alphas)[0]
    n = int(cfg["n"])
    if n < 0:
        raise UsageError("n must be >= 0")
    sim = SimConfig(
        seed=int(cfg["seed"]),
        runs=int(cfg["runs"]),
        saturation_cap=int(cfg["saturation_cap"]),
        catchup_horizon_multiplier=float(cfg["multiplier"]),
        threads=cfg["threads"],
    )
    target = cfg["target"]
    base = {"target": target, "kind": kind.value, "alpha": a, "n": n}
    if target == "win":
        est = estimate_win_probability(kind, a, n, sim)
        exact = win_probability(kind, a, n).prob
        return [{**base, "point": 0, "estimate": est.mean, "std_error": est.std_error,
                 "analytic": exact, "z": _z(est.mean, exact, sim.runs),
                 "truncation_residual": est.truncation_residual}]
    if target == "gap-pmf":
        support, freq, se = estimate_gap_pmf(kind, a, n, sim)
        exact = gap_pmf(kind, a, n).probs()
        return [{**base, "point": int(v), "estimate": float(f), "std_error": float(s),
                 "analytic": float(e), "z": _z(float(f), float(e), sim.runs),
                 "truncation_residual": 0.0}
                for v, f, s, e in zip(support, freq, se, exact)]
    js, p, se = estimate_brw_cdf(kind, a, n, sim)
    exact = grinding_table(kind, a, n).probs()[n]
    return [{**base, "point": int(j), "estimate": float(pj), "std_error": float(s),
             "analytic": float(e), "z": _z(float(pj), float(e), sim.runs),
             "truncation_residual": 0.0}
            for j, pj, s, e in zip(js, p, se, exact)]


COMMANDS = {
    "curve": cmd_curve,
    "gap-coefficient": cmd_gap_coefficient,
    "threshold": cmd_threshold,
    "persistence": cmd_persistence,
    "simulate": cmd_simulate,
}


# --- output ---------------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: list[dict], cfg: dict) -> str:
    metadata = {"tool": "ssle-security", "version": __version__, "config": cfg}
    if cfg["format"] == "json":
        doc = {"metadata": metadata, "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
        return json.dumps(doc, indent=2, default=str) + "\n"
    buf = io.StringIO()
    buf.write(f"# ssle-security {__version__}\n")
    buf.write(f"# config: {json.dumps(cfg, sort_keys=True, default=str)}\n")
    columns = list(rows[0].keys()) if rows else (CURVE_COLUMNS if cfg["command"] == "curve" else [])
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def run(argv: list[str] | None = None) -> tuple[int, str, dict]:
    """Execute a command; returns (exit status, rendered output, resolved config)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve_config(args)
    rows = COMMANDS[args.command](cfg)
    status = 0
    if args.command == "simulate" and any(abs(r["z"]) > Z_LIMIT for r in rows):
        status = EXIT_DEVIATION
    return status, render(rows, cfg), cfg


def main(argv: list[str] | None = None) -> int:
    try:
        status, text, cfg = run(argv)
    except SystemExit as e:  # argparse: --help, --version, bad flags
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"ssle-security: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"ssle-security: domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except ParameterError as e:
        print(f"ssle-security: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as e:
        print(f"ssle-security: solver failure: {e}", file=sys.stderr)
        return 1
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
