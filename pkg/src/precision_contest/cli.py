"""Command-line interface: ``precision-contest <verb> [options]``.

Verbs: ``solve``, ``sweep``, ``threshold``, ``cartel``, ``welfare``,
``contest``, ``verify``. Exit codes: 0 success, 1 usage or configuration
error, 2 existence-condition warning, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .contests import MonomialPrizes, PrizeSchedule, exogenous_prize_equilibrium, monomial_prize_equilibrium
from .distributions import InvalidParameterError, make_distribution
from .equilibrium import (
    BracketError,
    cartel_precision,
    critical_heterogeneity,
    critical_quality,
    foc_residuals,
    market_prize_fn,
    solve_aggregate_precision,
    solve_equilibrium,
)
from .market import MarketConfig
from .rankings import FAMILIES, make_technology
from .verify import run_suite, suite_record
from .welfare import welfare_report

EXIT_OK, EXIT_USAGE, EXIT_EXISTENCE, EXIT_VERIFY = 0, 1, 2, 3

SWEEP_SCHEMA_VERSION = 1
SWEEP_COLUMNS = (
    "index", "param", "value", "theta1", "theta2", "s", "rho1", "rho2", "r_star",
    "p1", "p2", "P1", "P2", "wC", "w0", "wTotal", "status",
)

# heterogeneity of each family's reference scenario
DEFAULT_S = {"ratio": 30.0, "difference": 4.0, "piecewise-constant": 10.0, "noise": 30.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    lo: float
    hi: float
    n: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class Scenario:
    cfg: MarketConfig
    theta: tuple[float, float]
    sweep: SweepSpec | None
    out: str
    seed: int
    r_max: float


def _pair(text: str, name: str) -> tuple[float, float]:
    parts = str(text).split(",")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{name}: expected two numbers 'a,b', got {text!r}") from None
    if len(vals) != 2 or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{name}: expected two numbers 'a,b', got {text!r}")
    return vals


def _numbers(text: str, name: str) -> tuple[float, ...]:
    if text in (None, ""):
        return ()
    try:
        return tuple(float(p) for p in str(text).split(","))
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _sweep(text) -> SweepSpec | None:
    if text is None:
        return None
    if isinstance(text, dict):
        param, lo, hi, n = text.get("param"), text.get("lo"), text.get("hi"), text.get("n", 50)
    else:
        parts = str(text).split(":")
        if len(parts) != 4:
            raise UsageError(f"sweep: expected 'param:lo:hi:n', got {text!r}")
        param, lo, hi, n = parts
    if param not in ("theta1", "s"):
        raise UsageError(f"sweep: parameter must be 'theta1' or 's', got {param!r}")
    try:
        lo, hi, n = float(lo), float(hi), int(n)
    except (TypeError, ValueError):
        raise UsageError(f"sweep: bad range {text!r}") from None
    if n < 1 or not hi > lo:
        raise UsageError(f"sweep: empty range {text!r}")
    return SweepSpec(param, lo, hi, n)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config: {path} is not valid JSON ({exc.msg}, line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise UsageError("config: top level must be an object")
    return data


def build_scenario(args: argparse.Namespace) -> Scenario:
    """Merge the config file with command-line flags (flags win)."""
    file_cfg = _load_config(args.config)
    dist_cfg = dict(file_cfg.get("dist", {}))

    def pick(flag, key, default=None):
        value = getattr(args, flag, None)
        return value if value is not None else file_cfg.get(key, default)

    family = pick("family", "family", "ratio")
    steepness = pick("steepness", "steepness")
    try:
        tech = make_technology(family, steepness)
        theta_bar = float(pick("theta_bar", "theta_bar", dist_cfg.get("theta_bar", 1.0)))
        kind = pick("dist", "dist_kind", dist_cfg.get("kind", "uniform"))
        params = (_numbers(args.dist_params, "dist-params") if args.dist_params is not None
                  else tuple(dist_cfg.get("params", ())))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dist = make_distribution(kind, params, theta_bar)
        s = float(pick("s", "s", DEFAULT_S[tech.family]))
        cfg = MarketConfig(s, float(pick("cost_delta", "cost_delta", 1.0)), dist, tech,
                           pick("demand_model", "demand_model", "exact"))
    except (InvalidParameterError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    theta_raw = pick("theta", "theta", "0.75,0.25")
    theta = _pair(",".join(map(str, theta_raw)) if isinstance(theta_raw, (list, tuple)) else theta_raw, "theta")
    if not all(0.0 <= t <= theta_bar for t in theta):
        raise UsageError(f"theta: qualities must lie in [0, {theta_bar}], got {theta}")
    sweep = _sweep(pick("sweep", "sweep"))
    out = pick("out", "out", "json")
    if out not in ("json", "csv", "table"):
        raise UsageError(f"out: expected json, csv or table, got {out!r}")
    return Scenario(cfg, theta, sweep, out, int(pick("seed", "seed", 0)), float(pick("r_max", "r_max", 50.0)))


# -- formatting ---------------------------------------------------------------

def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _flatten(rec: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def emit(record: dict, out: str, stream=None) -> None:
    stream = stream or sys.stdout
    record = _clean(record)
    if out == "json":
        stream.write(json.dumps(record, indent=2, sort_keys=True) + "\n")
        return
    flat = _flatten(record)
    if out == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow(_fmt(v) for v in flat.values())
        return
    width = max(map(len, flat)) if flat else 0
    for k, v in flat.items():
        stream.write(f"{k.ljust(width)}  {_fmt(v)}\n")


# -- verbs ----------------------------------------------------------------------

def _scenario_record(sc: Scenario) -> dict:
    cfg = sc.cfg
    return {"family": cfg.tech.family, "steepness": cfg.tech.steepness, "dist": cfg.dist.to_config(),
            "s": cfg.s, "cost_delta": cfg.cost_delta, "demand_model": cfg.demand_model,
            "theta": list(sc.theta)}


def cmd_solve(sc: Scenario) -> int:
    eq = solve_equilibrium(sc.cfg, sc.theta, r_max=sc.r_max)
    rec = {"scenario": _scenario_record(sc), "equilibrium": eq.to_record(),
           "welfare": welfare_report(sc.cfg, sc.theta, eq).to_record(), "certified": eq.certified}
    emit(rec, sc.out)
    return EXIT_OK if eq.certified else EXIT_EXISTENCE


def _sweep_cell(job) -> dict:
    index, sc, value = job
    theta = (value, sc.theta[1]) if sc.sweep.param == "theta1" else sc.theta
    cfg = sc.cfg.with_s(value) if sc.sweep.param == "s" else sc.cfg
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(index=index, param=sc.sweep.param, value=float(value), theta1=theta[0], theta2=theta[1], s=cfg.s)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eq = solve_equilibrium(cfg, theta, r_max=sc.r_max, check_existence=theta[0] > theta[1])
            wr = welfare_report(cfg, theta, eq)
        b = eq.prize_bundle
        row.update(rho1=eq.rho1, rho2=eq.rho2, r_star=eq.r_star, p1=b.p1, p2=b.p2, P1=b.P1, P2=b.P2,
                   wC=wr.wC, w0=wr.w0, wTotal=wr.wTotal, status="ok")
    except Exception as exc:  # recorded per row, the sweep continues
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def _sweep_threshold(sc: Scenario, rows: list[dict]) -> dict | None:
    ok = [r for r in rows if r["status"] == "ok"]
    for a, b in zip(ok, ok[1:]):
        if a["rho2"] == 0 or np.sign(a["rho2"]) != np.sign(b["rho2"]):
            try:
                if sc.sweep.param == "s":
                    res = critical_heterogeneity(sc.cfg, sc.theta, s_range=(a["value"], b["value"]), r_max=sc.r_max)
                else:
                    res = critical_quality(sc.cfg, sc.theta[1], lo_gap=max(a["value"] - sc.theta[1], 1e-9),
                                           r_max=sc.r_max)
            except BracketError:
                continue
            return {"kind": res.kind, "value": res.value, "residual": res.residual}
    return None


def run_sweep(sc: Scenario, jobs: int = 1) -> tuple[list[dict], dict | None]:
    work = [(i, sc, float(v)) for i, v in enumerate(sc.sweep.values())]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        rows = [_sweep_cell(w) for w in work]
    return rows, _sweep_threshold(sc, rows)


def cmd_sweep(sc: Scenario, jobs: int = 1) -> int:
    if sc.sweep is None:
        raise UsageError("sweep: pass --sweep param:lo:hi:n (or a 'sweep' entry in the config)")
    rows, threshold = run_sweep(sc, jobs)
    if sc.out == "json":
        emit({"schema_version": SWEEP_SCHEMA_VERSION, "scenario": _scenario_record(sc),
              "rows": rows, "threshold": threshold}, "json")
        return EXIT_OK
    out = sys.stdout
    if sc.out == "csv":
        out.write(f"# precision-contest sweep schema {SWEEP_SCHEMA_VERSION}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(_fmt(_clean(row[c])) for c in SWEEP_COLUMNS)
        if threshold:
            out.write(f"# threshold,{threshold['kind']},{threshold['value']!r}\n")
        return EXIT_OK
    buf = io.StringIO()
    for row in rows:
        buf.write("  ".join(f"{_fmt(_clean(row[c])):>22}" if c not in ("status", "param") else str(row[c])
                            for c in SWEEP_COLUMNS) + "\n")
    out.write("  ".join(SWEEP_COLUMNS) + "\n" + buf.getvalue())
    if threshold:
        out.write(f"threshold {threshold['kind']} = {threshold['value']!r}\n")
    return EXIT_OK


def cmd_threshold(sc: Scenario, kind: str, s_range: tuple[float, float]) -> int:
    if kind == "s":
        res = critical_heterogeneity(sc.cfg, sc.theta, s_range=s_range, r_max=sc.r_max)
    else:
        res = critical_quality(sc.cfg, sc.theta[1], r_max=sc.r_max)
    emit({"scenario": _scenario_record(sc), "threshold": {
        "kind": res.kind, "value": res.value, "bracket": list(res.bracket),
        "residual": res.residual, "spread": res.spread}}, sc.out)
    return EXIT_OK


def cmd_cartel(sc: Scenario) -> int:
    cfg = sc.cfg
    pf = market_prize_fn(cfg)
    r_star = solve_aggregate_precision(cfg, r_max=sc.r_max)
    r_cartel = cartel_precision(cfg, r_max=sc.r_max)
    b_star, b_cartel = pf(r_star), pf(r_cartel)
    emit({"scenario": _scenario_record(sc), "r_star": r_star, "r_cartel": r_cartel,
          "residual_competitive": b_star.dP1 + b_star.dP2 - cfg.marginal_cost(r_star),
          "residual_cartel": b_cartel.dP1 + b_cartel.dP2 - cfg.marginal_cost(r_cartel / 2.0),
          "competitive_exceeds_cartel": r_star > r_cartel}, sc.out)
    return EXIT_OK


def cmd_welfare(sc: Scenario) -> int:
    eq = solve_equilibrium(sc.cfg, sc.theta, r_max=sc.r_max)
    emit({"scenario": _scenario_record(sc), "r_star": eq.r_star,
          "welfare": welfare_report(sc.cfg, sc.theta, eq).to_record()}, sc.out)
    return EXIT_OK


def cmd_contest(sc: Scenario, args: argparse.Namespace) -> int:
    tech = sc.cfg.tech
    try:
        if args.schedule == "exogenous":
            P1, P2 = _pair(args.prizes or "1,0", "prizes")
            sched = PrizeSchedule("exogenous", P1=P1, P2=P2)
            rho1, rho2 = exogenous_prize_equilibrium(tech, sc.theta, sched, sc.cfg.cost_delta)
            rec = {"schedule": "exogenous", "P1": P1, "P2": P2, "rho1": rho1, "rho2": rho2,
                   "r_star": abs(rho1 + rho2)}
        else:
            sched = PrizeSchedule("monomial", alpha=args.alpha, beta=args.beta, gamma=args.gamma)
            r, rho1, rho2 = monomial_prize_equilibrium(tech, sc.theta, sched, sc.cfg.cost_delta)
            pf = MonomialPrizes.function(sched)
            numeric = solve_equilibrium(sc.cfg, sc.theta, prize_fn=pf, check_existence=False,
                                        r_max=max(sc.r_max, 2 * r))
            rec = {"schedule": "monomial", "alpha": sched.alpha, "beta": sched.beta, "gamma": sched.gamma,
                   "r_star": r, "rho1": rho1, "rho2": rho2, "numeric_r_star": numeric.r_star,
                   "numeric_rho1": numeric.rho1, "numeric_rho2": numeric.rho2,
                   "foc_residuals": list(foc_residuals(sc.cfg, sc.theta, rho1, rho2, prize_fn=pf))}
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rec["theta"] = list(sc.theta)
    rec["family"] = tech.family
    emit(rec, sc.out)
    return EXIT_OK


def cmd_verify(sc: Scenario, inject_fault: bool = False) -> int:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        checks = run_suite(sc.cfg, sc.theta, seed=sc.seed, inject_fault=inject_fault)
    rec = suite_record(checks)
    rec["scenario"] = _scenario_record(sc)
    if sc.out == "json":
        emit(rec, "json")
    else:
        for c in checks:
            verdict = "pass" if c.passed else ("expected-fail" if c.expected else "FAIL")
            sys.stdout.write(f"{verdict:<14}{c.name:<28}{c.detail}\n")
    return EXIT_VERIFY if rec["hard_failures"] else EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("scenario")
    g.add_argument("--family", help=f"ranking family: {', '.join(FAMILIES)}")
    g.add_argument("--theta", help="quality pair 'theta1,theta2' (default 0.75,0.25)")
    g.add_argument("--theta-bar", type=float, help="upper bound of the quality support (default 1)")
    g.add_argument("--dist", help="quality distribution: uniform, beta, triangular, truncated-normal")
    g.add_argument("--dist-params", help="distribution parameters, comma separated")
    g.add_argument("--s", type=float, help="consumer heterogeneity (default per family: "
                   + ", ".join(f"{k} {v:g}" for k, v in DEFAULT_S.items()) + ")")
    g.add_argument("--cost-delta", type=float, help="cost curvature delta (default 1)")
    g.add_argument("--steepness", type=float, help="piecewise-constant steepness (default 10)")
    g.add_argument("--demand-model", choices=("exact", "unclamped"),
                   help="difference ranking only: clip probabilities in demand (exact) or not")
    g.add_argument("--r-max", type=float, help="upper end of the precision search (default 50)")
    g.add_argument("--out", choices=("json", "csv", "table"), help="output format (default json)")
    g.add_argument("--seed", type=int, help="seed for sampled checks (default 0)")
    g.add_argument("--config", help="JSON scenario file; flags override its entries")

    parser = _Parser(prog="precision-contest", description="Labelling precision contest solver.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve one scenario")
    sw = sub.add_parser("sweep", parents=[common], help="sweep theta1 or s")
    sw.add_argument("--sweep", help="'theta1:lo:hi:n' or 's:lo:hi:n'")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    th = sub.add_parser("threshold", parents=[common], help="critical heterogeneity or quality")
    th.add_argument("--kind", choices=("s", "theta1"), default="s")
    th.add_argument("--s-range", default="0.5,200", help="search range for s (default 0.5,200)")
    sub.add_parser("cartel", parents=[common], help="competitive vs cartel precision")
    sub.add_parser("welfare", parents=[common], help="welfare report")
    co = sub.add_parser("contest", parents=[common], help="stand-alone contest with fixed prize schedule")
    co.add_argument("--schedule", choices=("exogenous", "monomial"), default="monomial")
    co.add_argument("--prizes", help="exogenous prizes 'P1,P2'")
    co.add_argument("--alpha", type=float, default=1.0)
    co.add_argument("--beta", type=float, default=1.5)
    co.add_argument("--gamma", type=float, default=2.0)
    ve = sub.add_parser("verify", parents=[common], help="run the property suite")
    ve.add_argument("--inject-fault", action="store_true", help="test mode: corrupt analytic derivatives")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb != "sweep":
        args.sweep = None
    try:
        sc = build_scenario(args)
        if args.verb == "solve":
            return cmd_solve(sc)
        if args.verb == "sweep":
            jobs = args.jobs if args.jobs > 0 else (os.cpu_count() or 1)
            return cmd_sweep(sc, jobs)
        if args.verb == "threshold":
            return cmd_threshold(sc, args.kind, _pair(args.s_range, "s-range"))
        if args.verb == "cartel":
            return cmd_cartel(sc)
        if args.verb == "welfare":
            return cmd_welfare(sc)
        if args.verb == "contest":
            return cmd_contest(sc, args)
        return cmd_verify(sc, args.inject_fault)
    except UsageError as exc:
        sys.stderr.write(f"precision-contest: error: {exc}\n")
        return EXIT_USAGE
    except BracketError as exc:
        sys.stderr.write(f"precision-contest: no solution: {exc}\n")
        return EXIT_EXISTENCE


if __name__ == "__main__":
    sys.exit(main())
