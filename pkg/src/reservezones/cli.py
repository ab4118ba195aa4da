"""Command-line front end.

Commands: ``scen``, ``solve``, ``stability``, ``export`` and ``case validate``.
Settings come from a YAML/JSON file (``--config`` or ``$RESERVEZONES_CONFIG``);
command-line flags override file values.

Exit codes: 0 success, 1 configuration or build error, 2 infeasible,
3 solver limit or failure, 4 certification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .benders import run_benders
from .config import (CONFIG_ENV, MODELS, ConfigError, ModelSpec, RunConfig, load_config,
                     parse_model_list)
from .markets import MarketResult, run_sequential, solve_stochastic
from .milp import InfeasibleError, SolverFailure, SolverLimitError, export_mps
from .netcore import CaseError, build_matrices, load_case, verify_network
from .partition import PartitionError, partition_dot, partition_edge_list
from .scengen import (ForecastError, ProbabilisticForecast, ScenarioSet, fast_forward_reduce,
                      read_scenarios, sample_scenarios, write_scenarios)
from .zonal import (STOCHASTIC, CertificationError, assemble_mpec, run_stability, solve_extensive,
                    zone_report)

log = logging.getLogger("reservezones")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_CERT = 0, 1, 2, 3, 4


# ---------------------------------------------------------------------------
# output helpers

def write_atomic(path: Path, text: str) -> Path:
    """Write via a temporary sibling and ``os.replace`` so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x) -> str:
    return f"{float(x) + 0.0:.10g}"  # + 0.0 folds -0 into 0


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not np.isfinite(v) else float(_num(v))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def report_text(body: dict) -> str:
    """JSON report whose first line carries the only non-deterministic field."""
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    text = json.dumps(_jsonable(body), indent=2, sort_keys=True)
    return '{"generated": "%s",\n' % stamp + text[2:] + "\n"


# ---------------------------------------------------------------------------
# configuration

def _add_common(p: argparse.ArgumentParser, scenario_flags: bool = True) -> None:
    p.add_argument("--config", help=f"YAML/JSON run configuration (default: ${CONFIG_ENV})")
    p.add_argument("--case", help="bundled case name or path to a case JSON file")
    p.add_argument("--out", dest="output", help="output directory (file for scen/export)")
    if scenario_flags:
        p.add_argument("--scenarios", dest="scen_file", help="read scenarios from a CSV file")
        p.add_argument("--count", type=int, help="number of sampled scenarios")
        p.add_argument("--seed", type=int, help="sampling seed")
        p.add_argument("--reduce-to", type=int, help="fast-forward reduction target")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--q", type=float, help="quantile for sequential requirements")
    p.add_argument("--zones", type=int)
    p.add_argument("--chi", type=float, help="fraction of line capacity available for set-asides")
    p.add_argument("--y-min", type=int, help="minimum number of buses per zone")
    p.add_argument("--backend", choices=("highs", "native"))
    p.add_argument("--gap", type=float, help="relative MILP gap")
    p.add_argument("--time-limit", type=float)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--big-m-dual", type=float)
    p.add_argument("--eps", type=float, help="absolute Benders tolerance")
    p.add_argument("--max-iter", type=int)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    for key in ("case", "output", "model", "q", "zones", "chi", "y_min", "eps", "max_iter"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    sc = cfg.scenarios
    sampling = {k: getattr(args, k, None) for k in ("count", "seed", "reduce_to")}
    for key, val in sampling.items():
        if val is not None:
            setattr(sc, key, val)
    if getattr(args, "scen_file", None):
        sc.file = args.scen_file
    elif any(v is not None for v in sampling.values()):
        sc.file = None  # sampling flags override a file named in the config
    solver = dict(cfg.solver)
    for key in ("backend", "gap", "time_limit", "node_limit", "big_m_dual"):
        val = getattr(args, key, None)
        if val is not None:
            solver[key] = val
    cfg.solver = solver
    if getattr(args, "mps", False):
        cfg.mps = True
    if getattr(args, "models", None):
        cfg.stability_models = parse_model_list(args.models)
    if getattr(args, "sets", None) is not None:
        cfg.stability_sets = args.sets
    return cfg.validate()


def load_network(cfg: RunConfig):
    net = load_case(cfg.case)
    report = verify_network(net)
    if not report.ok:
        raise CaseError("; ".join(report.violations))
    for msg in report.warnings:
        log.warning("%s", msg)
    return net, build_matrices(net)


def make_scenarios(net, cfg: RunConfig, seed: int | None = None) -> ScenarioSet:
    sc = cfg.scenarios
    if sc.file is not None and seed is None:
        scen = read_scenarios(sc.file)
        if tuple(scen.farm_ids) != tuple(w.id for w in net.wind_farms):
            raise ConfigError(f"scenario file farms {scen.farm_ids} do not match the case")
        scen.check_capacity(net.wind_capacity)
        return scen
    forecast = ProbabilisticForecast.from_network(net, tau=sc.tau)
    scen = sample_scenarios(forecast, sc.count, sc.seed if seed is None else seed)
    if sc.reduce_to is not None and sc.reduce_to < sc.count:
        scen = fast_forward_reduce(scen, sc.reduce_to)
    return scen


def _scenario_summary(scen: ScenarioSet) -> str:
    from scipy.stats import spearmanr

    lines = [f"scenarios: {scen.n_scen}  farms: {scen.n_farms}  sum(pi) = {scen.prob.sum():.12g}"]
    for j, fid in enumerate(scen.farm_ids):
        order = np.argsort(scen.W[j], kind="stable")
        cdf = np.cumsum(scen.prob[order])
        qs = [scen.W[j, order[min(np.searchsorted(cdf, a - 1e-12), scen.n_scen - 1)]]
              for a in (0.05, 0.5, 0.95)]
        lines.append(f"  farm {fid}: mean {scen.prob @ scen.W[j]:.4f}  "
                     f"q05 {qs[0]:.4f}  q50 {qs[1]:.4f}  q95 {qs[2]:.4f}")
    if scen.n_farms > 1 and scen.n_scen > 2:
        rho = spearmanr(scen.W.T).statistic
        pairs = np.atleast_1d(rho if scen.n_farms == 2 else rho[np.triu_indices(scen.n_farms, 1)])
        lines.append(f"  rank correlation (unweighted): mean {np.nanmean(pairs):.4f} "
                     f"min {np.nanmin(pairs):.4f} max {np.nanmax(pairs):.4f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands

def cmd_scen(args) -> int:
    cfg = resolve_config(args)
    if cfg.scenarios.file is not None:
        raise ConfigError("scen generates scenarios; drop scenarios.file / --scenarios")
    net, _ = load_network(cfg)
    scen = make_scenarios(net, cfg)
    out = Path(cfg.output)
    if out.suffix.lower() != ".csv":
        out = out / "scenarios.csv"
    write_atomic(out, write_scenarios(scen))
    print(_scenario_summary(scen))
    print(f"wrote {out}")
    return EXIT_OK


def _solve(net, mats, scen, cfg: RunConfig, label_model: str | None = None):
    """Run one model; returns ``(MarketResult, ZonalOutcome | None, trace | None)``."""
    params = cfg.solver_params()
    model = label_model or cfg.model
    if model == "sequential":
        return run_sequential(net, mats, scen, cfg.q, params, jobs=cfg.jobs), None, None
    if model == "stochastic":
        return solve_stochastic(net, mats, scen, params), None, None
    if model == "zonal-extensive":
        zm = assemble_mpec(net, mats, scen, cfg.zones, cfg.chi, cfg.y_min, params)
        out = solve_extensive(zm, params)
        return out.as_market_result(model), out, None
    out, trace = run_benders(net, mats, scen, cfg.zones, cfg.chi, cfg.y_min, eps=cfg.eps,
                             rel_eps=cfg.rel_eps, max_iter=cfg.max_iter, params=params,
                             jobs=cfg.jobs)
    return out.as_market_result(model), out, trace


def _costs_csv(res: MarketResult) -> str:
    c = res.costs
    return csv_text(["reserve", "day_ahead", "balancing", "total"],
                    [[c.reserve, c.day_ahead, c.expected_balancing, c.total]])


def _zones_csv(rows: list[dict]) -> str:
    return csv_text(["zone", "buses", "lambda_up", "lambda_dn", "up", "down", "total", "avg_cost"],
                    [[r["zone"], " ".join(map(str, r["buses"])), r["lambda_up"], r["lambda_dn"],
                      r["up_mw"], r["down_mw"], r["total_mw"], r["avg_cost"]] for r in rows])


def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    net, mats = load_network(cfg)
    scen = make_scenarios(net, cfg)
    out = Path(cfg.output)
    t0 = time.monotonic()
    if cfg.mps and cfg.model.startswith("zonal"):
        zm = assemble_mpec(net, mats, scen, cfg.zones, cfg.chi, cfg.y_min, cfg.solver_params())
        write_atomic(out / "model.mps", export_mps(zm.model)[0])
    res, zo, trace = _solve(net, mats, scen, cfg)
    seconds = time.monotonic() - t0

    body = {"case": net.name or str(cfg.case), "model": cfg.model, "status": "optimal",
            "config": cfg.to_dict(), "scenarios": scen.n_scen,
            "costs": res.costs.as_dict(), "reserves": {"up": res.reserves.r_up,
                                                       "down": res.reserves.r_dn},
            "day_ahead": {"p": res.day_ahead.p, "w": res.day_ahead.w,
                          "price": res.day_ahead.price}}
    if res.requirements is not None:
        body["requirements"] = {"up": res.requirements[0], "down": res.requirements[1]}
    write_atomic(out / "costs.csv", _costs_csv(res))
    if zo is not None:
        rows = zone_report(net, zo)
        write_atomic(out / "zones.csv", _zones_csv(rows))
        write_atomic(out / "partition.csv", partition_edge_list(net, zo.partition))
        write_atomic(out / "partition.dot", partition_dot(net, zo.partition))
        body.update({"partition": zo.partition.to_dict(), "gamma": zo.gamma,
                     "requirements": {"up": zo.lam_up, "down": zo.lam_dn},
                     "objective": zo.objective, "gap": zo.gap,
                     "certification": zo.certification, "statistics": zo.statistics,
                     "zones": rows})
        if zo.audit is not None:
            body["audit"] = {"flagged": list(zo.audit.flagged)}
    if trace is not None:
        write_atomic(out / "trace.csv", trace.to_csv())
        body["benders"] = {"iterations": len(trace.rows), "converged": trace.converged}
        if not trace.converged:
            body["status"] = "iteration_limit"
    write_atomic(out / "report.json", report_text(body))
    c = res.costs
    print(f"{cfg.model} on {net.name or cfg.case}: reserve {c.reserve:.4f}  day-ahead {c.day_ahead:.4f}  "
          f"balancing {c.expected_balancing:.4f}  total {c.total:.4f}  ({seconds:.1f} s)")
    if zo is not None:
        print(f"zones: {[zo.partition.members(z + 1) for z in range(zo.partition.n_zones)]}")
    print(f"wrote {out}")
    if trace is not None and not trace.converged:
        log.error("Benders stopped after %d iterations without meeting the tolerance",
                  len(trace.rows))
        return EXIT_LIMIT
    return EXIT_OK


def _stability_candidates(net, mats, scen, cfg: RunConfig, specs: list[ModelSpec]) -> dict:
    cands = {}
    for spec in specs:
        if spec.model == "stochastic":
            cands[spec.label] = STOCHASTIC
            continue
        sub = RunConfig(**{**cfg.__dict__, "model": spec.model, "q": spec.q,
                           "zones": spec.zones, "chi": spec.chi})
        res, zo, _ = _solve(net, mats, scen, sub)
        cands[spec.label] = (res.reserves, None if zo is None else zo.gamma)
    return cands


def cmd_stability(args) -> int:
    cfg = resolve_config(args)
    specs = cfg.stability_models or [ModelSpec("stochastic"), ModelSpec("sequential", q=cfg.q),
                                     ModelSpec("zonal-extensive", zones=cfg.zones, chi=cfg.chi)]
    if cfg.scenarios.file is not None:
        raise ConfigError("stability samples its own scenario sets; drop scenarios.file")
    if cfg.stability_sets < 2:
        raise ConfigError("stability needs at least 2 scenario sets")
    net, mats = load_network(cfg)
    seeds = [cfg.scenarios.seed + i for i in range(cfg.stability_sets)]
    sets = [make_scenarios(net, cfg, seed=s) for s in seeds]
    cands = _stability_candidates(net, mats, sets[0], cfg, specs)
    rows = run_stability(net, mats, cands, sets, cfg.solver_params(), jobs=cfg.jobs)

    table = [[r.model, r.scenario_set, seeds[r.scenario_set - 1], int(r.scenario_set == 1),
              r.cost, r.stochastic_cost, r.ratio] for r in rows]
    out = Path(cfg.output)
    write_atomic(out / "stability.csv", csv_text(
        ["model", "set", "seed", "in_sample", "cost", "stochastic_cost", "ratio"], table))
    summary = []
    for label in cands:
        ratios = np.array([r.ratio for r in rows if r.model == label and r.scenario_set > 1])
        summary.append([label, len(ratios), ratios.mean(), ratios.min(), ratios.max()])
    write_atomic(out / "stability_summary.csv",
                 csv_text(["model", "sets", "mean", "min", "max"], summary))
    for label, n, mean, lo, hi in summary:
        print(f"{label:40s} mean {mean:.6f}  min {lo:.6f}  max {hi:.6f}  ({n} out-of-sample sets)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_export(args) -> int:
    cfg = resolve_config(args)
    net, mats = load_network(cfg)
    scen = make_scenarios(net, cfg)
    zm = assemble_mpec(net, mats, scen, cfg.zones, cfg.chi, cfg.y_min, cfg.solver_params())
    text, _ = export_mps(zm.model)
    out = Path(cfg.output)
    if out.suffix.lower() != ".mps":
        out = out / "model.mps"
    write_atomic(out, text)
    for k, v in zm.statistics().items():
        print(f"{k:18s} {v}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_case_validate(args) -> int:
    net = load_case(args.path)
    rep = verify_network(net)
    print(f"{net.name}: {net.n_bus} buses, {net.n_line} lines, {net.n_gen} generators, "
          f"{net.n_wind} wind farms, connected={rep.connected}")
    for msg in rep.warnings:
        print(f"warning: {msg}")
    for msg in rep.violations:
        print(f"violation: {msg}")
    return EXIT_OK if rep.ok else EXIT_CONFIG


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reservezones", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--jobs", type=int, help="parallel workers for independent solves")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scen", help="sample (and reduce) wind scenarios")
    _add_common(p)
    p.set_defaults(func=cmd_scen)

    p = sub.add_parser("solve", help="solve one market model and write reports")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--mps", action="store_true", help="also dump the zonal MILP as MPS")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("stability", help="out-of-sample cost ratios against the stochastic model")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--models", help='e.g. "stochastic;sequential:q=0.03;zonal-extensive:zones=2"')
    p.add_argument("--sets", type=int, help="number of scenario sets")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("export", help="write the zonal MILP in MPS format")
    _add_common(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("case", help="case utilities")
    csub = p.add_subparsers(dest="case_command", required=True)
    v = csub.add_parser("validate", help="parse a case file and check it")
    v.add_argument("path")
    v.set_defaults(func=cmd_case_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, CaseError, PartitionError, ForecastError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverLimitError, SolverFailure) as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
