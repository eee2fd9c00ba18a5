"""Command-line entry point: ``hrelay {analyze,simulate,optimize,reproduce,presets}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, db_to_linear, load_config, load_preset, preset_names
from .optimizer import BudgetProblem, InfeasibleBudgetError, solve_af_nakagami, solve_numeric
from .runner import ResultRow, emit_csv, run_sweep

CLOSED_ENGINES = ("closed_form", "asymptotic")


def _engines(text: str | None):
    return None if text is None else tuple(e.strip() for e in text.split(",") if e.strip())


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", required=config_required, help="TOML run configuration")
    p.add_argument("--out", default="-", help="CSV destination ('-' for stdout)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--engines", help="comma list of closed_form,asymptotic,monte_carlo")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hrelay", description="Multi-hop relay performance under hardware impairments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("analyze", help="closed-form and asymptotic sweep"))
    _common(sub.add_parser("simulate", help="Monte Carlo sweep"))
    rep = sub.add_parser("reproduce", help="run a bundled figure preset")
    rep.add_argument("preset", help="preset name, e.g. fig4")
    _common(rep, config_required=False)
    opt = sub.add_parser("optimize", help="split an impairment budget across hops")
    opt.add_argument("--config", required=True)
    opt.add_argument("--out", default="-")
    opt.add_argument("--budget", type=float, required=True, help="total sum of kappa_i^2")
    thr = opt.add_mutually_exclusive_group(required=True)
    thr.add_argument("--threshold", type=float, help="linear SNDR threshold")
    thr.add_argument("--threshold-db", type=float, help="SNDR threshold in dB")
    opt.add_argument("--protocol", choices=("af", "df"))
    opt.add_argument("--objective", choices=("first_term", "asymptotic", "exact"), default="asymptotic")
    opt.add_argument("--seed", type=int, default=0)
    sub.add_parser("presets", help="list bundled presets")
    return ap


def _optimize(args) -> list[ResultRow]:
    cfg = load_config(args.config)
    chain = cfg.chain_config
    gamma = args.threshold if args.threshold is not None else db_to_linear(args.threshold_db)
    problem = BudgetProblem(chain, args.budget, gamma, args.protocol, args.objective)
    sol = solve_numeric(problem, seed=args.seed)
    rows = [ResultRow(float(i + 1), "numeric", "kappa2", float(k)) for i, k in enumerate(sol.kappa2)]
    rows.append(ResultRow(0.0, "numeric", "objective", sol.objective))
    rows.append(ResultRow(0.0, "equal_split", "objective", sol.equal_objective))
    if problem.protocol == "af":
        try:
            cf = solve_af_nakagami(args.budget, chain.N, gamma)
            rows += [ResultRow(float(i + 1), "closed_form", "kappa2", float(k)) for i, k in enumerate(cf)]
        except InfeasibleBudgetError as exc:  # informative, not fatal
            logging.getLogger(__name__).info("closed form unavailable: %s", exc)
    return rows


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "presets":
            print("\n".join(preset_names()))
            return 0
        if args.command == "optimize":
            emit_csv(_optimize(args), args.out)
            return 0
        if args.command == "reproduce":
            cfg = load_config(args.config) if args.config else load_preset(args.preset)
        else:
            cfg = load_config(args.config)
        engines = _engines(args.engines)
        if engines is None and args.command == "analyze":
            engines = tuple(e for e in cfg.sweep.engines if e in CLOSED_ENGINES) or CLOSED_ENGINES
        if engines is None and args.command == "simulate":
            engines = ("monte_carlo",)
        rows = run_sweep(cfg, engines=engines, trials=args.trials, seed=args.seed, workers=args.workers)
        emit_csv(rows, args.out)
        failed = sum(1 for r in rows if r.error)
        if failed:
            logging.getLogger(__name__).warning("%d point(s) failed; see rows with value nan", failed)
        return 0
    except ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.path, "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
