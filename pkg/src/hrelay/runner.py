"""Sweep orchestration and CSV output."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import metrics_af as af
from . import metrics_df as df
from .config import RunConfig, Series, SweepSpec, db_to_linear
from .montecarlo import SimPlan, simulate
from .optimizer import BudgetProblem, solve_numeric
from .sndr import ChainConfig, Protocol, ceiling_af, ceiling_df

__all__ = ["ResultRow", "run_sweep", "emit_csv", "CSV_COLUMNS"]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("axis", "engine", "metric", "value", "stderr", "ms")
_SLOPE_STEP_DB = 0.5
MC_OUTPUTS = ("op", "bep", "ec")


@dataclass(frozen=True)
class ResultRow:
    axis: float
    engine: str
    metric: str
    value: float
    stderr: float | None = None
    ms: float = 0.0
    error: str | None = None  # set on failed points; value is nan


class _Unsupported(Exception):
    pass


# ---------------------------------------------------------------------------
# building the chain for one sweep point


def _offsets(series: Series | None, sweep: SweepSpec, n: int) -> np.ndarray:
    raw = (series.snr_offsets_db if series and series.snr_offsets_db is not None else sweep.snr_offsets_db) or (0.0,)
    return np.array([raw[min(i, len(raw) - 1)] for i in range(n)], dtype=float)


def _point_chain(cfg: RunConfig, series: Series | None, x: float) -> tuple[ChainConfig, float]:
    sweep = cfg.sweep
    spec = cfg.chain
    if series and series.hops:
        spec = replace(spec, hops=series.hops)
    if series and series.n_hops:
        spec = spec.with_hops(series.n_hops)
    if sweep.axis == "N":
        spec = spec.with_hops(int(round(x)))
    n = len(spec.hops)

    snr = None
    if sweep.axis == "snr_db":
        snr = x + _offsets(series, sweep, n)
    elif sweep.snr_db is not None:
        snr = sweep.snr_db + _offsets(series, sweep, n)

    kappa = None
    if sweep.axis == "kappa":
        if series and series.kappa_sum is not None:
            rest = (series.kappa_sum - x) / max(n - 1, 1)
            kappa = np.array([x] + [rest] * (n - 1))
        else:
            kappa = np.full(n, x)
    elif series and series.kappa is not None:
        kappa = np.array([series.kappa[min(i, len(series.kappa) - 1)] for i in range(n)])

    protocol = series.protocol if series and series.protocol else None
    chain = spec.build(snr, kappa, protocol)

    if sweep.axis == "gamma_th_db":
        gamma = db_to_linear(x)
    elif series and series.gamma_th is not None:
        gamma = series.gamma_th
    else:
        gamma = db_to_linear(sweep.gamma_th_db)

    if series and series.allocation:
        if series.allocation == "equal":
            k2 = np.full(n, series.budget / n)
        else:
            k2 = solve_numeric(BudgetProblem(chain, series.budget, gamma)).kappa2
        chain = chain.with_kappa2(k2)
    return chain, gamma


# ---------------------------------------------------------------------------
# metric engines


def _closed_form(output: str, chain: ChainConfig, gamma: float, sweep: SweepSpec):
    proto = chain.protocol
    if output == "op":
        if proto.is_fixed_gain:
            return af.outage_af(chain, gamma, mode=sweep.af_mode)
        if proto is Protocol.DF:
            return df.outage_df(chain, gamma)
        return min(df.cdf_df_approx(chain, gamma), 1.0)
    if output == "bep":
        if proto.is_fixed_gain:
            return af.bep_af_id(chain)
        if proto is Protocol.DF:
            return df.bep_df_id(chain)
        raise _Unsupported("no closed-form BEP for CSI-assisted relaying")
    if output == "ec":
        if proto.is_fixed_gain:
            if chain.ideal:
                return af.ec_af_id(chain, method="closed" if chain.N <= 2 else "numeric")
            return af.ec_af_hi_bound(chain)
        if proto is Protocol.DF:
            return df.ec_df_hi(chain)
        raise _Unsupported("no closed-form capacity for CSI-assisted relaying")
    if output == "ceiling":
        ceil = ceiling_df(chain) if proto is Protocol.DF else ceiling_af(chain)
        return 10 * math.log10(ceil) if math.isfinite(ceil) else math.inf
    if output == "diversity":
        return af.diversity_af(chain) if proto.is_fixed_gain else df.diversity_df(chain)
    raise _Unsupported(output)


def _asymptotic_op(chain: ChainConfig, gamma: float) -> float:
    if chain.protocol.is_fixed_gain:
        return float(af.cdf_af_asymptotic(chain, gamma))
    return float(df.cdf_df_asymptotic(chain, gamma))


def _asymptotic(output: str, chain: ChainConfig, gamma: float):
    if output == "op":
        return _asymptotic_op(chain, gamma)
    if output == "ec":
        if chain.protocol is Protocol.DF:
            return df.capacity_ceiling_df(chain)
        return af.capacity_ceiling_af(chain)
    if output == "diversity":
        # local log-log slope of the high-SNR outage, in decades per 10 dB
        step = db_to_linear(_SLOPE_STEP_DB)
        up = _asymptotic_op(chain.with_means(chain.means * step), gamma)
        dn = _asymptotic_op(chain.with_means(chain.means / step), gamma)
        return -(math.log10(up) - math.log10(dn)) / (2 * _SLOPE_STEP_DB / 10)
    raise _Unsupported(f"no asymptotic engine for {output!r}")


def _monte_carlo(outputs, chain, gamma, sweep, seed):
    wanted = tuple(o for o in outputs if o in MC_OUTPUTS)
    if not wanted:
        return {}
    plan = SimPlan(chain, (gamma,), trials=sweep.trials, seed=seed, workers=1, metrics=wanted)
    res = simulate(plan)
    out = {}
    if res.op:
        out["op"] = res.op[gamma]
    if res.bep is not None:
        out["bep"] = res.bep
    if res.ec is not None:
        out["ec"] = res.ec
    return out


def _evaluate_point(cfg: RunConfig, s_index: int, series: Series | None, p_index: int, x: float) -> list[ResultRow]:
    sweep = cfg.sweep
    suffix = f"@{series.label}" if series else ""
    rows = []
    try:
        chain, gamma = _point_chain(cfg, series, x)
    except Exception as exc:  # configuration-level failure at this point
        log.warning("axis=%g series=%s: %s", x, series.label if series else "-", exc)
        return [
            ResultRow(x, e, o + suffix, math.nan, None, 0.0, f"{type(exc).__name__}: {exc}")
            for e in sweep.engines
            for o in sweep.outputs
        ]
    for engine in sweep.engines:
        if engine == "monte_carlo":
            seed = int(np.random.SeedSequence([sweep.seed, s_index, p_index]).generate_state(1)[0])
            t0 = time.perf_counter()
            try:
                est = _monte_carlo(sweep.outputs, chain, gamma, sweep, seed)
                err = None
            except Exception as exc:
                est, err = {}, f"{type(exc).__name__}: {exc}"
            ms = (time.perf_counter() - t0) * 1e3
            for o in sweep.outputs:
                if o not in MC_OUTPUTS:
                    continue
                if o in est:
                    rows.append(ResultRow(x, engine, o + suffix, est[o].value, est[o].stderr, ms))
                else:
                    rows.append(ResultRow(x, engine, o + suffix, math.nan, None, 0.0, err))
            continue
        fn = _closed_form if engine == "closed_form" else _asymptotic
        for o in sweep.outputs:
            t0 = time.perf_counter()
            try:
                value = float(fn(o, chain, gamma, sweep) if engine == "closed_form" else fn(o, chain, gamma))
                err = None
            except _Unsupported:
                continue  # engine has no estimator for this output
            except Exception as exc:
                value, err = math.nan, f"{type(exc).__name__}: {exc}"
                log.warning("axis=%g %s %s%s failed: %s", x, engine, o, suffix, exc)
            rows.append(ResultRow(x, engine, o + suffix, value, None, (time.perf_counter() - t0) * 1e3, err))
    return rows


def _task(args):
    return _evaluate_point(*args)


def run_sweep(cfg: RunConfig, *, engines=None, trials: int | None = None, seed: int | None = None,
              workers: int | None = None) -> list[ResultRow]:
    """Evaluate every (series, axis point, engine, output); rows ordered by series then axis."""
    if cfg.sweep is None:
        raise ValueError("config has no [sweep] section")
    overrides = {}
    if engines is not None:
        overrides["engines"] = tuple(engines)
    if trials is not None:
        overrides["trials"] = int(trials)
    if seed is not None:
        overrides["seed"] = int(seed)
    if workers is not None:
        overrides["workers"] = int(workers)
    cfg = replace(cfg, sweep=replace(cfg.sweep, **overrides))
    series = cfg.sweep.series or (None,)
    tasks = [(cfg, si, s, pi, float(x)) for si, s in enumerate(series) for pi, x in enumerate(cfg.sweep.values)]
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def emit_csv(rows, path) -> None:
    """Write rows with the fixed column order; '-' writes to stdout."""
    import sys

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.axis), r.engine, r.metric, _fmt(r.value), _fmt(r.stderr), f"{r.ms:.3f}"])

    if str(path) == "-":
        write(sys.stdout)
        return
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as fh:
        write(fh)
