"""Hard acceptance gates.

Each ``check_*`` returns ``(ok, detail)``.  The pytest wrappers record one
PASS/FAIL line per criterion, echoed in the terminal summary; running this
file directly prints the same lines.
"""

from __future__ import annotations

import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ALPHA_MU_PE, DGG_STRONG, EGK, FISHER_PE, MALAGA_PE, make_chain  # noqa: E402

from hrelay.config import load_preset  # noqa: E402
from hrelay.fading import cdf, nakagami, pdf_integral, rayleigh, to_h_params  # noqa: E402
from hrelay.metrics_af import (  # noqa: E402
    capacity_ceiling_af,
    cdf_af_asymptotic,
    cdf_af_nhop,
    diversity_af,
    ec_af_hi_bound,
    ec_af_id,
    outage_af,
    slope_fit,
)
from hrelay.metrics_df import (  # noqa: E402
    capacity_ceiling_df,
    cdf_df,
    cdf_df_approx,
    cdf_df_asymptotic,
    diversity_df,
    ec_df_hi,
    outage_df,
)
from hrelay.montecarlo import SimPlan, cascade_sndr, simulate, sndr_samples  # noqa: E402
from hrelay.optimizer import BudgetProblem, objective, solve_af_nakagami, solve_df_nakagami, solve_numeric  # noqa: E402
from hrelay.sndr import ceiling_af, ceiling_df, derive_coefficients, max_equal_kappa, sndr_df, sndr_fg  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}


def _db(x):
    return 10 * math.log10(x)


# ------------------------------------------------------------------ 1 ceilings


def check_ceilings():
    target = {("af", 0.15): 11.61, ("af", 0.3): 5.30, ("df", 0.15): 16.48, ("df", 0.3): 10.46}
    bad, parts = [], []
    for (proto, k), want in target.items():
        chain = make_chain([ALPHA_MU_PE] * 3, 100.0, k, protocol="semi_blind" if proto == "af" else "df")
        ceil = ceiling_af(chain) if proto == "af" else ceiling_df(chain)
        op = (lambda g: outage_af(chain, g)) if proto == "af" else (lambda g: outage_df(chain, g))
        below, near, above = op(ceil * 0.5), op(ceil * 0.999), op(ceil * 1.001)
        got = _db(ceil)
        ok = abs(got - want) <= 0.05 and below < near <= 1 and abs(above - 1) < 1e-12 and near > 0.99
        parts.append(f"{proto} k={k}: {got:.3f} dB (OP {below:.3g} -> {near:.4f} -> {above:g})")
        if not ok:
            bad.append(parts[-1])
    return not bad, "; ".join(parts)


# ------------------------------------------------------------------ 2 kappa bounds


def check_kappa_bounds():
    target = {("af", 2): 0.181, ("af", 3): 0.148, ("af", 4): 0.128, ("df", 2): 0.258}
    parts, ok = [], True
    for (proto, n), want in target.items():
        got = max_equal_kappa("semi_blind" if proto == "af" else "df", n, 15.0)
        ok &= abs(got - want) <= 0.002
        parts.append(f"{proto} N={n}: {got:.4f}")
    return ok, ", ".join(parts)


# ------------------------------------------------------------------ 3 closed form vs MC


MC_SCENARIOS = [("nakagami2", nakagami(2)), ("fisher_pe", FISHER_PE), ("malaga_pe", MALAGA_PE)]


def check_monte_carlo(trials=1_000_000):
    parts, ok = [], True
    for name, model in MC_SCENARIOS:
        for n in (2, 3):
            t0 = time.perf_counter()
            worst, compared = 0.0, 0
            for k in (0.0, 0.15):
                for proto in ("semi_blind", "df"):
                    for i, snr_db in enumerate((10, 20, 30, 40)):
                        chain = make_chain([model] * n, 10 ** (snr_db / 10), k, protocol=proto)
                        ref = outage_df(chain, 1.0) if proto == "df" else outage_af(chain, 1.0)
                        est = simulate(SimPlan(chain, (1.0,), trials=trials, seed=1000 * n + i)).op[1.0]
                        if ref < 1e-4:
                            continue
                        compared += 1
                        worst = max(worst, abs(est.value - ref) / max(3 * est.stderr, 0.05 * ref))
            secs = time.perf_counter() - t0
            ok &= worst <= 1 and secs < 60 and compared > 0
            parts.append(f"{name} N={n}: worst {worst:.2f} of tol over {compared} pts, {secs:.0f}s")
    return ok, "; ".join(parts)


# ------------------------------------------------------------------ 4 asymptotics


def check_asymptotics():
    parts, ok = [], True
    for n in (2, 3):
        for x in (1.0, 15.0):
            chain = make_chain([nakagami(2)] * n, 1e4, 0.1)
            asy = float(cdf_af_asymptotic(chain, x))
            approx = float(cdf_af_nhop(chain, x, mode="approx"))
            exact = float(cdf_af_nhop(chain, x, mode="exact" if n == 2 else "numeric"))
            err = abs(asy - approx) / exact
            ok &= err < 0.05
            parts.append(f"N={n} x={x:g}: {100 * err:.2f}%")
    return ok, ", ".join(parts)


# ------------------------------------------------------------------ 5 diversity


def _slope(chain, asymptote):
    snr_db = np.arange(35.0, 50.01, 2.5)
    op = [float(asymptote(chain.with_snr(10 ** (s / 10)), 1.0)) for s in snr_db]
    return slope_fit(snr_db, op)


def check_diversity():
    shapes = [(1, 1), (2, 2), (1, 2), (2, 1), (1, 1, 1), (2, 2, 2), (1, 2, 2), (2, 1, 2)]
    misses, total = [], 0
    for ms in shapes:
        models = [nakagami(m) for m in ms]
        cases = [
            ("semi_blind", make_chain(models, 1.0, 0.1), cdf_af_asymptotic, diversity_af),
            ("blind", make_chain(models, 1.0, 0.1, protocol="blind", design_snr=100.0), cdf_af_asymptotic, diversity_af),
            ("df", make_chain(models, 1.0, 0.1, protocol="df"), cdf_df_asymptotic, diversity_df),
        ]
        for label, chain, asymptote, predicted in cases:
            total += 1
            got, want = _slope(chain, asymptote), predicted(chain)
            if abs(got - want) > 0.1 * want:
                misses.append(f"{label} m={ms}: slope {got:.3f} vs {want:g}")
    detail = f"{total - len(misses)}/{total} within 10%"
    if misses:
        detail += "; misses: " + "; ".join(misses)
    return not misses, detail


# ------------------------------------------------------------------ 6 ergodic capacity


def _fso_chain(n, snr_db, kappa, protocol="semi_blind"):
    spec = load_preset("fig10").chain.with_hops(n)
    return spec.build(np.full(n, float(snr_db)), np.full(n, kappa), protocol)


def check_capacity():
    parts, ok = [], True
    for n, want in ((2, 2.8), (3, 1.7)):
        got = ec_af_hi_bound(_fso_chain(n, 40.0, 0.1))
        ok &= abs(got - want) <= 0.15
        parts.append(f"AF-HI N={n} @40 dB: {got:.3f}")

        grid = np.arange(0.0, 80.1, 10.0)
        af = [ec_af_hi_bound(_fso_chain(n, s, 0.1)) for s in grid]
        df = [ec_df_hi(_fso_chain(n, s, 0.1, "df")) for s in grid]
        cap_af = capacity_ceiling_af(_fso_chain(n, 40.0, 0.1))
        cap_df = capacity_ceiling_df(_fso_chain(n, 40.0, 0.1, "df"))
        sat = (
            np.all(np.diff(af) >= -1e-9) and af[-1] <= cap_af + 1e-9 and cap_af - af[-1] < 0.02
            and np.all(np.diff(df) >= -1e-9) and df[-1] <= cap_df + 1e-9 and cap_df - df[-1] < 0.02
        )
        ok &= bool(sat)
        parts.append(f"N={n} 80 dB: AF {af[-1]:.3f}/{cap_af:.3f}, DF {df[-1]:.3f}/{cap_df:.3f}")

        ideal = [ec_af_id(_fso_chain(n, s, 0.0), method="closed" if n == 2 else "numeric") for s in grid[:7]]
        grows = bool(np.all(np.diff(ideal) > 0)) and ideal[-1] > cap_af
        ok &= grows
        parts.append(f"ID N={n} rises {ideal[0]:.2f} -> {ideal[-1]:.2f}")
    return ok, "; ".join(parts)


# ------------------------------------------------------------------ 7 optimizer


def check_optimizer():
    chain = make_chain([nakagami(2)] * 2, [100.0, 500.0], protocol="df")
    budget, gamma = 0.3, 3.0
    x_df = solve_df_nakagami(budget, 2, gamma, chain.means, 2)
    op_opt = outage_df(chain.with_kappa2(x_df), gamma)
    op_eq = outage_df(chain.with_kappa2([budget / 2] * 2), gamma)
    ok_values = abs(op_opt - 0.003) <= 0.25 * 0.003 and abs(op_eq - 0.0055) <= 0.25 * 0.0055

    num_df = solve_numeric(BudgetProblem(chain, budget, gamma, "df", "asymptotic"))
    df_gap = float(np.max(np.abs(num_df.kappa2 - x_df)))

    af_chain = chain.with_protocol("semi_blind")
    x_af = solve_af_nakagami(budget, 2, gamma)
    af_problem = BudgetProblem(af_chain, budget, gamma, "af", "asymptotic")
    num_af = solve_numeric(af_problem)
    af_gap = float(np.max(np.abs(num_af.kappa2 - x_af)))

    sums = [x_df.sum(), x_af.sum(), num_df.kappa2.sum(), num_af.kappa2.sum()]
    ok_budget = all(abs(s - budget) <= 1e-10 for s in sums)
    ok = ok_values and df_gap <= 1e-6 and af_gap <= 1e-6 and ok_budget
    detail = (
        f"OP optimal {op_opt:.5f}, equal {op_eq:.5f}; DF numeric-vs-closed {df_gap:.1e}; "
        f"AF numeric-vs-closed {af_gap:.3f} (closed {np.round(x_af, 4).tolist()} objective "
        f"{objective(af_problem, x_af):.3e}, numeric {np.round(num_af.kappa2, 4).tolist()} objective "
        f"{num_af.objective:.3e}); budget residual {max(abs(s - budget) for s in sums):.1e}"
    )
    return ok, detail


# ------------------------------------------------------------------ 8 properties


def check_properties():
    rng = np.random.default_rng(2024)
    failures = []

    models = [rayleigh(), nakagami(3.5), ALPHA_MU_PE, FISHER_PE, MALAGA_PE, DGG_STRONG, EGK]
    for model in models:
        hop = to_h_params(model, 5.0)
        if abs(pdf_integral(hop) - 1) > 1e-4:
            failures.append(f"pdf normalisation {model.family}")
        values = [cdf(hop, g) for g in np.geomspace(1e-3, 1e3, 25)]
        if np.any(np.diff(values) < -1e-9):
            failures.append(f"cdf monotonicity {model.family}")

    for model in models[:4]:
        chain = make_chain([model] * 3, 20.0, 0.1, protocol="df")
        for g in (0.5, 2.0, 8.0):
            if cdf_df(chain, g) > cdf_df_approx(chain, g) + 1e-12:
                failures.append(f"union ordering {model.family} at {g}")

    for proto in ("semi_blind", "csi", "df"):
        chain = make_chain([nakagami(2), MALAGA_PE, FISHER_PE], 1e4, [0.1, 0.2, 0.15], protocol=proto)
        plan = SimPlan(chain, trials=200_000, seed=int(rng.integers(1 << 30)))
        snr, hops = sndr_samples(plan, return_hops=True)
        ceil = ceiling_df(chain) if proto == "df" else ceiling_af(chain)
        if not np.all(snr <= ceil * (1 + 1e-12)):
            failures.append(f"ceiling bound {proto}")
        if not np.array_equal(snr, sndr_samples(plan)):
            failures.append(f"seed reproducibility {proto}")
        if proto == "semi_blind":
            ref = sndr_fg(derive_coefficients(chain), hops)
        elif proto == "df":
            ref = sndr_df(chain.kappa2, hops)
        else:
            continue
        if not np.allclose(cascade_sndr(chain, hops), ref, rtol=1e-12, atol=0):
            failures.append(f"per-draw identity {proto}")

    chain = make_chain([nakagami(2)] * 3, 30.0, 0.1)
    plan = SimPlan(chain, (1.0, 4.0), trials=100_000, seed=7, metrics=("op", "bep", "ec"), workers=2)
    if simulate(plan) != simulate(plan):
        failures.append("simulate reproducibility")
    return not failures, "all hold" if not failures else "; ".join(failures)


CHECKS = {
    1: ("SNDR ceilings and outage divergence", check_ceilings),
    2: ("necessary kappa bounds", check_kappa_bounds),
    3: ("closed form vs Monte Carlo matrix", check_monte_carlo),
    4: ("high-SNR asymptotics", check_asymptotics),
    5: ("diversity slopes", check_diversity),
    6: ("ergodic capacity", check_capacity),
    7: ("impairment budget optimizer", check_optimizer),
    8: ("property suites", check_properties),
}


def run(number: int) -> tuple[bool, str]:
    title, fn = CHECKS[number]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ok, detail = fn()
    RESULTS[number] = (ok, f"{title}: {detail}")
    print(format_line(number))
    return ok, detail


def format_line(number: int) -> str:
    ok, text = RESULTS[number]
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number} - {text}"


def test_criterion_1():
    ok, detail = run(1)
    assert ok, detail


def test_criterion_2():
    ok, detail = run(2)
    assert ok, detail


def test_criterion_3():
    ok, detail = run(3)
    assert ok, detail


def test_criterion_4():
    ok, detail = run(4)
    assert ok, detail


def test_criterion_5():
    ok, detail = run(5)
    assert ok, detail


def test_criterion_6():
    ok, detail = run(6)
    assert ok, detail


def test_criterion_7():
    ok, detail = run(7)
    assert ok, detail


def test_criterion_8():
    ok, detail = run(8)
    assert ok, detail


if __name__ == "__main__":
    picked = [int(a) for a in sys.argv[1:]] or list(CHECKS)
    for k in picked:
        run(k)
    sys.exit(0 if all(RESULTS[k][0] for k in picked) else 1)
