#!/usr/bin/env python3
"""Impairment-budget allocation over an SNR sweep.

Compares, for a two-hop Nakagami-2 chain with a stronger second hop, the
outage under an equal split, the DF closed-form split, and the numerical
optimum; for AF it contrasts the closed-form stationary split with the
numerical minimiser of the same asymptotic objective.
"""

from __future__ import annotations

import argparse

import numpy as np

from hrelay.fading import nakagami, to_h_params
from hrelay.metrics_af import outage_af
from hrelay.metrics_df import outage_df
from hrelay.optimizer import BudgetProblem, objective, solve_af_nakagami, solve_df_nakagami, solve_numeric
from hrelay.sndr import ChainConfig, Hop


def chain(snr: float, ratio: float, protocol: str) -> ChainConfig:
    hops = (Hop(to_h_params(nakagami(2), snr)), Hop(to_h_params(nakagami(2), ratio * snr)))
    return ChainConfig(hops, protocol=protocol)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=float, default=0.3)
    ap.add_argument("--threshold", type=float, default=3.0)
    ap.add_argument("--ratio", type=float, default=5.0, help="second-hop mean SNR relative to the first")
    args = ap.parse_args()
    A, g = args.budget, args.threshold

    print("snr_db  df_equal    df_closed   df_numeric  kappa2(closed)")
    for snr_db in range(10, 41, 5):
        c = chain(10 ** (snr_db / 10), args.ratio, "df")
        x = solve_df_nakagami(A, 2, g, c.means, 2)
        num = solve_numeric(BudgetProblem(c, A, g, "df", "exact")).kappa2
        ops = [outage_df(c.with_kappa2(k), g) for k in (np.full(2, A / 2), x, num)]
        print(f"{snr_db:6d}  " + "  ".join(f"{v:.4e}" for v in ops) + f"  {np.round(x, 4)}")

    print("\nsnr_db  af_equal    af_stationary  af_numeric  kappa2(numeric)")
    x_af = solve_af_nakagami(A, 2, g)
    for snr_db in range(10, 41, 5):
        c = chain(10 ** (snr_db / 10), args.ratio, "semi_blind")
        prob = BudgetProblem(c, A, g, "af", "asymptotic")
        num = solve_numeric(prob).kappa2
        ops = [outage_af(c.with_kappa2(k), g) for k in (np.full(2, A / 2), x_af, num)]
        print(f"{snr_db:6d}  " + "  ".join(f"{v:.4e}" for v in ops) + f"  {np.round(num, 4)}")
    print(f"\nAF asymptotic objective: stationary {objective(prob, x_af):.4e} vs numeric {objective(prob, num):.4e}")


if __name__ == "__main__":
    main()
