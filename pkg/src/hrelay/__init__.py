"""Performance of multi-hop AF/DF relay chains with transceiver hardware impairments.

Per-hop SNRs follow the unified H-function fading model.  The package offers
closed-form, asymptotic and Monte Carlo evaluation of outage, bit error
probability and ergodic capacity, plus impairment-budget optimisation.
"""

from .fading import FadingModel, HopDistribution, nakagami, rayleigh, to_h_params
from .metrics_af import (
    bep_af_id,
    capacity_ceiling_af,
    cdf_af_asymptotic,
    cdf_af_dual_approx,
    cdf_af_dual_exact,
    cdf_af_nhop,
    diversity_af,
    ec_af_hi_bound,
    ec_af_id,
    outage_af,
    slope_fit,
)
from .metrics_df import (
    bep_df_id,
    capacity_ceiling_df,
    cdf_df,
    cdf_df_approx,
    cdf_df_asymptotic,
    diversity_df,
    ec_df_hi,
    outage_df,
)
from .montecarlo import Estimate, SimPlan, simulate, sndr_samples
from .optimizer import BudgetProblem, solve_af_nakagami, solve_df_nakagami, solve_numeric
from .sndr import (
    BPSK,
    OOK,
    ChainConfig,
    Hop,
    HopImpairment,
    ModulationSpec,
    Protocol,
    ceiling_af,
    ceiling_df,
    derive_coefficients,
    max_equal_kappa,
    sndr_csi,
    sndr_df,
    sndr_fg,
)
from .special import HParams, fox_h, fox_h_bivariate

__version__ = "0.1.0"
