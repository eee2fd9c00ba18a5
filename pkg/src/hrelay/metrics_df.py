"""Outage, error rate and capacity of decode-and-forward chains.

The DF SNDR is the minimum of the per-hop SNDRs ``Gamma_i/(kappa_i^2 Gamma_i + 1)``,
so every metric factorises over hops.  The union form
:func:`cdf_df_approx` also serves as a tight approximation for CSI-assisted
AF relaying.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

from .fading import asymptotic_terms, cdf as hop_cdf, mean_snr_analytic, min_beta
from .metrics_af import UnsupportedConfigurationError, _bep_kernel
from .sndr import ChainConfig, ModulationSpec, ceiling_df
from .special import DEFAULT_POLICY, ContourPolicy, fox_h

__all__ = [
    "cdf_df",
    "cdf_df_approx",
    "cdf_df_asymptotic",
    "outage_df",
    "bep_df_id",
    "ec_df_hi",
    "capacity_ceiling_df",
    "diversity_df",
]


def _per_hop_cdfs(chain: ChainConfig, gamma: float, policy: ContourPolicy):
    """F_i(gamma / (1 - kappa_i^2 gamma)), or None once any hop saturates."""
    out = []
    for hop in chain.hops:
        den = 1.0 - hop.kappa2 * gamma
        if den <= 0:
            return None
        out.append(hop_cdf(hop.dist, gamma / den, policy))
    return np.array(out)


def _map(fn, gamma):
    if np.ndim(gamma) == 0:
        return fn(float(gamma))
    g = np.asarray(gamma, dtype=float)
    return np.array([fn(float(x)) for x in g.ravel()]).reshape(g.shape)


def cdf_df(chain: ChainConfig, gamma, policy: ContourPolicy = DEFAULT_POLICY):
    """1 - prod(1 - F_i); equal to 1 from the ceiling 1/delta^2 onwards."""

    def one(g):
        if g <= 0:
            return 0.0
        F = _per_hop_cdfs(chain, g, policy)
        if F is None:
            return 1.0
        return float(min(-np.expm1(np.sum(np.log1p(-np.minimum(F, 1.0)))), 1.0))

    return _map(one, gamma)


def cdf_df_approx(chain: ChainConfig, gamma, policy: ContourPolicy = DEFAULT_POLICY):
    """Union bound sum_i F_i; may exceed 1 at low SNR."""

    def one(g):
        if g <= 0:
            return 0.0
        F = _per_hop_cdfs(chain, g, policy)
        return math.inf if F is None else float(F.sum())

    return _map(one, gamma)


def cdf_df_asymptotic(chain: ChainConfig, gamma):
    """Sum of the per-hop small-argument power terms at the stretched thresholds."""
    expansions = [asymptotic_terms(h.dist) for h in chain.hops]

    def one(g):
        if g <= 0:
            return 0.0
        total = 0.0
        for hop, terms in zip(chain.hops, expansions):
            den = 1.0 - hop.kappa2 * g
            if den <= 0:
                return 1.0
            x = g / (den * hop.dist.mean_snr)
            total += sum(t.coef * x**t.beta for t in terms)
        return float(total)

    return _map(one, gamma)


def outage_df(chain: ChainConfig, gamma_th, policy: ContourPolicy = DEFAULT_POLICY):
    """P(Gamma_D < gamma_th)."""
    return cdf_df(chain, gamma_th, policy)


def bep_df_id(chain: ChainConfig, mod: ModulationSpec | None = None, policy: ContourPolicy = DEFAULT_POLICY) -> float:
    """Average BEP of an ideal-hardware DF chain from the union CDF."""
    if not chain.ideal:
        raise UnsupportedConfigurationError("DF BEP has no closed form under hardware impairments; use Monte Carlo")
    mod = mod or chain.modulation
    total = 0.0
    for q in mod.q:
        for hop in chain.hops:
            for t in hop.dist.terms:
                z = t.varrho / (q * hop.dist.mean_snr)
                total += t.rho / t.varrho * fox_h(_bep_kernel((t.params,), mod.p), z, policy)
    return float(min(max(mod.delta / (2 * sp.gamma(mod.p)) * total, 0.0), 0.5 * mod.delta * len(mod.q)))


def ec_df_hi(chain: ChainConfig) -> float:
    """min_i (1/N) log2(E_i / (kappa_i^2 E_i + 1)) with E_i the hop mean SNR."""
    vals = []
    for hop in chain.hops:
        E = mean_snr_analytic(hop.dist)
        vals.append(math.log2(E / (hop.kappa2 * E + 1)) / chain.N)
    return float(min(vals))


def capacity_ceiling_df(chain: ChainConfig) -> float:
    """(1/N) log2(1 + c / max kappa_i^2); infinite for ideal hardware."""
    ceil = ceiling_df(chain)
    if math.isinf(ceil):
        return math.inf
    return math.log2(1 + chain.c * ceil) / chain.N


def diversity_df(chain: ChainConfig, form: str = "weighted") -> float:
    """Diversity order of DF relaying.

    ``"weighted"`` returns ``min(i * beta'_i)``; ``"min"`` returns the plain
    ``min(beta'_i)`` that the per-hop union form implies.  They agree
    whenever the first hop has the smallest exponent.
    """
    betas = [min_beta(h.dist) for h in chain.hops]
    if form == "weighted":
        return float(min((i + 1) * b for i, b in enumerate(betas)))
    if form == "min":
        return float(min(betas))
    raise ValueError(f"form must be 'weighted' or 'min', got {form!r}")
