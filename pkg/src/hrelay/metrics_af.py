"""Outage, error rate and ergodic capacity of fixed-gain AF chains.

Writing ``a = gamma / (1 - d_1 gamma)``, the outage event of an N-hop
fixed-gain chain is ``R_1 > 1/a`` with the backward recursion

    R_k = (lambda_{k+1} + C_{R_k} R_{k+1}) / Gamma_k,    R_{N+1} = 0.

Three evaluation routes are offered by :func:`cdf_af_nhop`:

``"approx"``
    the union form: one univariate H term per prefix ``Gamma_1 ... Gamma_i``
    of the chain.  Tight at high SNR.
``"exact"``
    the first hop is integrated exactly against the union form of the
    remaining chain, giving one bivariate H term per prefix.  Exact for
    two hops.
``"numeric"``
    the recursion above integrated on tabulated per-hop densities.  Exact
    for any N up to quadrature error (about 1e-6 relative).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, interpolate
from scipy import special as sp

from .fading import (
    HopDistribution,
    asymptotic_terms,
    cdf as hop_cdf,
    mean_snr_analytic,
    min_beta,
    pdf as hop_pdf,
    with_mean,
)
from .sndr import (
    ChainConfig,
    ChainCoefficients,
    ChainError,
    ModulationSpec,
    Protocol,
    ceiling_af,
    derive_coefficients,
    sndr_fg,
)
from .special import (
    DEFAULT_POLICY,
    BivariateHParams,
    ContourPolicy,
    HFunctionError,
    HParams,
    OuterBlock,
    fox_h,
    fox_h_bivariate,
    small_argument_terms,
)

__all__ = [
    "UnsupportedConfigurationError",
    "AsymptoticAFExpansion",
    "product_kernel",
    "cdf_af_dual_exact",
    "cdf_af_dual_approx",
    "cdf_af_nhop",
    "cdf_af_asymptotic",
    "asymptotic_expansion_af",
    "dual_hop_asymptotic_printed",
    "outage_af",
    "bep_af_id",
    "ec_af_hi_bound",
    "ec_af_id",
    "ec_quadrature",
    "capacity_ceiling_af",
    "diversity_af",
    "slope_fit",
]

MODES = ("exact", "approx", "numeric")
LN2 = math.log(2.0)


class UnsupportedConfigurationError(ChainError):
    """The requested closed form does not exist for this configuration."""


# ---------------------------------------------------------------------------
# shared plumbing


def _elementwise(fn):
    """Map a scalar-threshold metric over array thresholds."""

    @functools.wraps(fn)
    def wrapper(chain, gamma, *args, **kwargs):
        if np.ndim(gamma) == 0:
            return fn(chain, float(gamma), *args, **kwargs)
        g = np.asarray(gamma, dtype=float)
        out = [fn(chain, float(x), *args, **kwargs) for x in g.ravel()]
        return np.array(out).reshape(g.shape)

    return wrapper


def _fixed_gain(chain: ChainConfig) -> None:
    if not chain.protocol.is_fixed_gain:
        raise ChainError(
            f"fixed-gain AF metrics need a blind or semi-blind chain, got {chain.protocol.value!r}"
        )


@lru_cache(maxsize=1024)
def product_kernel(kernels: tuple) -> HParams:
    """Kernel of a product of independent H variates (Mellin transforms multiply)."""
    kernels = tuple(kernels)
    if len(kernels) == 1:
        return kernels[0]
    upper = sum((k.upper[: k.n] for k in kernels), ()) + sum((k.upper[k.n :] for k in kernels), ())
    lower = sum((k.lower[: k.m] for k in kernels), ()) + sum((k.lower[k.m :] for k in kernels), ())
    return HParams(sum(k.m for k in kernels), sum(k.n for k in kernels), upper, lower)


def _term_products(dists: Sequence[HopDistribution]) -> Iterable[tuple[float, float, tuple]]:
    """(prod rho/varrho, prod varrho/mean, kernels) over every choice of mixture term."""
    for terms in itertools.product(*(d.terms for d in dists)):
        weight = math.prod(t.rho / t.varrho for t in terms)
        scale = math.prod(t.varrho / d.mean_snr for t, d in zip(terms, dists))
        yield weight, scale, tuple(t.params for t in terms)


def _multipliers(coeffs: ChainCoefficients) -> np.ndarray:
    lam = np.asarray(coeffs.Lambda, dtype=float)
    if np.any(lam <= 0):
        bad = int(np.argmax(lam <= 0)) + 1
        raise ChainError(
            f"union-term multiplier for prefix {bad} is {lam[bad - 1]:.4g} <= 0 under the "
            f"{coeffs.rule!r} rule; use lambda_rule='consistent'"
        )
    return lam


def _stretch(coeffs: ChainCoefficients, gamma: float) -> float:
    """gamma / (1 - d_1 gamma), or inf past the SNDR ceiling."""
    den = 1.0 - coeffs.d1 * gamma
    return math.inf if den <= 0 else gamma / den


@lru_cache(maxsize=2048)
def _cdf_kernel(kernels: tuple) -> HParams:
    return product_kernel(kernels).cdf_kernel()


def _union_terms(chain: ChainConfig, coeffs: ChainCoefficients):
    """(weight, kernel, scale) with F ~ sum weight * H[kernel](scale * a)."""
    lam = _multipliers(coeffs)
    dists = [h.dist for h in chain.hops]
    out = []
    for i in range(1, chain.N + 1):
        gains = float(np.prod(coeffs.C[:i]))
        for weight, scale, kernels in _term_products(dists[:i]):
            out.append((weight, _cdf_kernel(kernels), scale * gains * lam[i - 1]))
    return out


def _clip01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


# ---------------------------------------------------------------------------
# closed forms


def _approx_value(chain, coeffs, gamma, policy):
    a = _stretch(coeffs, gamma)
    if math.isinf(a):
        return 1.0
    total = 0.0
    for weight, kernel, scale in _union_terms(chain, coeffs):
        total += weight * fox_h(kernel, scale * a, policy)
    return _clip01(total)


@lru_cache(maxsize=2048)
def _first_hop_inner(params: HParams) -> HParams:
    return HParams(
        params.n,
        params.m,
        tuple((1 - b, B) for b, B in params.lower),
        tuple((1 - a, A) for a, A in params.upper) + ((0.0, 1.0),),
    )


@lru_cache(maxsize=2048)
def _ec_first_hop_inner(params: HParams) -> HParams:
    return HParams(
        params.n + 1,
        params.m + 1,
        ((1.0, 1.0),) + tuple((1 - b, B) for b, B in params.lower),
        ((1.0, 1.0),) + tuple((1 - a, A) for a, A in params.upper) + ((0.0, 1.0),),
    )


@lru_cache(maxsize=2048)
def _tail_inner(kernels: tuple) -> HParams:
    k = product_kernel(kernels)
    return HParams(k.m + 1, k.n + 1, ((1.0, 1.0),) + k.upper, ((1.0, 1.0),) + k.lower + ((0.0, 1.0),))


_COUPLING = OuterBlock(1, ((1.0, 1.0, 1.0),))


def _exact_value(chain, coeffs, gamma, policy):
    a = _stretch(coeffs, gamma)
    if math.isinf(a):
        return 1.0
    if a == 0:
        return 0.0
    lam = _multipliers(coeffs)
    dists = [h.dist for h in chain.hops]
    first = dists[0]
    total = 0.0
    for t in first.terms:
        total += t.rho / t.varrho * fox_h(_cdf_kernel((t.params,)), t.varrho * lam[0] * a / first.mean_snr, policy)
    for i in range(2, chain.N + 1):
        gains = float(np.prod(coeffs.C[1:i]))
        for t in first.terms:
            x = first.mean_snr / (t.varrho * lam[0] * a)
            inner1 = _first_hop_inner(t.params)
            for weight, scale, kernels in _term_products(dists[1:i]):
                y = lam[i - 1] / lam[0] * gains * scale
                params = BivariateHParams(_COUPLING, inner1, _tail_inner(kernels))
                total += t.rho / t.varrho * weight * fox_h_bivariate(params, x, y, policy)
    return _clip01(total)


# ---------------------------------------------------------------------------
# numeric recursion

_TABLE_DECADES = (-16.0, 5.0)
_TABLE_DENSITY = 30  # nodes per decade
_TAIL_DECADES = (-10.0, 12.0)
_TAIL_DENSITY = 24


class _HopTable:
    """Log-log interpolants of the unit-mean pdf and cdf of one hop."""

    def __init__(self, dist: HopDistribution):
        unit = with_mean(dist, 1.0)
        lo, hi = _TABLE_DECADES
        lx = np.linspace(lo, hi, int(round((hi - lo) * _TABLE_DENSITY)) + 1) * math.log(10)
        f = np.full(lx.size, np.nan)
        F = np.full(lx.size, np.nan)
        for j, v in enumerate(np.exp(lx)):
            try:
                f[j] = hop_pdf(unit, v)
                F[j] = hop_cdf(unit, v)
            except HFunctionError:
                pass
        keep_f = np.isfinite(f) & (f > 1e-300)
        keep_F = np.isfinite(F) & (F > 1e-300)
        if keep_f.sum() < 8 or keep_F.sum() < 8:
            raise HFunctionError("could not tabulate the hop distribution")
        self.lf = interpolate.CubicSpline(lx[keep_f], np.log(f[keep_f]))
        self.lF = interpolate.PchipInterpolator(lx[keep_F], np.log(F[keep_F]))
        self.f_range = (lx[keep_f][0], lx[keep_f][-1])
        self.F_range = (lx[keep_F][0], lx[keep_F][-1])
        self.f_slope = float(self.lf(self.f_range[0], 1))
        self.F_slope = float(self.lF(self.F_range[0], 1))

    @staticmethod
    def _eval(spline, rng, slope, lx, above):
        out = np.empty_like(lx)
        low = lx < rng[0]
        high = lx > rng[1]
        mid = ~(low | high)
        out[mid] = np.exp(spline(lx[mid]))
        out[low] = np.exp(spline(rng[0]) + slope * (lx[low] - rng[0]))
        out[high] = above
        return out

    def pdf(self, x):
        with np.errstate(divide="ignore"):
            lx = np.log(np.asarray(x, dtype=float))
        return self._eval(self.lf, self.f_range, self.f_slope, lx, 0.0)

    def cdf(self, x):
        with np.errstate(divide="ignore"):
            lx = np.log(np.asarray(x, dtype=float))
        return np.minimum(self._eval(self.lF, self.F_range, self.F_slope, lx, 1.0), 1.0)


@lru_cache(maxsize=64)
def _unit_table(dist: HopDistribution) -> _HopTable:
    return _HopTable(dist)


def _hop_table(dist: HopDistribution) -> _HopTable:
    return _unit_table(with_mean(dist, 1.0))


def _tail_step(table, mean, lam, C, r, Gr, t):
    """P(R_k > t) given R_{k+1} tabulated as (r, Gr) on a uniform log grid."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    h = math.log(r[1] / r[0])
    w = np.full(r.size, h)
    w[0] = w[-1] = h / 2
    x = (lam + C * r[None, :]) / (t[:, None] * mean)
    dens = table.pdf(x) / mean
    integral = (dens * (C / t[:, None]) * (Gr * r * w)[None, :]).sum(axis=1)
    return table.cdf((lam + C * r[0]) / (t * mean)) + integral


def _tail_tables(chain: ChainConfig, coeffs: ChainCoefficients):
    """Grid and values of P(R_2 > t), built backwards from the last hop."""
    N = chain.N
    means = chain.means
    tables = [_hop_table(h.dist) for h in chain.hops]
    lo, hi = _TAIL_DECADES
    nodes = int(round((hi - lo) * _TAIL_DENSITY)) + 1
    span = np.logspace(lo, hi, nodes)
    tau = 1.0 / means[N - 1]
    r = tau * span
    G = tables[N - 1].cdf(coeffs.lam[N] / (r * means[N - 1]))
    for k in range(N - 1, 1, -1):  # 1-based hop index k
        tau = (coeffs.lam[k] + coeffs.C[k] * tau) / means[k - 1]
        t = tau * span
        G = np.clip(_tail_step(tables[k - 1], means[k - 1], coeffs.lam[k], coeffs.C[k], r, G, t), 0.0, 1.0)
        r = t
    return r, G


def _numeric_values(chain, coeffs, gammas):
    return _numeric_cdf(chain, coeffs)(gammas)


def _numeric_cdf(chain, coeffs):
    """Vectorised CDF with the tail recursion tabulated once."""
    table = _hop_table(chain.hops[0].dist)
    mean = chain.means[0]
    tail = _tail_tables(chain, coeffs) if chain.N >= 2 else None
    return lambda gammas: _numeric_eval(table, mean, coeffs, tail, np.atleast_1d(gammas))


def _numeric_eval(table, mean, coeffs, tail, gammas):
    out = np.empty(len(gammas))
    for j, g in enumerate(gammas):
        a = _stretch(coeffs, g) if g > 0 else 0.0
        if math.isinf(a):
            out[j] = 1.0
        elif a == 0:
            out[j] = 0.0
        elif tail is None:
            out[j] = float(table.cdf(coeffs.lam[1] * a / mean))
        else:
            r, G = tail
            out[j] = float(_tail_step(table, mean, coeffs.lam[1], coeffs.C[1], r, G, 1.0 / a)[0])
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# public CDFs


def cdf_af_nhop(
    chain: ChainConfig,
    gamma,
    mode: str = "exact",
    lambda_rule: str = "consistent",
    policy: ContourPolicy = DEFAULT_POLICY,
):
    """CDF of the end-to-end SNDR of an N-hop fixed-gain chain.

    Returns 1 at and beyond the SNDR ceiling ``1/d_1``.  ``lambda_rule`` is
    passed to :func:`derive_coefficients` and only affects the closed forms.
    """
    _fixed_gain(chain)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    coeffs = derive_coefficients(chain, lambda_rule)
    scalar = np.ndim(gamma) == 0
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if mode == "numeric":
        out = _numeric_values(chain, coeffs, g.ravel()).reshape(g.shape)
    else:
        fn = _exact_value if mode == "exact" else _approx_value
        out = np.array([0.0 if x <= 0 else fn(chain, coeffs, float(x), policy) for x in g.ravel()]).reshape(g.shape)
    return float(out[0]) if scalar else out


def _dual(chain):
    if chain.N != 2:
        raise ChainError(f"dual-hop form needs exactly two hops, got {chain.N}")


def cdf_af_dual_exact(chain: ChainConfig, gamma, policy: ContourPolicy = DEFAULT_POLICY):
    """Dual-hop CDF: one univariate plus one bivariate H term per mixture pair."""
    _dual(chain)
    return cdf_af_nhop(chain, gamma, "exact", policy=policy)


def cdf_af_dual_approx(chain: ChainConfig, gamma, policy: ContourPolicy = DEFAULT_POLICY):
    """Dual-hop CDF with the product-of-SNRs term replacing the bivariate one."""
    _dual(chain)
    return cdf_af_nhop(chain, gamma, "approx", policy=policy)


def outage_af(chain: ChainConfig, gamma_th, mode: str = "numeric", lambda_rule: str = "consistent"):
    """Outage probability P(Gamma_F < gamma_th).

    The default evaluates the exact recursion numerically; pass
    ``mode="exact"`` or ``"approx"`` for the H-function closed forms.
    """
    return cdf_af_nhop(chain, gamma_th, mode, lambda_rule)


# ---------------------------------------------------------------------------
# high-SNR behaviour


@dataclass(frozen=True)
class AsymptoticAFExpansion:
    """Sum of power terms ``coef * (scale * gamma / (1 - d_1 gamma))**beta``."""

    terms: tuple
    d1: float

    def __call__(self, gamma):
        g = np.asarray(gamma, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(self.d1 * g < 1, g / (1 - self.d1 * g), np.inf)
        total = np.zeros_like(g)
        for coef, beta, scale in self.terms:
            total = total + coef * (scale * a) ** beta
        total = np.where(np.isfinite(a), total, 1.0)
        return float(total) if total.ndim == 0 else total

    @property
    def exponents(self) -> tuple:
        return tuple(sorted({round(b, 9) for _, b, _ in self.terms}))


def asymptotic_expansion_af(chain: ChainConfig, lambda_rule: str = "consistent") -> AsymptoticAFExpansion:
    """Leading residues of every union term (small-argument H expansion)."""
    _fixed_gain(chain)
    coeffs = derive_coefficients(chain, lambda_rule)
    terms = []
    for weight, kernel, scale in _union_terms(chain, coeffs):
        for beta, coef in small_argument_terms(kernel):
            terms.append((weight * coef, beta, scale))
    return AsymptoticAFExpansion(tuple(terms), coeffs.d1)


def dual_hop_asymptotic_printed(chain: ChainConfig, gamma):
    """Closed dual-hop high-SNR form built from per-hop power terms.

    Hop 2 enters through its small-argument CDF, which makes the integral
    converge only for exponents with ``beta_1 < beta_2 < 1``; integer
    exponent gaps make the gamma ratio singular and raise.
    """
    _fixed_gain(chain)
    _dual(chain)
    coeffs = derive_coefficients(chain)
    m1, m2 = chain.means
    lam2, d1, C1 = coeffs.lam[1], coeffs.d1, coeffs.C[1]
    hop1, hop2 = asymptotic_terms(chain.hops[0].dist), asymptotic_terms(chain.hops[1].dist)
    g = np.asarray(gamma, dtype=float)
    base = np.where(d1 * g < 1, g / np.maximum(1 - d1 * g, 1e-300), np.inf)
    total = np.zeros_like(g)
    for t1 in hop1:
        b1 = t1.beta
        total = total + t1.coef * lam2**b1 * (base / m1) ** b1
        for t2 in hop2:
            b2 = t2.beta
            ratio = sp.gamma(1 - b2) * sp.gamma(b2 - b1) * sp.rgamma(1 - b1)
            if not np.isfinite(ratio):
                raise UnsupportedConfigurationError(
                    f"exponents beta_1={b1:g}, beta_2={b2:g} make the closed dual-hop form singular"
                )
            total = total + (
                b1 * t1.coef * t2.coef * ratio * lam2 ** (b1 - b2) * C1**b2 * base**b1 / (m1**b1 * m2**b2)
            )
    total = np.where(np.isfinite(base), total, 1.0)
    return float(total) if total.ndim == 0 else total


def cdf_af_asymptotic(chain: ChainConfig, gamma, form: str = "residue", lambda_rule: str = "consistent"):
    """High-SNR CDF.  ``form="printed"`` selects the closed dual-hop expression."""
    if form == "printed":
        return dual_hop_asymptotic_printed(chain, gamma)
    if form != "residue":
        raise ValueError(f"unknown asymptotic form {form!r}")
    return asymptotic_expansion_af(chain, lambda_rule)(gamma)


def diversity_af(chain: ChainConfig, gain_mode: str | None = None) -> float:
    """Diversity order: min(i * beta'_i) for blind gains, min(beta'_i) for semi-blind."""
    mode = gain_mode or ("blind" if chain.protocol is Protocol.BLIND else "semi_blind")
    betas = [min_beta(h.dist) for h in chain.hops]
    if mode == "blind":
        return float(min((i + 1) * b for i, b in enumerate(betas)))
    if mode == "semi_blind":
        return float(min(betas))
    raise ValueError(f"gain_mode must be 'blind' or 'semi_blind', got {mode!r}")


def slope_fit(snr_db, values, window_db: float = 15.0) -> float:
    """Negative least-squares slope of log10(values) against snr_db/10 over the top window."""
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(values, dtype=float)
    sel = (x >= x.max() - window_db - 1e-9) & (y > 0)
    if sel.sum() < 2:
        raise ValueError("need at least two positive points inside the fit window")
    slope = np.polyfit(x[sel] / 10.0, np.log10(y[sel]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# error rate and capacity


def _ideal_only(chain: ChainConfig, what: str) -> None:
    if not chain.ideal:
        raise UnsupportedConfigurationError(
            f"{what} has no closed form under hardware impairments; use Monte Carlo"
        )


@lru_cache(maxsize=1024)
def _bep_kernel(kernels: tuple, p: float) -> HParams:
    k = product_kernel(kernels)
    return HParams(k.m, k.n + 2, ((1 - p, 1.0), (1.0, 1.0)) + k.upper, k.lower + ((0.0, 1.0),))


def bep_af_id(chain: ChainConfig, mod: ModulationSpec | None = None, policy: ContourPolicy = DEFAULT_POLICY) -> float:
    """Average BEP of an ideal-hardware fixed-gain chain (union CDF form)."""
    _fixed_gain(chain)
    _ideal_only(chain, "fixed-gain AF BEP")
    mod = mod or chain.modulation
    coeffs = derive_coefficients(chain)
    dists = [h.dist for h in chain.hops]
    total = 0.0
    for q in mod.q:
        for i in range(1, chain.N + 1):
            gains = float(np.prod(coeffs.C[:i]))
            for weight, scale, kernels in _term_products(dists[:i]):
                total += weight * fox_h(_bep_kernel(kernels, mod.p), gains * scale / q, policy)
    return float(min(max(mod.delta / (2 * math.gamma(mod.p)) * total, 0.0), 0.5 * mod.delta * len(mod.q)))


@lru_cache(maxsize=1024)
def _ec_kernel(params: HParams) -> HParams:
    return HParams(
        params.m + 2,
        params.n + 1,
        ((0.0, 1.0),) + params.upper[: params.n] + params.upper[params.n :] + ((1.0, 1.0),),
        ((0.0, 1.0), (0.0, 1.0)) + params.lower,
    )


def ec_af_id(chain: ChainConfig, method: str = "closed", policy: ContourPolicy = DEFAULT_POLICY) -> float:
    """Ergodic capacity (bits/s/Hz) of an ideal-hardware fixed-gain chain.

    ``"closed"`` is the first-hop capacity minus one bivariate H correction
    per longer prefix.  It is exact for one and two hops; from three hops on
    the union form of the tail overcounts outage and the result sits a
    roughly SNR-independent fraction of a bit low.  ``"numeric"`` integrates
    the exact recursive CDF instead.
    """
    _fixed_gain(chain)
    _ideal_only(chain, "the closed-form AF capacity")
    if method == "numeric":
        cdf = _numeric_cdf(chain, derive_coefficients(chain))
        return ec_quadrature(lambda g: float(cdf(g)[0]), chain.c, chain.N)
    if method != "closed":
        raise ValueError(f"method must be 'closed' or 'numeric', got {method!r}")
    coeffs = derive_coefficients(chain)
    c, N = chain.c, chain.N
    dists = [h.dist for h in chain.hops]
    first = dists[0]
    total = 0.0
    for t in first.terms:
        total += t.rho / t.varrho * fox_h(_ec_kernel(t.params), t.varrho / (c * first.mean_snr), policy)
    for i in range(2, N + 1):
        gains = float(np.prod(coeffs.C[1:i]))
        for t in first.terms:
            x = c * first.mean_snr / t.varrho
            inner1 = _ec_first_hop_inner(t.params)
            for weight, scale, kernels in _term_products(dists[1:i]):
                params = BivariateHParams(_COUPLING, inner1, _tail_inner(kernels))
                total -= t.rho / t.varrho * weight * fox_h_bivariate(params, x, gains * scale, policy)
    return float(total / (N * LN2))


def ec_quadrature(cdf, c: float, N: int) -> float:
    """(c / (N ln 2)) * integral of (1 - F(g)) / (1 + c g) over g > 0, for a CDF callable."""

    def integrand(u):
        g = math.expm1(u)
        return (1.0 - cdf(g)) * c / (1.0 + c * g) * (g + 1.0)

    val, _ = integrate.quad(integrand, 0.0, 60.0, limit=400, epsabs=1e-10, epsrel=1e-7)
    return val / (N * LN2)


def ec_af_hi_bound(chain: ChainConfig, form: str = "plugin") -> float:
    """Capacity estimate from the SNDR evaluated at the per-hop mean SNRs.

    ``"plugin"`` returns ``(1/N) log2(1 + c Gamma_F(E))``; ``"printed"``
    returns ``(c/N) log2(Gamma_F(E))``, the high-SNR form with ``c`` outside
    the logarithm.  Both tend to the capacity ceiling only for ``c = 1``
    in the printed case.
    """
    _fixed_gain(chain)
    coeffs = derive_coefficients(chain)
    means = np.array([mean_snr_analytic(h.dist) for h in chain.hops])
    g = sndr_fg(coeffs, means)
    if form == "plugin":
        return float(math.log2(1 + chain.c * g) / chain.N)
    if form == "printed":
        return float(chain.c * math.log2(g) / chain.N)
    raise ValueError(f"unknown form {form!r}")


def capacity_ceiling_af(chain: ChainConfig) -> float:
    """(1/N) log2(1 + c * ceiling_af); infinite for ideal hardware."""
    ceil = ceiling_af(chain)
    if math.isinf(ceil):
        return math.inf
    return math.log2(1 + chain.c * ceil) / chain.N
