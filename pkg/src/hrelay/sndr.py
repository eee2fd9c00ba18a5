"""Relay chains, derived impairment coefficients and end-to-end SNDR.

A chain is an ordered tuple of hops.  Each hop carries its SNR law, its
aggregate impairment level and, for blind fixed-gain relays, the gain
constant ``C_R``.  With ``lambda_i = prod_{j>=i} (1 + kappa_j**2)`` and
``d_1 = lambda_1 - 1`` the fixed-gain SNDR is

    1 / Gamma_F = d_1 + sum_i lambda_{i+1} prod_{j<=i} C_{R_{j-1}} / Gamma_j
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .fading import HopDistribution, mean_snr_analytic, with_mean

__all__ = [
    "Protocol",
    "HopImpairment",
    "Hop",
    "ModulationSpec",
    "OOK",
    "ChainConfig",
    "ChainCoefficients",
    "ChainError",
    "derive_coefficients",
    "sndr_fg",
    "sndr_csi",
    "sndr_df",
    "ceiling_af",
    "ceiling_df",
    "max_equal_kappa",
    "capacity_constant",
    "HD",
    "DD",
]

HD = 1.0
DD = math.e / (2 * math.pi)


class ChainError(ValueError):
    """Invalid chain configuration."""


class Protocol(str, enum.Enum):
    BLIND = "blind"
    SEMI_BLIND = "semi_blind"
    CSI = "csi"
    DF = "df"

    @property
    def is_fixed_gain(self) -> bool:
        return self in (Protocol.BLIND, Protocol.SEMI_BLIND)


@dataclass(frozen=True)
class HopImpairment:
    """Transmit and receive distortion levels; kappa**2 = kappa_t**2 + kappa_r**2."""

    kappa_t: float = 0.0
    kappa_r: float = 0.0

    def __post_init__(self):
        for name in ("kappa_t", "kappa_r"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ChainError(f"{name} must be a finite nonnegative number, got {v!r}")

    @classmethod
    def from_kappa(cls, kappa: float) -> "HopImpairment":
        if not kappa >= 0:
            raise ChainError(f"kappa must be nonnegative, got {kappa!r}")
        return cls(float(kappa), 0.0)

    @property
    def kappa2(self) -> float:
        return self.kappa_t**2 + self.kappa_r**2

    @property
    def kappa(self) -> float:
        return math.sqrt(self.kappa2)

    @property
    def ideal(self) -> bool:
        return self.kappa2 == 0


@dataclass(frozen=True)
class Hop:
    dist: HopDistribution
    impairment: HopImpairment = HopImpairment()
    gain_constant: float | None = None  # blind C_R of the relay fed by this hop

    @property
    def kappa2(self) -> float:
        return self.impairment.kappa2


@dataclass(frozen=True)
class ModulationSpec:
    """Unified BEP template P_e(g) = delta/(2 Gamma(p)) sum_k Gamma(p, q_k g)."""

    delta: float = 1.0
    p: float = 0.5
    q: tuple = (0.5,)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in np.atleast_1d(self.q)))
        if not self.q:
            raise ChainError("modulation needs at least one q_k")
        if not (self.delta > 0 and self.p > 0 and all(x > 0 for x in self.q)):
            raise ChainError("modulation parameters delta, p and q_k must be positive")

    def conditional_bep(self, g):
        from scipy.special import gammaincc

        g = np.asarray(g, dtype=float)
        return self.delta / 2 * sum(gammaincc(self.p, qk * g) for qk in self.q)


OOK = ModulationSpec(1.0, 0.5, (0.5,), "ook")
BPSK = ModulationSpec(1.0, 0.5, (1.0,), "bpsk")


def capacity_constant(hops: Sequence[Hop]) -> float:
    """c = 1 when every hop uses heterodyne detection, e/(2 pi) otherwise."""
    return HD if all(h.dist.r == 1 for h in hops) else DD


@dataclass(frozen=True)
class ChainConfig:
    hops: tuple
    protocol: Protocol = Protocol.SEMI_BLIND
    modulation: ModulationSpec = OOK
    design_snr: float | None = None  # blind default C_R = 1 + E{Gamma} at this SNR
    c: float | None = None

    def __post_init__(self):
        hops = tuple(self.hops)
        if not hops:
            raise ChainError("a chain needs at least one hop")
        object.__setattr__(self, "hops", hops)
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        if self.c is None:
            object.__setattr__(self, "c", capacity_constant(hops))
        if self.protocol is Protocol.BLIND:
            for i, h in enumerate(hops[:-1]):
                if h.gain_constant is None and self.design_snr is None:
                    raise ChainError(
                        f"hops[{i}].gain_constant: blind relaying needs a fixed gain constant "
                        "or a chain-level design_snr"
                    )
                if h.gain_constant is not None and not h.gain_constant > 0:
                    raise ChainError(f"hops[{i}].gain_constant must be positive")

    @property
    def N(self) -> int:
        return len(self.hops)

    @property
    def kappa2(self) -> np.ndarray:
        return np.array([h.kappa2 for h in self.hops])

    @property
    def means(self) -> np.ndarray:
        return np.array([h.dist.mean_snr for h in self.hops])

    @property
    def ideal(self) -> bool:
        return all(h.impairment.ideal for h in self.hops)

    def with_means(self, means: Sequence[float]) -> "ChainConfig":
        if len(means) != self.N:
            raise ChainError("need one mean SNR per hop")
        hops = tuple(replace(h, dist=with_mean(h.dist, g)) for h, g in zip(self.hops, means))
        return replace(self, hops=hops)

    def with_snr(self, snr: float, ratios: Sequence[float] | None = None) -> "ChainConfig":
        ratios = [1.0] * self.N if ratios is None else list(ratios)
        return self.with_means([snr * r for r in ratios])

    def with_kappa2(self, kappa2: Sequence[float]) -> "ChainConfig":
        if len(kappa2) != self.N:
            raise ChainError("need one kappa**2 per hop")
        hops = tuple(replace(h, impairment=HopImpairment(math.sqrt(max(k2, 0.0)))) for h, k2 in zip(self.hops, kappa2))
        return replace(self, hops=hops)

    def with_protocol(self, protocol) -> "ChainConfig":
        return replace(self, protocol=Protocol(protocol))


@dataclass(frozen=True)
class ChainCoefficients:
    """Derived constants; arrays use 1-based hop indices via the helpers below.

    ``lam[i-1] = lambda_i`` for i = 1..N+1, ``d[i-1] = lambda_i - 1``,
    ``C[i] = C_{R_i}`` for i = 0..N-1 (``C[0] = 1``), ``lam_pair[i-1] =
    lambda_{i,i+1}`` for i = 1..N-1 and ``Lambda[i-1]`` for i = 1..N.
    ``Lambda`` follows the selected rule (see :func:`derive_coefficients`);
    ``Lambda_printed`` always holds the literal definition.
    """

    lam: np.ndarray
    d: np.ndarray
    C: np.ndarray
    lam_pair: np.ndarray
    Lambda: np.ndarray
    Lambda_printed: np.ndarray
    delta: float
    kappa2: np.ndarray
    rule: str = "consistent"

    @property
    def N(self) -> int:
        return len(self.kappa2)

    @property
    def d1(self) -> float:
        return float(self.d[0])

    def lambda_(self, i: int) -> float:
        return float(self.lam[i - 1])

    def C_R(self, i: int) -> float:
        return float(self.C[i])


def _gain_constants(chain: ChainConfig) -> np.ndarray:
    C = np.ones(chain.N)
    for i, hop in enumerate(chain.hops[:-1], start=1):
        if chain.protocol is Protocol.BLIND:
            if hop.gain_constant is not None:
                C[i] = hop.gain_constant
            else:
                C[i] = 1.0 + mean_snr_analytic(with_mean(hop.dist, chain.design_snr))
        else:
            C[i] = (1 + hop.kappa2) * mean_snr_analytic(hop.dist) + 1
    return C


def derive_coefficients(chain: ChainConfig, lambda_rule: str = "consistent") -> ChainCoefficients:
    """Impairment and gain constants of a chain.

    ``lambda_rule`` selects the multiplier of the i-th union term:
    ``"consistent"`` uses ``lambda_{i+1}`` for every i, which is what the
    SNDR expression itself implies; ``"printed"`` uses ``lambda_{i,i+1}`` for
    i <= N-2 and ``lambda_{i+1}`` afterwards.  The two agree for N <= 2 and
    for ideal hardware.  For N >= 3 with impairments the printed multiplier
    ``lambda_{i+1} + C_{R_i}(1 - lambda_{i+1})`` is typically negative.
    """
    if lambda_rule not in ("consistent", "printed"):
        raise ChainError(f"unknown lambda rule {lambda_rule!r}")
    k2 = chain.kappa2
    N = chain.N
    lam = np.ones(N + 1)
    for i in range(N - 1, -1, -1):
        lam[i] = lam[i + 1] * (1 + k2[i])
    d = lam - 1
    C = _gain_constants(chain) if chain.protocol.is_fixed_gain else np.ones(N)
    if chain.protocol is Protocol.CSI:
        C = np.full(N, np.nan)
        C[0] = 1.0
    lam_pair = np.array([lam[i] + C[i] * (1 - lam[i]) for i in range(1, N)])
    printed = np.array([lam_pair[i - 1] if i <= N - 2 else lam[i] for i in range(1, N + 1)])
    consistent = lam[1:].copy()
    Lambda = consistent if lambda_rule == "consistent" else printed
    delta = float(math.sqrt(k2.max()))
    return ChainCoefficients(lam, d, C, lam_pair, Lambda, printed, delta, k2, lambda_rule)


# ---------------------------------------------------------------------------
# instantaneous SNDR


def _as_draws(gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    return g


def sndr_fg(coeffs: ChainCoefficients, gammas):
    """Fixed-gain AF SNDR; ``gammas`` has the hop axis last."""
    g = _as_draws(gammas)
    N = coeffs.N
    if g.shape[-1] != N:
        raise ChainError(f"expected {N} per-hop SNRs, got {g.shape[-1]}")
    inv = np.full(g.shape[:-1], coeffs.d1)
    prod = np.ones(g.shape[:-1])
    with np.errstate(divide="ignore"):
        for i in range(N):
            prod = prod * coeffs.C[i] / g[..., i]
            inv = inv + coeffs.lam[i + 1] * prod
        out = 1.0 / inv
    return float(out) if out.ndim == 0 else out


def sndr_csi(kappa2, gammas):
    """CSI-assisted AF SNDR: (prod(1 + Gamma'_i)/prod(Gamma_i) - 1)**-1."""
    k2 = np.asarray(kappa2, dtype=float)
    g = _as_draws(gammas)
    with np.errstate(divide="ignore"):
        ratio = np.prod((1 + (1 + k2) * g) / g, axis=-1)
        out = 1.0 / (ratio - 1)
    return float(out) if np.ndim(out) == 0 else out


def sndr_df(kappa2, gammas):
    """DF SNDR: min_i Gamma_i / (kappa_i**2 Gamma_i + 1)."""
    k2 = np.asarray(kappa2, dtype=float)
    g = _as_draws(gammas)
    out = np.min(g / (k2 * g + 1), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _kappa2_of(x) -> np.ndarray:
    if isinstance(x, ChainConfig):
        return x.kappa2
    if isinstance(x, ChainCoefficients):
        return x.kappa2
    arr = []
    for item in x:
        arr.append(item.kappa2 if isinstance(item, (HopImpairment, Hop)) else float(item) ** 2)
    return np.array(arr)


def ceiling_af(impairments) -> float:
    """SNDR ceiling of fixed-gain AF, (prod(1 + kappa_i**2) - 1)**-1; inf for ideal hardware.

    Accepts a chain, coefficients, impairment objects or plain kappa values.
    """
    excess = float(np.prod(1 + _kappa2_of(impairments)) - 1)
    return math.inf if excess == 0 else 1.0 / excess


def ceiling_df(impairments) -> float:
    k2 = float(np.max(_kappa2_of(impairments)))
    return math.inf if k2 == 0 else 1.0 / k2


def max_equal_kappa(protocol, N: int, gamma_th: float) -> float:
    """Largest common kappa whose SNDR ceiling still exceeds ``gamma_th``."""
    protocol = Protocol(protocol)
    if gamma_th <= 0:
        raise ChainError("threshold must be positive")
    if protocol is Protocol.DF:
        return math.sqrt(1 / gamma_th)
    return math.sqrt((1 + 1 / gamma_th) ** (1 / N) - 1)
