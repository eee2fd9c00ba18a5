"""Monte Carlo reference for outage, error rate and capacity.

Each trial draws the per-hop SNRs ``Gamma_i = |h_i|^{r_i}`` (transmit power
and receiver noise normalised to one) and pushes signal, receiver noise and
transmitter distortion powers through the relay cascade:

    received signal      S_i = Gamma_i G^2 S_{i-1}
    noise + distortion   D_i = Gamma_i (G^2 D_{i-1} + kappa_i^2 T_i) + 1

with ``T_i = G^2 (S_{i-1} + D_{i-1})`` the instantaneous transmit power and
``G^2 = 1/C_R`` the relay gain.  The end-to-end SNDR is ``S_N / D_N``.  Fixed
gains use the chain's ``C_R`` constants, CSI-assisted relays normalise the
instantaneous received power, and DF takes the weakest per-hop SNDR.

Streams come from ``SeedSequence(seed).spawn(workers)``, so a fixed seed and
worker count reproduce every estimate bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fading import sample
from .sndr import OOK, BPSK, ChainConfig, ChainError, ModulationSpec, Protocol, derive_coefficients

__all__ = ["SimPlan", "Estimate", "SimResult", "simulate", "sndr_samples", "cascade_sndr"]

METRICS = ("op", "bep", "ec")
_BATCH = 1 << 16


@dataclass(frozen=True)
class SimPlan:
    chain: ChainConfig
    thresholds: tuple = (1.0,)
    trials: int = 1_000_000
    seed: int = 0
    workers: int = 1
    metrics: tuple = ("op",)
    modulation: ModulationSpec | None = None
    means: tuple | None = None  # per-hop linear mean SNRs overriding the chain's
    bep_method: str = "symbols"  # "symbols" for OOK/BPSK bit simulation, "conditional" otherwise

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in np.atleast_1d(self.thresholds)))
        object.__setattr__(self, "metrics", tuple(m.lower() for m in np.atleast_1d(self.metrics)))
        if self.trials < 1:
            raise ChainError("trials must be positive")
        if self.workers < 1:
            raise ChainError("workers must be positive")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise ChainError(f"unknown metrics {sorted(bad)}; choose from {METRICS}")
        if self.bep_method not in ("symbols", "conditional"):
            raise ChainError("bep_method must be 'symbols' or 'conditional'")
        if self.means is not None:
            if len(self.means) != self.chain.N:
                raise ChainError("need one mean SNR per hop")
            object.__setattr__(self, "chain", self.chain.with_means(list(self.means)))

    @property
    def mod(self) -> ModulationSpec:
        return self.modulation or self.chain.modulation


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int

    def covers(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.stderr


@dataclass(frozen=True)
class SimResult:
    op: dict = field(default_factory=dict)  # threshold -> Estimate
    bep: Estimate | None = None
    ec: Estimate | None = None


def _relay_constants(chain: ChainConfig) -> np.ndarray | None:
    if chain.protocol.is_fixed_gain:
        return derive_coefficients(chain).C
    return None


def cascade_sndr(chain: ChainConfig, gammas: np.ndarray, C: np.ndarray | None = None) -> np.ndarray:
    """End-to-end SNDR of per-hop draws (hop axis last) through the physical cascade."""
    g = np.asarray(gammas, dtype=float)
    k2 = chain.kappa2
    if chain.protocol is Protocol.DF:
        return np.min(g / (k2 * g + 1), axis=-1)
    if C is None:
        C = _relay_constants(chain)
    S = g[..., 0].copy()
    D = k2[0] * S + 1.0
    for i in range(1, chain.N):
        if chain.protocol is Protocol.CSI:
            G2 = 1.0 / (S + D)
        else:
            G2 = 1.0 / C[i]
        T = G2 * (S + D)
        S, D = g[..., i] * G2 * S, g[..., i] * (G2 * D + k2[i] * T) + 1.0
    return S / D


def _draw_hops(chain: ChainConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.stack([sample(h.dist, rng, n) for h in chain.hops], axis=-1)


def _bit_errors(mod: ModulationSpec, snr: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Threshold detection of random bits in unit real Gaussian noise."""
    bits = rng.random(snr.shape) < 0.5
    noise = rng.standard_normal(snr.shape)
    if mod.q == OOK.q and mod.p == OOK.p:
        amp = 2.0 * np.sqrt(snr)  # on/off levels 0 and amp, midpoint threshold: P_e = Q(sqrt(snr))
        decided = amp * bits + noise > amp / 2
    else:
        amp = np.sqrt(2.0 * snr)  # antipodal: P_e = Q(sqrt(2 snr))
        decided = amp * np.where(bits, 1.0, -1.0) + noise > 0
    return decided != bits


def _symbol_capable(mod: ModulationSpec) -> bool:
    return mod.delta == 1.0 and mod.p == 0.5 and mod.q in (OOK.q, BPSK.q)


@dataclass
class _Tally:
    n: int = 0
    outages: np.ndarray | None = None
    bep_sum: float = 0.0
    bep_sq: float = 0.0
    ec_sum: float = 0.0
    ec_sq: float = 0.0


def _worker(plan: SimPlan, seed_seq: np.random.SeedSequence, count: int) -> _Tally:
    rng = np.random.default_rng(seed_seq)
    chain, mod = plan.chain, plan.mod
    C = _relay_constants(chain)
    thr = np.array(plan.thresholds)
    tally = _Tally(outages=np.zeros(len(thr), dtype=np.int64))
    symbols = plan.bep_method == "symbols" and _symbol_capable(mod)
    done = 0
    while done < count:
        n = min(_BATCH, count - done)
        snr = cascade_sndr(chain, _draw_hops(chain, rng, n), C)
        if "op" in plan.metrics:
            tally.outages += (snr[:, None] < thr[None, :]).sum(axis=0)
        if "bep" in plan.metrics:
            e = _bit_errors(mod, snr, rng).astype(float) if symbols else mod.conditional_bep(snr)
            tally.bep_sum += float(e.sum())
            tally.bep_sq += float((e * e).sum())
        if "ec" in plan.metrics:
            c = np.log2(1 + chain.c * snr) / chain.N
            tally.ec_sum += float(c.sum())
            tally.ec_sq += float((c * c).sum())
        done += n
    tally.n = count
    return tally


def _mean_estimate(total: float, sq: float, n: int) -> Estimate:
    mean = total / n
    var = max(sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return Estimate(mean, math.sqrt(var / n), n)


def _split(trials: int, workers: int) -> list[int]:
    base, extra = divmod(trials, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def simulate(plan: SimPlan) -> SimResult:
    """Estimate the requested metrics; merge order is fixed by worker index."""
    seqs = np.random.SeedSequence(plan.seed).spawn(plan.workers)
    counts = _split(plan.trials, plan.workers)
    if plan.workers == 1:
        tallies = [_worker(plan, seqs[0], counts[0])]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            tallies = list(pool.map(_worker, [plan] * plan.workers, seqs, counts))
    n = sum(t.n for t in tallies)
    result = {}
    if "op" in plan.metrics:
        hits = sum(t.outages for t in tallies)
        result["op"] = {
            thr: Estimate(float(h) / n, math.sqrt(h / n * (1 - h / n) / n), n) for thr, h in zip(plan.thresholds, hits)
        }
    if "bep" in plan.metrics:
        errs = sum(t.bep_sum for t in tallies)
        if plan.bep_method == "symbols" and _symbol_capable(plan.mod):
            p = errs / n
            result["bep"] = Estimate(p, math.sqrt(p * (1 - p) / n), n)
        else:
            result["bep"] = _mean_estimate(errs, sum(t.bep_sq for t in tallies), n)
    if "ec" in plan.metrics:
        result["ec"] = _mean_estimate(sum(t.ec_sum for t in tallies), sum(t.ec_sq for t in tallies), n)
    return SimResult(**result)


def sndr_samples(plan: SimPlan, count: int | None = None, return_hops: bool = False):
    """Raw end-to-end SNDR draws from the first worker stream of the plan."""
    count = plan.trials if count is None else int(count)
    rng = np.random.default_rng(np.random.SeedSequence(plan.seed).spawn(plan.workers)[0])
    gammas = _draw_hops(plan.chain, rng, count)
    snr = cascade_sndr(plan.chain, gammas)
    return (snr, gammas) if return_hops else snr
