"""Distribute a total impairment budget ``sum kappa_i^2 = A`` across hops.

Closed forms cover Nakagami-m hops; :func:`solve_numeric` minimises the
high-SNR outage of an arbitrary chain over the budget simplex by projected
gradient descent with finite-difference gradients.

The fixed-gain AF closed form is a stationary point of the leading-term
outage, but that objective is concave along the symmetric direction, so
the point is a local *maximum* there.  The numeric solver returns the true
minimiser (all budget on the first hop); :func:`kkt_residual` confirms the
closed form is stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fading import asymptotic_terms, min_beta
from .metrics_af import asymptotic_expansion_af, outage_af
from .metrics_df import cdf_df, cdf_df_asymptotic
from .sndr import ChainConfig, ChainError, Protocol, derive_coefficients

__all__ = [
    "InfeasibleBudgetError",
    "OptimizerConvergenceError",
    "BudgetProblem",
    "Allocation",
    "solve_af_nakagami",
    "solve_df_nakagami",
    "solve_numeric",
    "objective",
    "kkt_residual",
    "project_simplex",
]

OBJECTIVES = ("first_term", "asymptotic", "exact")


class InfeasibleBudgetError(ChainError):
    """No admissible allocation exists; carries the nearest feasible settings."""

    def __init__(self, message: str, *, max_gamma: float | None = None, min_gamma: float | None = None,
                 max_budget: float | None = None, min_budget: float | None = None):
        hints = [f"{k}={v:.6g}" for k, v in
                 (("max_gamma", max_gamma), ("min_gamma", min_gamma), ("max_budget", max_budget), ("min_budget", min_budget))
                 if v is not None]
        super().__init__(message + (f" (feasible with {', '.join(hints)})" if hints else ""))
        self.max_gamma, self.min_gamma = max_gamma, min_gamma
        self.max_budget, self.min_budget = max_budget, min_budget


class OptimizerConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class BudgetProblem:
    """Minimise the outage at ``threshold`` subject to ``sum kappa_i^2 = budget``.

    The chain supplies fading and mean SNRs; its impairment levels are ignored.
    """

    chain: ChainConfig
    budget: float
    threshold: float
    protocol: str | None = None  # "af" or "df"; inferred from the chain when omitted
    objective: str = "asymptotic"

    def __post_init__(self):
        if not self.budget > 0:
            raise ChainError("budget must be positive")
        if not self.threshold > 0:
            raise ChainError("threshold must be positive")
        proto = self.protocol
        if proto is None:
            proto = "af" if self.chain.protocol.is_fixed_gain else "df"
        proto = proto.lower()
        if proto not in ("af", "df"):
            raise ChainError(f"protocol must be 'af' or 'df', got {proto!r}")
        object.__setattr__(self, "protocol", proto)
        if self.objective not in OBJECTIVES:
            raise ChainError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if proto == "af" and not self.chain.protocol.is_fixed_gain:
            object.__setattr__(self, "chain", self.chain.with_protocol(Protocol.SEMI_BLIND))
        if proto == "df" and self.chain.protocol is not Protocol.DF:
            object.__setattr__(self, "chain", self.chain.with_protocol(Protocol.DF))

    @property
    def N(self) -> int:
        return self.chain.N

    @property
    def equal_split(self) -> np.ndarray:
        return np.full(self.N, self.budget / self.N)

    def feasible(self, kappa2) -> bool:
        x = np.asarray(kappa2, dtype=float)
        if self.protocol == "df":
            return bool(np.all(x * self.threshold < 1))
        return bool((np.prod(1 + x) - 1) * self.threshold < 1)

    def check_feasible(self) -> None:
        A, g, N = self.budget, self.threshold, self.N
        if self.protocol == "df" and A * g >= N:
            raise InfeasibleBudgetError(
                f"every split of budget {A:g} puts some hop's ceiling below threshold {g:g}",
                max_gamma=N / A, max_budget=N / g,
            )
        if self.protocol == "af" and A * g >= 1:
            raise InfeasibleBudgetError(
                f"every split of budget {A:g} puts the AF ceiling below threshold {g:g}",
                max_gamma=1 / A, max_budget=1 / g,
            )


@dataclass(frozen=True)
class Allocation:
    kappa2: np.ndarray
    objective: float
    equal_objective: float
    residual: float
    iterations: int
    starts: int = field(default=1)

    @property
    def kappa(self) -> np.ndarray:
        return np.sqrt(self.kappa2)


# ---------------------------------------------------------------------------
# closed forms


def solve_af_nakagami(A: float, N: int, gamma: float) -> np.ndarray:
    """Stationary split of the leading-term AF outage for Nakagami hops.

    Independent of the mean SNRs and of m.  Raises when the first hop's
    share would be negative.
    """
    if not (A > 0 and gamma > 0 and N >= 1):
        raise ChainError("need A > 0, gamma > 0 and N >= 1")
    if N == 1:
        return np.array([float(A)])
    root = (1 + 1 / gamma) ** (1 / N)
    first = A + N - 1 - (N - 1) * root
    if first < 0:
        raise InfeasibleBudgetError(
            f"first-hop share {first:.4g} is negative",
            min_budget=(N - 1) * (root - 1),
            min_gamma=1 / ((1 + A / (N - 1)) ** N - 1),
        )
    return np.array([first] + [root - 1] * (N - 1))


def _df_weights(means, m: float) -> np.ndarray:
    # prod_{j != i} mean_j^p / sum_j prod_{k != j} mean_k^p == mean_i^-p / sum mean_j^-p
    inv = np.asarray(means, dtype=float) ** (-m / (m + 1))
    return inv / inv.sum()


def solve_df_nakagami(A: float, N: int, gamma: float, means, m: float) -> np.ndarray:
    """Optimal DF split for Nakagami-m hops with a common m; weaker hops get less."""
    means = np.atleast_1d(np.asarray(means, dtype=float))
    if means.size == 1:
        means = np.full(N, means[0])
    if means.size != N:
        raise ChainError("need one mean SNR per hop")
    if not (A > 0 and gamma > 0 and m > 0):
        raise ChainError("need A > 0, gamma > 0 and m > 0")
    if A * gamma >= N:
        raise InfeasibleBudgetError(
            f"budget {A:g} leaves no hop below its ceiling at threshold {gamma:g}",
            max_gamma=N / A, max_budget=N / gamma,
        )
    w = _df_weights(means, m)
    out = 1 / gamma + (A * gamma - N) / gamma * w
    if np.any(out < 0):
        raise InfeasibleBudgetError(
            "closed-form split has a negative share",
            min_budget=(N - 1 / w.max()) / gamma,
        )
    return out


# ---------------------------------------------------------------------------
# objectives


def _af_first_term(problem: BudgetProblem, x: np.ndarray) -> float:
    chain = problem.chain.with_kappa2(x)
    coeffs = derive_coefficients(chain)
    g = problem.threshold
    den = 1 - coeffs.d1 * g
    if den <= 0:
        return math.inf
    base = coeffs.lam[1] * g / (den * chain.means[0])
    return float(sum(t.coef * base**t.beta for t in asymptotic_terms(chain.hops[0].dist)))


def _df_first_term(problem: BudgetProblem, x: np.ndarray) -> float:
    g = problem.threshold
    total = 0.0
    for hop, k2 in zip(problem.chain.hops, x):
        den = 1 - k2 * g
        if den <= 0:
            return math.inf
        lead = min_beta(hop.dist)
        base = g / (den * hop.dist.mean_snr)
        total += sum(t.coef * base**t.beta for t in asymptotic_terms(hop.dist) if abs(t.beta - lead) < 1e-9)
    return total


def objective(problem: BudgetProblem, kappa2) -> float:
    """Outage proxy being minimised; ``inf`` outside the feasible region."""
    x = np.asarray(kappa2, dtype=float)
    if not problem.feasible(x):
        return math.inf
    kind = problem.objective
    if problem.protocol == "af":
        if kind == "first_term":
            return _af_first_term(problem, x)
        chain = problem.chain.with_kappa2(x)
        if kind == "asymptotic":
            return float(asymptotic_expansion_af(chain)(problem.threshold))
        return float(outage_af(chain, problem.threshold))
    if kind == "first_term":
        return _df_first_term(problem, x)
    chain = problem.chain.with_kappa2(x)
    if kind == "asymptotic":
        return float(cdf_df_asymptotic(chain, problem.threshold))
    return float(cdf_df(chain, problem.threshold))


def _log_objective(problem, x):
    f = objective(problem, x)
    if f == math.inf:
        return math.inf
    if not f > 0:
        raise ChainError(
            f"{problem.objective} outage proxy is {f:.3g} at kappa^2={np.round(x, 6).tolist()}; "
            "the high-SNR expansion is outside its range here, use objective='exact'"
        )
    return math.log(f)


def _gradient(problem, x, rel_step=1e-5):
    scale = problem.budget / problem.N
    g = np.empty_like(x)
    f0 = None
    for i in range(len(x)):
        h = rel_step * max(x[i], scale)
        up = x.copy()
        up[i] += h
        if x[i] >= h:
            dn = x.copy()
            dn[i] -= h
            g[i] = (_log_objective(problem, up) - _log_objective(problem, dn)) / (2 * h)
        else:
            if f0 is None:
                f0 = _log_objective(problem, x)
            g[i] = (_log_objective(problem, up) - f0) / h
    return g


def project_simplex(v, total: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total}."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _residual(x, g, total):
    active = x > 1e-12 * total
    mu = g[active].mean()
    dev = np.abs(g[active] - mu).max(initial=0.0)
    slack = np.maximum(mu - g[~active], 0.0).max(initial=0.0)
    return float(max(dev, slack) / max(np.abs(g).max(), 1.0))


def kkt_residual(problem: BudgetProblem, kappa2) -> float:
    """Scaled first-order optimality gap of log-objective on the budget simplex."""
    x = np.asarray(kappa2, dtype=float)
    return _residual(x, _gradient(problem, x), problem.budget)


def _descend(problem, x, tol, max_iter):
    A = problem.budget
    f = _log_objective(problem, x)
    step = 1e-2 * A
    prev = None
    for it in range(1, max_iter + 1):
        g = _gradient(problem, x)
        res = _residual(x, g, A)
        if res < tol:
            return x, res, it
        if prev is not None:
            s, y = x - prev[0], g - prev[1]
            sy = float(s @ y)
            if sy > 0:
                step = float(s @ s) / sy
        prev = (x, g)
        t = step
        for _ in range(60):
            cand = project_simplex(x - t * g, A)
            fc = _log_objective(problem, cand)
            if fc <= f - 1e-4 * float(g @ (x - cand)):
                break
            t *= 0.5
        else:
            return x, res, it  # no descent possible at working precision
        x, f, step = cand, fc, t
    return x, _residual(x, _gradient(problem, x), A), max_iter


def _starts(problem, rng, count):
    A, N = problem.budget, problem.N
    eq = problem.equal_split
    anchor = eq if problem.feasible(eq) else next(
        (A * e for e in np.eye(N) if problem.feasible(A * e)), None
    )
    if anchor is None:
        problem.check_feasible()
        raise InfeasibleBudgetError("no feasible starting split found")
    out = [anchor]
    for _ in range(count):
        v = A * rng.dirichlet(np.full(N, 0.5))
        for _ in range(60):
            if problem.feasible(v):
                break
            v = 0.5 * (v + anchor)
        out.append(v)
    return out


def solve_numeric(problem: BudgetProblem, *, tol: float | None = None, max_iter: int = 2000,
                  restarts: int = 4, seed: int = 0) -> Allocation:
    """Minimise the objective over the budget simplex from several starts.

    ``tol`` defaults to 1e-8 for the analytic objectives and 1e-5 for
    ``"exact"``, whose H-function evaluations carry ~1e-9 relative noise.
    """
    if tol is None:
        tol = 1e-5 if problem.objective == "exact" else 1e-8
    problem.check_feasible()
    rng = np.random.default_rng(seed)
    best = None
    for x0 in _starts(problem, rng, restarts):
        x, res, it = _descend(problem, x0, tol, max_iter)
        f = objective(problem, x)
        if best is None or f < best[1]:
            best = (x, f, res, it)
    x, f, res, it = best
    if res >= tol:
        raise OptimizerConvergenceError(f"stationarity residual {res:.3g} above {tol:g} after {it} iterations")
    x = project_simplex(x, problem.budget)
    return Allocation(x, f, objective(problem, problem.equal_split), res, it, restarts + 1)
