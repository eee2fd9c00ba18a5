"""Fox H-function kernels evaluated by Mellin-Barnes contour quadrature.

Convention used throughout the package::

    H(z) = 1/(2 pi i) * Integral_L Theta(s) z**(-s) ds

    Theta(s) = prod_{j<=m} Gamma(b_j + B_j s) * prod_{j<=n} Gamma(1 - a_j - A_j s)
               / ( prod_{j>m} Gamma(1 - b_j - B_j s) * prod_{j>n} Gamma(a_j + A_j s) )

with ``L`` a vertical line ``Re s = c`` separating the left pole family
``s = -(b_j + k)/B_j`` (j <= m) from the right family ``s = (1 - a_j + k)/A_j``
(j <= n).  Flipping ``s -> -s`` gives the other common textbook form, so the
coefficient lists are the usual ones.

All gamma products are accumulated in log space and exponentiated once per
node.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy import special as sp

__all__ = [
    "HFunctionError",
    "GammaPoleError",
    "ContourError",
    "NonConvergenceError",
    "CoincidentPoleError",
    "SeriesDivergenceError",
    "HParams",
    "OuterBlock",
    "BivariateHParams",
    "ContourPolicy",
    "HValue",
    "log_gamma_complex",
    "fox_h",
    "fox_h_series",
    "fox_h_bivariate",
    "leading_residues",
    "small_argument_terms",
    "resolve_coincidences",
]


class HFunctionError(ValueError):
    """Base class for H-function evaluation problems."""


class GammaPoleError(HFunctionError):
    """Gamma evaluated at a nonpositive integer."""


class ContourError(HFunctionError):
    """No admissible vertical contour exists, or the integrand does not decay."""


class NonConvergenceError(HFunctionError):
    """Quadrature did not reach the requested tolerance within the node budget."""

    def __init__(self, message: str, value: float = math.nan, error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


class CoincidentPoleError(HFunctionError):
    """Two left poles coincide, so the simple-pole residue series is invalid."""


class SeriesDivergenceError(HFunctionError):
    """The residue series does not converge for the requested argument."""


class HValue(NamedTuple):
    value: float
    error: float
    imag: float = 0.0
    nodes: int = 0


def log_gamma_complex(z):
    """Principal branch of log Gamma(z) for complex (or real) input.

    Accepts scalars or arrays.  Raises :class:`GammaPoleError` when any input
    sits on a nonpositive integer.
    """
    arr = np.asarray(z, dtype=complex)
    on_axis = arr.imag == 0
    re = arr.real
    bad = on_axis & (re <= 0) & (re == np.round(re))
    if np.any(bad):
        raise GammaPoleError(f"Gamma has a pole at {arr[bad].ravel()[0].real:g}")
    out = sp.loggamma(arr)
    return complex(out) if np.ndim(z) == 0 else out


# ---------------------------------------------------------------------------
# parameter containers


def _pairs(seq) -> tuple[tuple[float, float], ...]:
    out = []
    for item in seq:
        a, A = item
        out.append((float(a), float(A)))
    return tuple(out)


@dataclass(frozen=True)
class HParams:
    """Orders and coefficients of one univariate Fox H kernel.

    ``upper`` holds the ``(a_j, A_j)`` pairs (length p) and ``lower`` the
    ``(b_j, B_j)`` pairs (length q).  ``p`` and ``q`` may be given explicitly,
    in which case they must match the list lengths.
    """

    m: int
    n: int
    upper: tuple = ()
    lower: tuple = ()
    p: int | None = None
    q: int | None = None

    def __post_init__(self):
        up, lo = _pairs(self.upper), _pairs(self.lower)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)
        if self.p is None:
            object.__setattr__(self, "p", len(up))
        if self.q is None:
            object.__setattr__(self, "q", len(lo))
        if self.p != len(up) or self.q != len(lo):
            raise HFunctionError(
                f"declared orders p={self.p}, q={self.q} do not match "
                f"coefficient lists of length {len(up)}, {len(lo)}"
            )
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise HFunctionError(
                f"orders must satisfy 0<=m<=q and 0<=n<=p, got m={self.m}, n={self.n}, "
                f"p={self.p}, q={self.q}"
            )
        if any(A <= 0 for _, A in up) or any(B <= 0 for _, B in lo):
            raise HFunctionError("all A_j and B_j must be strictly positive")
        if not all(math.isfinite(x) for pair in up + lo for x in pair):
            raise HFunctionError("coefficients must be finite")
        lo_b, hi_b = self.strip
        if not lo_b < hi_b:
            raise ContourError(
                f"left poles (sup {lo_b:g}) and right poles (inf {hi_b:g}) "
                "cannot be separated by a vertical line"
            )

    # coefficient views -----------------------------------------------------
    @property
    def a(self) -> np.ndarray:
        return np.array([x for x, _ in self.upper])

    @property
    def A(self) -> np.ndarray:
        return np.array([x for _, x in self.upper])

    @property
    def b(self) -> np.ndarray:
        return np.array([x for x, _ in self.lower])

    @property
    def B(self) -> np.ndarray:
        return np.array([x for _, x in self.lower])

    @property
    def strip(self) -> tuple[float, float]:
        """Open interval of admissible contour abscissae."""
        left = max((-b / B for b, B in self.lower[: self.m]), default=-math.inf)
        right = min(((1 - a) / A for a, A in self.upper[: self.n]), default=math.inf)
        return left, right

    @property
    def decay(self) -> float:
        """Exponential decay rate a* of |Theta| along vertical lines (times pi/2)."""
        A, B = self.A, self.B
        return float(A[: self.n].sum() - A[self.n :].sum() + B[: self.m].sum() - B[self.m :].sum())

    @property
    def mu(self) -> float:
        return float(self.B.sum() - self.A.sum())

    def log_kernel(self, s):
        """log Theta(s), vectorized over complex ``s``."""
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        for j, (b, B) in enumerate(self.lower):
            if j < self.m:
                out += sp.loggamma(b + B * s)
            else:
                out -= sp.loggamma(1 - b - B * s)
        for j, (a, A) in enumerate(self.upper):
            if j < self.n:
                out += sp.loggamma(1 - a - A * s)
            else:
                out -= sp.loggamma(a + A * s)
        return out

    def kernel(self, s):
        return np.exp(self.log_kernel(s))

    def log_abs_real(self, c):
        """log|Theta(c)| for real ``c`` (array); denominators at poles give -inf."""
        c = np.asarray(c, dtype=float)
        out = np.zeros(c.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j, (b, B) in enumerate(self.lower):
                out += sp.gammaln(b + B * c) if j < self.m else -sp.gammaln(1 - b - B * c)
            for j, (a, A) in enumerate(self.upper):
                out += sp.gammaln(1 - a - A * c) if j < self.n else -sp.gammaln(a + A * c)
        return out

    # convenience builders -----------------------------------------------------
    def cdf_kernel(self) -> "HParams":
        """Kernel of int_0^x H(t) dt / x style CDF: H^{m,n+1}_{p+1,q+1}[(1,1),a ; b,(0,1)]."""
        return HParams(self.m, self.n + 1, ((1.0, 1.0),) + self.upper, self.lower + ((0.0, 1.0),))

    def with_upper_first(self, pair, in_n_group: bool = True) -> "HParams":
        if in_n_group:
            return HParams(self.m, self.n + 1, (tuple(pair),) + self.upper, self.lower)
        return HParams(self.m, self.n, self.upper + (tuple(pair),), self.lower)


@dataclass(frozen=True)
class OuterBlock:
    """Joint coupling block of a bivariate H-function.

    ``upper`` holds triples ``(a_j, alpha_j, A_j)``, the first ``n`` of which
    sit in the numerator as ``Gamma(1 - a_j + alpha_j s + A_j t)``; the rest sit
    in the denominator as ``Gamma(a_j - alpha_j s - A_j t)``.  ``lower`` holds
    denominator triples ``(b_j, beta_j, B_j)`` entering as
    ``Gamma(1 - b_j + beta_j s + B_j t)``.  Here ``s`` and ``t`` are the
    variables conjugate to ``x**s`` and ``y**t``.
    """

    n: int
    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        up = tuple(tuple(float(x) for x in t) for t in self.upper)
        lo = tuple(tuple(float(x) for x in t) for t in self.lower)
        if any(len(t) != 3 for t in up + lo):
            raise HFunctionError("outer block entries must be (a, alpha, A) triples")
        if not 0 <= self.n <= len(up):
            raise HFunctionError("outer block order n out of range")
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)

    def log_factor(self, u, v):
        """log phi evaluated at s = -u, t = -v (the package's inner convention)."""
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        out = np.zeros(np.broadcast(u, v).shape, dtype=complex)
        for j, (a, al, A) in enumerate(self.upper):
            if j < self.n:
                out = out + sp.loggamma(1 - a - al * u - A * v)
            else:
                out = out - sp.loggamma(a + al * u + A * v)
        for b, be, B in self.lower:
            out = out - sp.loggamma(1 - b - be * u - B * v)
        return out

    def log_abs_real(self, u, v):
        out = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            for j, (a, al, A) in enumerate(self.upper):
                if j < self.n:
                    out = out + sp.gammaln(1 - a - al * u - A * v)
                else:
                    out = out - sp.gammaln(a + al * u + A * v)
            for b, be, B in self.lower:
                out = out - sp.gammaln(1 - b - be * u - B * v)
        return out

    @property
    def orders(self) -> tuple[int, int, int, int]:
        return 0, self.n, len(self.upper), len(self.lower)


@dataclass(frozen=True)
class BivariateHParams:
    """Bivariate Fox H-function with m1 = 0 coupling.

    The value is::

        1/(2 pi i)^2 Int Int phi(s, t) theta1(s) theta2(t) x**s y**t ds dt

    where ``theta_k(s) = inner_k.log_kernel(-s)`` in the univariate convention
    of :class:`HParams`.  This matches the standard textbook layout whose
    inner blocks are written ``Gamma(d_j - delta_j s)`` (m-group) and
    ``Gamma(1 - c_j + gamma_j s)`` (n-group); ``inner_k.upper`` holds the
    ``(c_j, gamma_j)`` pairs and ``inner_k.lower`` the ``(d_j, delta_j)``
    pairs.
    """

    outer: OuterBlock
    inner1: HParams
    inner2: HParams

    def constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """Strict linear inequalities ``G @ (u, v) < h`` defining admissible abscissae."""
        rows, rhs = [], []
        for k, inner in enumerate((self.inner1, self.inner2)):
            e = np.zeros(2)
            e[k] = 1.0
            for b, B in inner.lower[: inner.m]:  # b + B u > 0
                rows.append(-B * e)
                rhs.append(b)
            for a, A in inner.upper[: inner.n]:  # 1 - a - A u > 0
                rows.append(A * e)
                rhs.append(1 - a)
        for a, al, A in self.outer.upper[: self.outer.n]:  # 1 - a - al u - A v > 0
            rows.append(np.array([al, A]))
            rhs.append(1 - a)
        return np.array(rows).reshape(-1, 2), np.array(rhs)

    def log_integrand(self, u, v, lx: float, ly: float):
        return (
            self.outer.log_factor(u[:, None], v[None, :])
            + self.inner1.log_kernel(u)[:, None]
            + self.inner2.log_kernel(v)[None, :]
            - u[:, None] * lx
            - v[None, :] * ly
        )


@dataclass(frozen=True)
class ContourPolicy:
    """Contour placement and quadrature controls.

    rule
        ``"auto"`` picks the abscissa that minimises the peak integrand
        magnitude inside the admissible strip (a real-axis saddle search);
        ``"midpoint"`` uses the middle of the strip; ``"explicit"`` uses
        ``offset`` (a float, or a pair for bivariate kernels).
    T
        Fixed truncation half-length, or ``None`` for adaptive truncation.
    """

    rule: str = "auto"
    offset: float | tuple[float, float] | None = None
    T: float | None = None
    node_budget: int = 200_000
    rtol: float = 1e-10

    def __post_init__(self):
        if self.rule not in ("auto", "midpoint", "explicit"):
            raise ValueError(f"unknown contour rule {self.rule!r}")
        if self.rule == "explicit" and self.offset is None:
            raise ValueError("explicit rule requires an offset")
        if self.T is not None and not self.T > 0:
            raise ValueError("truncation half-length T must be positive")
        if not 0 < self.rtol < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.node_budget <= 0:
            raise ValueError("node budget must be positive")


DEFAULT_POLICY = ContourPolicy()
_WINDOW = 30.0  # width used when one side of the strip is unbounded
_T_MAX = 2.0e3


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


# ---------------------------------------------------------------------------
# univariate contour quadrature


def _finite_strip(params: HParams, window: float = _WINDOW) -> tuple[float, float]:
    lo, hi = params.strip
    if math.isinf(lo) and math.isinf(hi):
        return -window, window
    if math.isinf(lo):
        return hi - window, hi
    if math.isinf(hi):
        return lo, lo + window
    return lo, hi


def _choose_abscissa(params: HParams, lz: float, policy: ContourPolicy) -> float:
    lo, hi = params.strip
    if policy.rule == "explicit":
        c = float(policy.offset)  # type: ignore[arg-type]
        if not lo < c < hi:
            raise ContourError(f"explicit abscissa {c:g} outside admissible strip ({lo:g}, {hi:g})")
        return c
    if policy.rule == "midpoint":
        flo, fhi = _finite_strip(params)
        return 0.5 * (flo + fhi)
    window = _WINDOW
    ts = np.array([0.0, 0.3, 1.0, 3.0])
    while True:
        flo, fhi = _finite_strip(params, window)
        width = fhi - flo
        pad = min(0.02 * width, 0.05)
        cs = np.linspace(flo + pad, fhi - pad, 121)
        grid = cs[:, None] + 1j * ts[None, :]
        with np.errstate(all="ignore"):
            mag = params.log_kernel(grid).real.max(axis=1) - cs * lz
        mag = np.where(np.isfinite(mag), mag, np.inf)
        k = int(np.argmin(mag))
        # an unbounded side whose optimum sits on the window edge: widen
        at_edge = (k == 0 and math.isinf(lo)) or (k == cs.size - 1 and math.isinf(hi))
        if not at_edge or window > 1e4:
            return float(cs[k])
        window *= 4


def _log_abs_integrand(params: HParams, c: float, lz: float, t: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return params.log_kernel(c + 1j * t).real - c * lz


def _truncation(params: HParams, c: float, lz: float, rtol: float) -> tuple[float, float]:
    """Return (T, log peak) such that the integrand beyond T is negligible."""
    ts = np.concatenate([np.linspace(0.0, 8.0, 81)[1:], 8.0 * 1.15 ** np.arange(1, 60)])
    ts = ts[ts <= _T_MAX]
    ell = _log_abs_integrand(params, c, lz, ts)
    ell = np.where(np.isnan(ell), -np.inf, ell)
    peak = float(np.max(ell))
    cut = peak + math.log(rtol) - 9.0
    above = np.nonzero(ell > cut)[0]
    if above.size == 0:
        return float(ts[1]), peak
    last = int(above[-1])
    if last == ts.size - 1:
        raise ContourError("integrand does not decay along the contour within the scan range")
    return float(ts[last + 1]), peak


def _panel_rule(params, c, lz, a, b, nodes):
    x, w = _gauss(nodes)
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    with np.errstate(all="ignore"):
        g = np.exp(params.log_kernel(c + 1j * t) - (c + 1j * t) * lz)
    g = np.where(np.isfinite(g), g, 0.0)
    return (g.real * w).sum(axis=1) * half, (np.abs(g) * w).sum(axis=1) * half


def _adaptive_line(params: HParams, c: float, lz: float, T: float, policy: ContourPolicy):
    nlo, nhi = 10, 20
    per_panel = nlo + nhi
    n0 = int(min(2000, max(8, math.ceil(T / 1.0), math.ceil(T * abs(lz) / math.pi))))
    edges = np.linspace(0.0, T, n0 + 1)
    a, b = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    done_abs = 0.0
    used = 0
    while True:
        coarse, _ = _panel_rule(params, c, lz, a, b, nlo)
        fine, absint = _panel_rule(params, c, lz, a, b, nhi)
        used += per_panel * a.size
        err = np.abs(fine - coarse)
        total = done_val + fine.sum()
        l1 = done_abs + absint.sum()
        tol = max(policy.rtol * abs(total), 64 * np.finfo(float).eps * l1, 1e-300)
        if done_err + err.sum() <= tol:
            return total, done_err + err.sum(), used
        share = tol * (b - a) / T
        bad = err > share
        done_val += fine[~bad].sum()
        done_err += err[~bad].sum()
        done_abs += absint[~bad].sum()
        if used + 2 * per_panel * int(bad.sum()) > policy.node_budget:
            est = done_val + fine[bad].sum()
            raise NonConvergenceError(
                f"contour quadrature did not converge within {policy.node_budget} nodes",
                value=est / math.pi,
                error=(done_err + err[bad].sum()) / math.pi,
            )
        mid = 0.5 * (a[bad] + b[bad])
        a = np.concatenate([a[bad], mid])
        b = np.concatenate([mid, b[bad]])


def fox_h(params: HParams, z: float, policy: ContourPolicy = DEFAULT_POLICY, full_output: bool = False):
    """Evaluate the univariate Fox H-function at ``z > 0``.

    The Mellin-Barnes integral is folded onto ``t >= 0`` using conjugate
    symmetry and integrated by adaptive Gauss-Legendre panels.  With
    ``full_output=True`` an :class:`HValue` carrying the error estimate and
    the imaginary residue of the unfolded integral is returned.
    """
    z = float(z)
    if not z > 0 or not math.isfinite(z):
        raise ValueError(f"fox_h needs a finite positive argument, got {z!r}")
    if params.decay <= 0:
        raise ContourError(f"kernel does not decay along vertical lines (a* = {params.decay:g})")
    lz = math.log(z)
    c = _choose_abscissa(params, lz, policy)
    if policy.T is None:
        T, _ = _truncation(params, c, lz, policy.rtol)
    else:
        T = float(policy.T)
    total, err, used = _adaptive_line(params, c, lz, T, policy)
    value = total / math.pi
    if not full_output:
        return value
    # imaginary residue of the two-sided integral on the final coarse grid
    x, w = _gauss(40)
    t = 0.5 * T * (x + 1)
    s = np.concatenate([c + 1j * t, c - 1j * t])
    with np.errstate(all="ignore"):
        g = np.exp(params.log_kernel(s) - s * lz)
    imag = float(np.imag(np.concatenate([w, w]) @ np.nan_to_num(g)) * 0.5 * T / (2 * math.pi))
    return HValue(value, err / math.pi, imag, used)


# ---------------------------------------------------------------------------
# residue series


def _left_poles(params: HParams, horizon: int):
    """(s0, j, k) for the left poles of the m-group, sorted right to left."""
    poles = []
    for j, (b, B) in enumerate(params.lower[: params.m]):
        for k in range(horizon):
            poles.append((-(b + k) / B, j, k))
    poles.sort(key=lambda x: -x[0])
    return poles


def _find_coincidence(poles, tol=1e-9):
    for (s1, j1, _), (s2, j2, _) in zip(poles, poles[1:]):
        if j1 != j2 and abs(s1 - s2) <= tol * max(1.0, abs(s1)):
            return j1, j2
    return None


def _perturbed(params: HParams, j: int, eps: float = 1e-6) -> HParams:
    lower = list(params.lower)
    b, B = lower[j]
    lower[j] = (b + eps, B)
    return HParams(params.m, params.n, params.upper, tuple(lower))


def resolve_coincidences(params: HParams, horizon: int, on_coincident: str = "raise") -> HParams:
    """Return params whose first ``horizon`` left poles per group are simple."""
    for _ in range(4 * max(1, params.m)):
        hit = _find_coincidence(_left_poles(params, horizon))
        if hit is None:
            return params
        if on_coincident == "raise":
            raise CoincidentPoleError(
                f"left poles of lower entries {hit[0]} and {hit[1]} coincide; "
                "pass on_coincident='perturb' to shift one of them"
            )
        warnings.warn(
            f"coincident poles between lower entries {hit[0]} and {hit[1]}; "
            f"shifting b_{hit[1]} by 1e-6",
            RuntimeWarning,
            stacklevel=3,
        )
        params = _perturbed(params, max(hit))
    raise CoincidentPoleError("could not separate coincident poles by perturbation")


def _signed_log_gamma(x: np.ndarray | float):
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        return sp.gammaln(x), sp.gammasgn(x)


def _residue_terms(params: HParams, poles):
    """(log|coef|, sign) of residues of Theta at each simple left pole."""
    s0 = np.array([p[0] for p in poles])
    js = np.array([p[1] for p in poles])
    ks = np.array([p[2] for p in poles], dtype=float)
    logc = -sp.gammaln(ks + 1)
    sign = np.where(ks % 2 == 0, 1.0, -1.0)
    for i, (b, B) in enumerate(params.lower):
        if i < params.m:
            mask = js == i
            logc = logc - np.where(mask, math.log(B), 0.0)
            arg = b + B * s0
            lg, sg = _signed_log_gamma(np.where(mask, 1.0, arg))
            logc = logc + np.where(mask, 0.0, lg)
            sign = sign * np.where(mask, 1.0, sg)
        else:
            lg, sg = _signed_log_gamma(1 - b - B * s0)
            logc = logc - lg
            sign = sign * sg
    for i, (a, A) in enumerate(params.upper):
        if i < params.n:
            lg, sg = _signed_log_gamma(1 - a - A * s0)
        else:
            lg, sg = _signed_log_gamma(a + A * s0)
            lg = -lg
        logc = logc + lg
        sign = sign * sg
    # 1/Gamma at a pole of a denominator gamma -> zero residue
    sign = np.where(np.isfinite(logc), sign, 0.0)
    logc = np.where(np.isfinite(logc), logc, -np.inf)
    return s0, logc, sign


def fox_h_series(
    params: HParams,
    z: float,
    max_terms: int = 400,
    rtol: float = 1e-14,
    on_coincident: str = "raise",
    full_output: bool = False,
):
    """Sum the residue series of the left poles (power series around z = 0).

    Converges for every ``z`` when ``sum(B) > sum(A)``; when the two sums are
    equal it converges only inside a finite radius.  The returned error bound
    combines the size of the neglected tail with floating-point cancellation
    among the summed terms.
    """
    z = float(z)
    if z < 0:
        raise ValueError("series route needs z >= 0")
    if params.m == 0:
        return HValue(0.0, 0.0) if full_output else 0.0
    horizon = max(1, max_terms // params.m)
    params = resolve_coincidences(params, horizon, on_coincident)
    poles = _left_poles(params, horizon)[:max_terms]
    s0, logc, sign = _residue_terms(params, poles)
    if z == 0.0:
        if np.any((s0 > 0) & (sign != 0)):
            raise SeriesDivergenceError("kernel has a positive left pole; H(0) is unbounded")
        val = float(np.sum(sign[s0 == 0] * np.exp(logc[s0 == 0])))
        return HValue(val, 0.0) if full_output else val
    if params.mu < 0:
        raise SeriesDivergenceError("residue series diverges: sum(B) < sum(A)")
    logt = logc - s0 * math.log(z)
    terms = sign * np.exp(np.minimum(logt, 700.0))
    if np.any(logt > 700):
        raise SeriesDivergenceError("residue terms overflow; argument outside the series domain")
    partial = np.cumsum(terms)
    total = float(partial[-1])
    mags = np.abs(terms)
    tail = float(mags[-min(5, mags.size):].max())
    biggest = float(mags.max()) if mags.size else 0.0
    err = tail + 8 * np.finfo(float).eps * biggest * math.sqrt(mags.size)
    if tail > max(rtol * abs(total), 1e-300) and mags.size >= 8 and mags[-1] >= mags[mags.size // 2]:
        raise SeriesDivergenceError("residue terms are not decreasing; z outside the convergence domain")
    return HValue(total, err) if full_output else total


def leading_residues(params: HParams, count: int = 1, on_coincident: str = "perturb"):
    """Leading small-z terms ``sum coef_k * z**(-s_k)`` as (exponent, coef) pairs.

    The exponent returned is ``-s_k`` so that ``H(z) ~ sum coef * z**exponent``.
    """
    if params.m == 0:
        return []
    params = resolve_coincidences(params, count + 1, on_coincident)
    poles = _left_poles(params, count + 1)[:count]
    s0, logc, sign = _residue_terms(params, poles)
    return [(float(-s), float(sg * math.exp(lc))) for s, lc, sg in zip(s0, logc, sign) if sg != 0]


def small_argument_terms(params: HParams, on_coincident: str = "perturb"):
    """Residue terms ``(exponent, coef)`` with ``H(z) ~ sum coef * z**exponent`` as z -> 0.

    Every left pole up to the largest first pole of each m-group entry is
    kept, so that perturbed coincident pairs always appear together and
    their large opposite-sign coefficients cancel.
    """
    if params.m == 0:
        return []
    firsts = [b / B for b, B in params.lower[: params.m]]
    top = max(firsts)
    horizon = max(int(math.floor(top * B - b)) for b, B in params.lower[: params.m]) + 2
    params = resolve_coincidences(params, horizon, on_coincident)
    cut = top + 1e-4
    poles = [p for p in _left_poles(params, horizon) if -p[0] <= cut]
    s0, logc, sign = _residue_terms(params, poles)
    return [(float(-s), float(sg * math.exp(lc))) for s, lc, sg in zip(s0, logc, sign) if sg != 0]


# ---------------------------------------------------------------------------
# bivariate contour quadrature


def _bivariate_center(params: BivariateHParams) -> tuple[np.ndarray, float]:
    G, h = params.constraints()
    norms = np.linalg.norm(G, axis=1) if G.size else np.zeros(0)
    box = 40.0
    if G.size == 0:
        return np.zeros(2), box
    A_ub = np.hstack([G, norms[:, None]])
    res = optimize.linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=A_ub,
        b_ub=h,
        bounds=[(-box, box), (-box, box), (0, None)],
        method="highs",
    )
    if not res.success or res.x[2] <= 1e-12:
        raise ContourError("no admissible product contour for the bivariate kernel")
    return res.x[:2], float(res.x[2])


def _bivariate_abscissae(params, lx, ly, policy):
    G, h = params.constraints()
    if policy.rule == "explicit":
        c = np.asarray(policy.offset, dtype=float)
        if G.size and np.any(G @ c >= h):
            raise ContourError(f"explicit abscissae {tuple(c)} violate pole separation")
        return c
    center, radius = _bivariate_center(params)
    if policy.rule == "midpoint":
        return center
    probe = np.array([[0, 0], [0.3, 0], [0, 0.3], [0.3, 0.3], [0.3, -0.3], [1.0, 0], [0, 1.0]])

    norms = np.linalg.norm(G, axis=1) if G.size else None

    def score(c):
        # stay well clear of every pole family: peaks next to a pole line
        # cost far more nodes than the magnitude they save
        if G.size and np.any(G @ c >= h - 0.3 * radius * norms):
            return 1e300
        u = c[0] + 1j * probe[:, 0]
        v = c[1] + 1j * probe[:, 1]
        with np.errstate(all="ignore"):
            val = (
                params.outer.log_factor(u, v)
                + params.inner1.log_kernel(u)
                + params.inner2.log_kernel(v)
                - u * lx
                - v * ly
            ).real
        val = np.where(np.isnan(val), np.inf, val)
        return float(val.max())

    res = optimize.minimize(score, center, method="Nelder-Mead", options={"xatol": 1e-4, "fatol": 1e-6, "maxiter": 400})
    best = res.x if res.fun < score(center) else center
    # keep a sane distance from the nearest pole family
    if G.size:
        slack = (h - G @ best) / np.linalg.norm(G, axis=1)
        if slack.min() < 0.02 * radius:
            lam = 0.5
            best = center + lam * (best - center)
    return best


def _bivariate_box(params, c, lx, ly, rtol):
    """Half-lengths (T1, T2) outside which the integrand is negligible."""
    T = 4.0
    peak = None
    for _ in range(12):
        tau = np.linspace(-T, T, 81)
        om = np.linspace(0.0, T, 41)
        with np.errstate(all="ignore"):
            ell = params.log_integrand(c[0] + 1j * tau, c[1] + 1j * om, lx, ly).real
        ell = np.where(np.isnan(ell), -np.inf, ell)
        peak = float(ell.max()) if peak is None else max(peak, float(ell.max()))
        cut = peak + math.log(rtol) - 9.0
        edge = max(ell[0, :].max(), ell[-1, :].max(), ell[:, -1].max())
        if edge < cut:
            mask = ell > cut
            t1 = np.abs(tau[mask.any(axis=1)]).max()
            t2 = om[mask.any(axis=0)].max()
            step1 = tau[1] - tau[0]
            step2 = om[1] - om[0]
            return float(t1 + 2 * step1), float(t2 + 2 * step2)
        T *= 1.6
    raise ContourError("bivariate integrand does not decay within the scan range")


def _composite(T_lo, T_hi, panels, nodes):
    x, w = _gauss(nodes)
    edges = np.linspace(T_lo, T_hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return t, wt


def fox_h_bivariate(
    params: BivariateHParams,
    z1: float,
    z2: float,
    policy: ContourPolicy = DEFAULT_POLICY,
    full_output: bool = False,
):
    """Evaluate a bivariate Fox H-function at ``(z1, z2)``, both positive.

    The double Mellin-Barnes integral is taken over a product of vertical
    lines and integrated on a tensor Gauss-Legendre grid whose panel count
    doubles until two successive estimates agree.
    """
    z1, z2 = float(z1), float(z2)
    if not (z1 > 0 and z2 > 0):
        raise ValueError("bivariate arguments must be positive")
    # x**s y**t with s = -u, t = -v
    lx, ly = math.log(z1), math.log(z2)
    c = _bivariate_abscissae(params, lx, ly, policy)
    if policy.T is None:
        T1, T2 = _bivariate_box(params, c, lx, ly, policy.rtol)
    else:
        T1 = T2 = float(policy.T)
    # one oscillation period of x**s (resp. y**t) per 12-node panel at most
    h1 = min(1.0, 2 * math.pi / max(abs(lx), 1e-9))
    h2 = min(1.0, 2 * math.pi / max(abs(ly), 1e-9))
    nodes = 12
    used = 0
    cache = {}

    def estimate(q1, q2):
        nonlocal used
        if (q1, q2) not in cache:
            tau, w1 = _composite(-T1, T1, q1, nodes)
            om, w2 = _composite(0.0, T2, q2, nodes)
            used += tau.size * om.size
            with np.errstate(all="ignore"):
                g = np.exp(params.log_integrand(c[0] + 1j * tau, c[1] + 1j * om, lx, ly))
            g = np.where(np.isfinite(g), g, 0.0)
            norm = 2 / (4 * math.pi**2)
            cache[(q1, q2)] = (float(w1 @ g.real @ w2) * norm, float(w1 @ np.abs(g) @ w2) * norm)
        return cache[(q1, q2)]

    # refine each direction separately: the two oscillation rates differ
    p1 = max(4, math.ceil(2 * T1 / h1))
    p2 = max(2, math.ceil(T2 / h2))
    budget = policy.node_budget * 50
    while True:
        base, l1 = estimate(p1, p2)
        r1, _ = estimate(2 * p1, p2)
        r2, _ = estimate(p1, 2 * p2)
        tol = max(policy.rtol * abs(base), 64 * np.finfo(float).eps * l1, 1e-300)
        e1, e2 = abs(r1 - base), abs(r2 - base)
        if e1 <= tol and e2 <= tol:
            best = r1 if e1 <= e2 else r2
            if full_output:
                return HValue(best, max(e1, e2), 0.0, used)
            return best
        nxt = (2 * p1 if e1 > tol else p1, 2 * p2 if e2 > tol else p2)
        if used + 3 * nodes * nodes * nxt[0] * nxt[1] * 2 > budget:
            raise NonConvergenceError(
                "bivariate quadrature did not converge within the node budget",
                value=base,
                error=max(e1, e2),
            )
        p1, p2 = nxt
