"""Binomial probabilities, binary KL divergence and checks of binomial estimates.

Everything is evaluated in the log domain so that n up to 10**6 is safe.
An exact rational path (:func:`exact_pmf`) is kept for small n and serves
as the oracle for the floating-point one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np
from scipy.stats import binom as _binom

from .errors import DomainError, PreconditionViolated

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BinomialQuery:
    n: int
    k: int
    p: float

    def __post_init__(self):
        if self.n < 1 or not (0 <= self.k <= self.n) or not (0.0 <= self.p <= 1.0):
            raise DomainError(f"invalid binomial query n={self.n}, k={self.k}, p={self.p}")


def log_pmf(n: int, k, p: float):
    """log2 B_p(k|n); -inf where the probability is zero.  ``k`` may be an array."""
    if n < 1 or not (0.0 <= p <= 1.0):
        raise DomainError(f"need n >= 1 and p in [0, 1], got n={n}, p={p}")
    k_arr = np.asarray(k)
    if np.any((k_arr < 0) | (k_arr > n)):
        raise DomainError("k must lie in [0, n]")
    direct = _binom.pmf(k_arr, n, p)
    with np.errstate(divide="ignore"):
        # logpmf drifts by ~1e-9 near n = 10**6; the pmf itself stays accurate
        # wherever it is a normal double, so only the deep tails use logpmf
        out = np.where(direct > 1e-300, np.log2(np.maximum(direct, 1e-300)), _binom.logpmf(k_arr, n, p) / LN2)
    return float(out) if np.ndim(out) == 0 else out


def pmf(n: int, k, p: float):
    if n < 1 or not (0.0 <= p <= 1.0):
        raise DomainError(f"need n >= 1 and p in [0, 1], got n={n}, p={p}")
    k_arr = np.asarray(k)
    if np.any((k_arr < 0) | (k_arr > n)):
        raise DomainError("k must lie in [0, n]")
    out = _binom.pmf(k_arr, n, p)
    return float(out) if np.ndim(out) == 0 else out


def exact_pmf(n: int, k: int, p) -> Fraction:
    """B_p(k|n) as an exact rational (p is taken as the exact value of its float)."""
    p = Fraction(p)
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def tail_sum(n: int, k0: int, p: float, side: str = "above") -> float:
    """sum_{k >= k0} B_p(k|n) (``above``) or sum_{k <= k0} (``below``), smallest terms first."""
    if side == "above":
        ks = np.arange(max(k0, 0), n + 1)
    elif side == "below":
        ks = np.arange(0, min(k0, n) + 1)
    else:
        raise DomainError(f"side must be 'above' or 'below', got {side!r}")
    if len(ks) == 0:
        return 0.0
    terms = np.sort(pmf(n, ks, p))
    return math.fsum(terms)


def kl_bernoulli(q: float, p: float) -> float:
    """Binary relative entropy D(q||p) in bits, with 0 log 0 = 0."""
    if not (0.0 <= q <= 1.0 and 0.0 <= p <= 1.0):
        raise DomainError(f"q and p must lie in [0, 1], got q={q}, p={p}")
    out = 0.0
    for a, b in ((q, p), (1.0 - q, 1.0 - p)):
        if a > 0:
            if b == 0:
                return math.inf
            out += a * math.log2(a / b)
    return out


def quadratic_bound(p: float, eps: float) -> float:
    """eps^2 / (2 ln 2 p (1 - p)), the claimed upper bound on D(p + eps || p)."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return eps * eps / (2.0 * LN2 * p * (1.0 - p))


class CheckRow(NamedTuple):
    check: str
    params: str
    lhs: float
    rhs: float
    holds: bool


def check_kl_quadratic(ps=None, epss=None) -> list[CheckRow]:
    """Compare D(p + eps || p) with the quadratic bound over a grid.

    The comparison is reported, not asserted: the quadratic is only a
    second-order Taylor estimate and falls below D once the positive third
    derivative kicks in, e.g. at (p, eps) = (1/2, 1/4).
    """
    ps = np.arange(0.5, 0.96, 0.05) if ps is None else ps
    epss = np.linspace(0.0, 0.5, 51) if epss is None else epss
    rows = []
    for p in ps:
        p = float(p)
        for e in epss:
            e = float(e)
            if p + e >= 1.0:
                continue
            lhs = kl_bernoulli(p + e, p)
            rhs = quadratic_bound(p, e)
            rows.append(CheckRow("kl_quadratic", f"p={p:.6g};eps={e:.6g}", lhs, rhs, lhs <= rhs))
    return rows


def stirling_ratio_log(n: int) -> mpmath.mpf:
    """ln(n! e^n / (sqrt(2 pi n) n^n)) in high precision."""
    n = mpmath.mpf(n)
    return mpmath.loggamma(n + 1) + n - mpmath.log(2 * mpmath.pi * n) / 2 - n * mpmath.log(n)


def check_stirling(n_max: int = 10**4, dps: int = 40) -> list[CheckRow]:
    """1/(12n+1) < ln(n! e^n / (sqrt(2 pi n) n^n)) < 1/(12n) for n = 1..n_max."""
    rows = []
    with mpmath.workdps(dps):
        for n in range(1, n_max + 1):
            mid = stirling_ratio_log(n)
            lo = mpmath.mpf(1) / (12 * n + 1)
            hi = mpmath.mpf(1) / (12 * n)
            rows.append(CheckRow("stirling", f"n={n}", float(lo), float(mid), bool(lo < mid)))
            rows.append(CheckRow("stirling", f"n={n}", float(mid), float(hi), bool(mid < hi)))
    return rows


class Sandwich(NamedTuple):
    lower: float
    upper: float


def sandwich_bounds(n: int, k: int, p: float) -> Sandwich:
    """Constants bracketing B_p(k|n) sqrt(2 pi k (n-k) / n) 2^{n D(k/n || p)}."""
    if not (0 < k < n):
        raise DomainError(f"need 0 < k < n, got k={k}, n={n}")
    return Sandwich(math.exp(-1.0 / (12 * k) - 1.0 / (12 * (n - k))), 1.0)


def _kl_interior(q: np.ndarray, p: float) -> np.ndarray:
    """Vectorized D(q||p) for 0 < q < 1 and 0 < p < 1."""
    return q * np.log2(q / p) + (1 - q) * np.log2((1 - q) / (1 - p))


def sandwich_middle_log2(n: int, k, p: float):
    """log2 of the sandwiched quantity, built from log_pmf and the KL divergence."""
    k = np.asarray(k)
    return log_pmf(n, k, p) + 0.5 * np.log2(2 * np.pi * k * (n - k) / n) + n * _kl_interior(k / n, p)


def check_sandwich(n_max: int = 1000, ps=None) -> list[CheckRow]:
    """lower < middle < 1 for all 0 < k < n <= n_max and p on a grid; compared in log2."""
    ps = np.round(np.arange(0.05, 0.951, 0.05), 10) if ps is None else ps
    rows = []
    for n in range(2, n_max + 1):
        k = np.arange(1, n)
        lower = (-1.0 / (12 * k) - 1.0 / (12 * (n - k))) / LN2
        for p in ps:
            p = float(p)
            mid = sandwich_middle_log2(n, k, p)
            ok = (lower < mid) & (mid < 0.0)
            bad = np.flatnonzero(~ok)
            # one summary row per (n, p); offending k values are listed explicitly
            rows.append(CheckRow(
                "binomial_sandwich", f"n={n};p={p:.6g};k=1..{n - 1}",
                float(np.max(lower - mid)), float(np.max(mid)), bool(ok.all()),
            ))
            for i in bad:
                rows.append(CheckRow("binomial_sandwich", f"n={n};p={p:.6g};k={int(k[i])}",
                                     float(lower[i]), float(mid[i]), False))
    return rows


def corollary_lower(n: int, k: int, p: float) -> float:
    """e^{-1/(6(n-k))} sqrt(n / (2 pi k (n-k))) e^{-n (k/n - p)^2 / (2 p (1-p))}."""
    if not (0 < k < n) or not (0.0 < p < 1.0):
        raise DomainError(f"need 0 < k < n and 0 < p < 1, got k={k}, n={n}, p={p}")
    return math.exp(
        -1.0 / (6 * (n - k))
        + 0.5 * math.log(n / (2 * math.pi * k * (n - k)))
        - n * (k / n - p) ** 2 / (2 * p * (1 - p))
    )


def check_corollary(n_max: int = 200, ps=(0.5, 0.6, 0.75, 0.9)) -> list[CheckRow]:
    """B_p(k|n) > corollary_lower(n, k, p) for pn <= k < n; reported, not asserted."""
    rows = []
    for n in range(2, n_max + 1):
        for p in ps:
            for k in range(max(1, _ceil(p * n)), n):
                lhs = corollary_lower(n, k, p)
                rhs = float(pmf(n, k, p))
                rows.append(CheckRow("binomial_corollary", f"n={n};k={k};p={p:.6g}", lhs, rhs, lhs < rhs))
    return rows


def _ceil(x: float) -> int:
    # p * n for decimal p like 0.6 may land a hair above an integer
    return math.ceil(round(x, 9))


class PartialSum(NamedTuple):
    exact: float
    bound: float


def partial_sum_lower(n: int, s: int, p: float) -> PartialSum:
    """Window sum of B_p(k|n) over k = ceil(pn)+s .. ceil(pn)+2s-1 and its lower bound."""
    if s < 1 or not (0.5 <= p <= 1.0) or p * n + 3 * s > n + 1e-9:
        raise PreconditionViolated(f"need s >= 1, p in [1/2, 1], pn + 3s <= n (n={n}, s={s}, p={p})")
    start = _ceil(p * n) + s
    ks = np.arange(start, start + s)
    exact = math.fsum(np.sort(pmf(n, ks, p)))
    bound = s / (2 * math.sqrt(n)) * math.exp(-2.0 * s * s / (n * p * (1 - p)))
    return PartialSum(exact, bound)


def check_partial_sums(n_max: int = 2000, ps=(0.5, 0.6, 0.75, 0.9)) -> list[CheckRow]:
    """exact window sum > bound on every admissible (n, s, p) with n <= n_max.

    Window sums come from suffix sums of the pmf accumulated from the far tail,
    which keeps relative accuracy in the upper tail where all windows lie.
    """
    rows = []
    for p in ps:
        for n in range(1, n_max + 1):
            s_max = int(math.floor((n - p * n) / 3 + 1e-9))
            if s_max < 1:
                continue
            pm = pmf(n, np.arange(n + 1), p)
            suffix = np.concatenate((np.cumsum(pm[::-1])[::-1], [0.0]))
            c = _ceil(p * n)
            s = np.arange(1, s_max + 1)
            exact = suffix[c + s] - suffix[c + 2 * s]
            bound = s / (2 * math.sqrt(n)) * np.exp(-2.0 * s * s / (n * p * (1 - p)))
            ok = exact > bound
            rows.append(CheckRow(
                "window_sums", f"n={n};p={p:.6g};s=1..{s_max}",
                float(np.min(exact / bound)), 1.0, bool(ok.all()),
            ))
            for i in np.flatnonzero(~ok):
                rows.append(CheckRow("window_sums", f"n={n};p={p:.6g};s={int(s[i])}",
                                     float(exact[i]), float(bound[i]), False))
    return rows
