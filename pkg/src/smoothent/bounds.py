"""Closed-form smooth-entropy and tail bounds, exact MGFs and Chernoff optimization.

Logs are base 2 at the API boundary.  ``L`` below stands for
log2(|X| + 3), the scale that appears in every exponent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .dist import FactorSequence, JointDistribution, conditional_entropy
from .errors import DomainError, SmoothEntError, TOutOfRange
from .spectrum import Spectrum, from_joint, tail_mass

LN2 = math.log(2.0)

BOUND_NAMES = (
    "hmax_upper", "hmin_lower", "upper_tail", "lower_tail",
    "chernoff_opt_upper", "chernoff_opt_lower",
)


@dataclass(frozen=True)
class BoundReport:
    name: str
    n: int
    delta: float
    alphabet_size: int
    epsilon: float
    bound_value: float
    exact_value: float | None = None
    t_star: float | None = None

    @property
    def is_lower_bound(self) -> bool:
        return self.name == "hmin_lower"

    @property
    def holds(self) -> bool | None:
        if self.exact_value is None:
            return None
        if self.is_lower_bound:
            return self.exact_value >= self.bound_value - 1e-12
        return self.exact_value <= self.bound_value + 1e-12

    def to_json(self) -> dict:
        return asdict(self)


def _scale(alphabet_size: int) -> float:
    return math.log2(alphabet_size + 3)


def epsilon_of_delta(n: int, delta: float, alphabet_size: int) -> float:
    """eps = 2**(-n delta^2 / (2 L^2))."""
    if n < 1 or delta < 0 or alphabet_size < 1:
        raise DomainError(f"need n >= 1, delta >= 0, |X| >= 1 (got {n}, {delta}, {alphabet_size})")
    return 2.0 ** (-n * delta * delta / (2.0 * _scale(alphabet_size) ** 2))


def delta_of_epsilon(n: int, epsilon: float, alphabet_size: int) -> float:
    if n < 1 or alphabet_size < 1 or not (0 < epsilon <= 1):
        raise DomainError(f"need n >= 1, |X| >= 1, 0 < eps <= 1 (got {n}, {alphabet_size}, {epsilon})")
    return math.sqrt(2.0 * _scale(alphabet_size) ** 2 * -math.log2(epsilon) / n)


class MgfLog(NamedTuple):
    exact: float
    residual: float


def _levels(j: JointDistribution) -> tuple[np.ndarray, np.ndarray]:
    mask = j.p > 0
    return j.p[mask], -np.log2(j.conditional[mask])


def log2_mgf(j: JointDistribution, t: float) -> float:
    """log2 E[P_{X|Y}(x, y)**-t] for any real t (no range restriction)."""
    probs, lv = _levels(j)
    a = np.log2(probs) + t * lv
    top = a.max()
    return float(top + math.log2(math.fsum(np.exp2(a - top))))


def mgf_log(j: JointDistribution, t: float) -> MgfLog:
    """Exact log2 E[P_{X|Y}^-t] and the slack left by the quadratic bound

    t H(X|Y) + t^2 L^2 / 2, valid for |t| <= 1 / L.
    """
    scale = _scale(j.x_size)
    if abs(t) > 1.0 / scale + 1e-15:
        raise TOutOfRange(f"|t| = {abs(t)} exceeds 1/log2(|X|+3) = {1.0 / scale}")
    exact = log2_mgf(j, t)
    bound = t * conditional_entropy(j) + 0.5 * t * t * scale * scale
    return MgfLog(exact, bound - exact)


def centered_log2_mgf(j: JointDistribution, t: float) -> float:
    """log2 E[2**(t * gamma)] with gamma = -log2 P_{X|Y} - H(X|Y)."""
    return log2_mgf(j, t) - t * conditional_entropy(j)


def _factors(source, n: int | None) -> tuple[JointDistribution, ...]:
    if isinstance(source, FactorSequence):
        if n is not None and n != len(source):
            raise SmoothEntError(f"n = {n} does not match {len(source)} factors")
        return source.factors
    if n is None or n < 1:
        raise DomainError("n >= 1 is required for a single joint")
    return (source,) * n


def chernoff_exponent(source, n: int | None, delta: float, t: float, side: str = "upper",
                      mgf: str = "exact") -> float:
    """log2 of the Markov bound at tilt t >= 0 for the chosen side.

    ``mgf="exact"`` uses the true per-factor MGFs; ``mgf="quadratic"`` replaces
    each by its quadratic bound t^2 L^2 / 2.
    """
    factors = _factors(source, n)
    count = len(factors)
    signed = t if side == "upper" else -t
    if mgf == "quadratic":
        scale = _scale(factors[0].x_size)
        return count * 0.5 * t * t * scale * scale - t * count * delta
    uniq: dict[int, float] = {}
    total = []
    for f in factors:
        key = id(f)
        if key not in uniq:
            uniq[key] = centered_log2_mgf(f, signed)
        total.append(uniq[key])
    return math.fsum(total) - t * count * delta


def chernoff_optimize(source, n: int | None, delta: float, side: str = "upper",
                      t_range: str = "admissible") -> BoundReport:
    """Minimize the exact Chernoff exponent over the tilt t.

    The exponent is convex in t (a log-MGF minus a linear term), so a bounded
    scalar search is reliable; the closed-form tilt delta / L^2 and both
    interval ends are always evaluated as well.
    """
    if side not in ("upper", "lower"):
        raise SmoothEntError(f"side must be 'upper' or 'lower', got {side!r}")
    factors = _factors(source, n)
    count = len(factors)
    size = factors[0].x_size
    if delta < 0 or delta > math.log2(size) + 1e-12:
        raise DomainError(f"delta must lie in [0, log2 |X|] = [0, {math.log2(size)}], got {delta}")
    scale = _scale(size)
    hi = 1.0 / scale if t_range == "admissible" else 64.0 / scale

    seq = FactorSequence(factors)
    cands = {0.0: 0.0, hi: chernoff_exponent(seq, None, delta, hi, side)}
    t0 = min(delta / scale**2, hi)
    cands[t0] = chernoff_exponent(seq, None, delta, t0, side)
    if delta > 0:
        res = minimize_scalar(
            lambda t: chernoff_exponent(seq, None, delta, t, side),
            bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12},
        )
        cands[float(res.x)] = float(res.fun)
    t_star = min(cands, key=cands.get)
    value = min(1.0, 2.0 ** cands[t_star])
    return BoundReport(
        f"chernoff_opt_{side}", count, delta, size,
        epsilon_of_delta(count, delta, size), value, None, t_star,
    )


def tail_bound_reports(source, n: int | None, delta: float, spectrum: Spectrum | None = None) -> list[BoundReport]:
    """Closed-form tail bounds next to the exact spectrum tails (when given)."""
    factors = _factors(source, n)
    count = len(factors)
    size = factors[0].x_size
    eps = epsilon_of_delta(count, delta, size)
    out = []
    for side, name in (("above", "upper_tail"), ("below", "lower_tail")):
        exact = None
        if spectrum is not None:
            h = spectrum.source_entropy
            thr = h + count * delta if side == "above" else h - count * delta
            t = tail_mass(spectrum, thr, side)
            exact = t.mass + t.uncertainty
        out.append(BoundReport(name, count, delta, size, eps, eps, exact, None))
    return out


def smooth_entropy_bound_reports(h_total: float, n: int, delta: float, alphabet_size: int,
                     hmax: float | None = None, hmin: float | None = None) -> list[BoundReport]:
    eps = epsilon_of_delta(n, delta, alphabet_size)
    return [
        BoundReport("hmax_upper", n, delta, alphabet_size, eps, h_total + n * delta, hmax),
        BoundReport("hmin_lower", n, delta, alphabet_size, eps, h_total - n * delta, hmin),
    ]


# r_t(z) = z^t - t ln z - 1 and its properties


def r_t_eval(t: float, z):
    """r_t(z) = z**t - t ln(z) - 1, evaluated as expm1(t ln z) - t ln z."""
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise DomainError("r_t is defined for z > 0 only")
    v = t * np.log(z)
    out = np.expm1(v) - v
    return float(out) if out.ndim == 0 else out


class CheckRow(NamedTuple):
    check: str
    params: str
    lhs: float
    rhs: float
    holds: bool


def _rows(check, params, lhs, rhs, tol):
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    ok = lhs <= rhs + tol
    return [CheckRow(check, p, float(a), float(b), bool(h)) for p, a, b, h in zip(params, lhs, rhs, ok)]


def check_rt_monotone(ts=None, zs=None, tol: float = 1e-12) -> list[CheckRow]:
    """r_t is nondecreasing on [1, inf): r_t(z_i) <= r_t(z_{i+1}) + tol."""
    ts = np.linspace(-2, 2, 41) if ts is None else ts
    zs = np.geomspace(1.0, 1e6, 241) if zs is None else np.asarray(zs)
    rows = []
    for t in ts:
        r = r_t_eval(float(t), zs)
        params = [f"t={t:.6g};z1={a:.6g};z2={b:.6g}" for a, b in zip(zs[:-1], zs[1:])]
        rows += _rows("rt_monotone", params, r[:-1], r[1:], tol)
    return rows


def check_rt_reflection(ts=None, zs=None, tol: float = 1e-12) -> list[CheckRow]:
    """r_t(z) <= r_|t|(z + 1/z) on (0, 1e4]."""
    ts = np.linspace(-2, 2, 41) if ts is None else ts
    zs = np.geomspace(1e-4, 1e4, 161) if zs is None else np.asarray(zs)
    rows = []
    for t in ts:
        lhs = r_t_eval(float(t), zs)
        rhs = r_t_eval(abs(float(t)), zs + 1.0 / zs)
        params = [f"t={t:.6g};z={z:.6g}" for z in zs]
        rows += _rows("rt_reflection", params, lhs, rhs, tol)
    return rows


def check_rt_concave(ts=None, zs=None, rel_step: float = 0.01, tol: float = 1e-10) -> list[CheckRow]:
    """Second differences r(z-h) - 2 r(z) + r(z+h) <= tol on [4, 1e6] for |t| <= 1/2."""
    ts = np.linspace(-0.5, 0.5, 21) if ts is None else ts
    if zs is None:
        zs = np.geomspace(4.0 / (1 - rel_step), 1e6 / (1 + rel_step), 200)
    zs = np.asarray(zs)
    h = rel_step * zs
    rows = []
    for t in ts:
        t = float(t)
        d2 = r_t_eval(t, zs - h) - 2 * r_t_eval(t, zs) + r_t_eval(t, zs + h)
        params = [f"t={t:.6g};z={z:.6g};h={hh:.6g}" for z, hh in zip(zs, h)]
        rows += _rows("rt_concave", params, d2, np.zeros_like(d2), tol)
    return rows


def check_rt_quadratic(zs=None, fractions=None, tol: float = 1e-12) -> list[CheckRow]:
    """r_t(z) <= (1 - ln 2) log2(z)^2 t^2 for z > 1 and |t| <= 1/log2(z)."""
    zs = np.geomspace(1 + 1e-6, 1e6, 121) if zs is None else np.asarray(zs)
    fractions = np.linspace(-1, 1, 21) if fractions is None else fractions
    rows = []
    for z in zs:
        lz = math.log2(z)
        ts = np.asarray(fractions) / lz
        lhs = np.array([r_t_eval(float(t), z) for t in ts])
        rhs = (1 - LN2) * lz * lz * ts * ts
        params = [f"t={t:.6g};z={z:.10g}" for t in ts]
        rows += _rows("rt_quadratic", params, lhs, rhs, tol)
    return rows


def check_mgf_quadratic(j: JointDistribution, ts=None, tol: float = 1e-12) -> list[CheckRow]:
    """Exact log2 MGF against t H + t^2 L^2 / 2 over an admissible t grid."""
    scale = _scale(j.x_size)
    ts = np.linspace(-1, 1, 21) / scale if ts is None else ts
    h = conditional_entropy(j)
    lhs = [log2_mgf(j, float(t)) for t in ts]
    rhs = [float(t) * h + 0.5 * float(t) ** 2 * scale**2 for t in ts]
    return _rows("mgf_quadratic", [f"t={t:.6g}" for t in ts], lhs, rhs, tol)


def check_centered_mgf(j: JointDistribution, ts=None, tol: float = 1e-12) -> list[CheckRow]:
    scale = _scale(j.x_size)
    ts = np.linspace(-1, 1, 21) / scale if ts is None else ts
    lhs = [centered_log2_mgf(j, float(t)) for t in ts]
    rhs = [0.5 * float(t) ** 2 * scale**2 for t in ts]
    return _rows("centered_mgf", [f"t={t:.6g}" for t in ts], lhs, rhs, tol)
