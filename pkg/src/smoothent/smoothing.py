"""Exact smooth min- and max-entropy.

Two independent routes are provided:

* spectrum solvers (:func:`hmin_smooth`, :func:`hmax_smooth_unconditional`,
  :func:`hmax_threshold_upper`), which scale to n-fold products, and
* :func:`brute_force_smooth`, which works on an explicit table and serves as
  the oracle for the spectrum path.

Both only ever remove probability mass.  Adding mass to a table can neither
shrink a support nor lower max Q(x, y) / P_Y(y), so restricting the ball to
Q <= P loses nothing for either quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dist import JointDistribution
from .errors import ConditionalNotSupported, EpsilonOutOfRange, TooLarge
from .spectrum import Spectrum, merge_tol

BRUTE_FORCE_CAP = 10**6


@dataclass(frozen=True)
class SmoothEntropyResult:
    """A smooth entropy value and the smoothing that achieves it.

    For ``kind == "min"`` the witness holds ``cap_loglevel`` (= value) and
    ``removed_mass``: Q(x, y) = min(P_XY(x, y), 2**-cap_loglevel * P_Y(y)).
    For ``kind == "max"`` it holds ``support`` and ``removed_mass`` plus either
    per-level ``removals`` (spectrum route) or per-y ``keep_sets`` (oracle).

    On a pruned spectrum the dropped mass flatters both quantities, so the
    exact H_min lies in [value - uncertainty_bits, value] and the exact H_max
    in [value, value + uncertainty_bits].
    """

    kind: str
    epsilon: float
    value: float
    witness: dict = field(default_factory=dict)
    uncertainty_bits: float = 0.0

    @property
    def cap(self) -> float:
        """The cap level lambda as a conditional probability (min-entropy only)."""
        return 2.0 ** -self.witness["cap_loglevel"]

    @property
    def removed_mass(self) -> float:
        return self.witness["removed_mass"]

    def to_json(self) -> dict:
        witness = {}
        for key, val in self.witness.items():
            if key == "support":
                val = str(val) if val >= 2**53 else int(val)
            elif key == "removals":
                val = [[lvl, str(c) if c >= 2**53 else int(c)] for lvl, c in val]
            witness[key] = val
        return {
            "kind": self.kind,
            "epsilon": self.epsilon,
            "value_bits": self.value,
            "witness": witness,
            "uncertainty_bits": self.uncertainty_bits,
        }


def _check_epsilon(epsilon: float, pruned: float = 0.0) -> None:
    if not (0.0 <= epsilon < 1.0 - pruned):
        raise EpsilonOutOfRange(
            f"epsilon must lie in [0, {1.0 - pruned!r}), got {epsilon!r}"
        )


def _hmin_core(s: Spectrum, epsilon: float) -> tuple[float, float]:
    """Return (value, removed mass) for the water-filling cap on ``s``.

    cost(lam) = sum over levels with 2**-l > lam of mass * (1 - lam * 2**l).
    Scanning levels by increasing l, on the segment after level k the cost is
    M_k - lam * W_k, with W_k = sum mass_i 2**l_i kept in log2 form so that
    weights far beyond the double range stay usable.
    """
    lv = s.loglevel
    m = s.mass
    cum_mass = np.cumsum(m)
    with np.errstate(divide="ignore"):
        log_w = np.logaddexp2.accumulate(np.log2(m) + lv)
        excess = cum_mass - epsilon
        cand = np.where(excess > 0, log_w - np.log2(np.where(excess > 0, excess, 1.0)), np.inf)
    nxt = np.append(lv[1:], np.inf)
    ok = np.flatnonzero(cand <= nxt + 0.0)
    k = int(ok[0]) if len(ok) else len(lv) - 1
    mu = float(cand[k]) + 0.0
    below = lv[: k + 1]
    removed = math.fsum(m[: k + 1] * -np.expm1((below - mu) * math.log(2)))
    return mu, removed


def hmin_smooth(s: Spectrum, epsilon: float) -> SmoothEntropyResult:
    """H_min^eps of the source described by ``s``, exactly."""
    _check_epsilon(epsilon, s.pruned_mass)
    value, removed = _hmin_core(s, epsilon)
    unc = 0.0
    if s.pruned_mass > 0:
        # pruned mass may sit above the cap: the true value lies in [v(eps - p), v(eps)]
        lo, _ = _hmin_core(s, max(epsilon - s.pruned_mass, 0.0))
        unc = value - lo
    return SmoothEntropyResult(
        "min", epsilon, value,
        {"cap_loglevel": value, "removed_mass": removed},
        unc,
    )


def _hmax_core(s: Spectrum, epsilon: float) -> tuple[int, list, Fraction]:
    budget = Fraction(epsilon)
    removed_total = 0
    removed_mass = Fraction(0)
    removals = []
    for i in range(len(s) - 1, -1, -1):
        count = int(s.count[i])
        lm = Fraction(float(s.mass[i]))
        if lm <= budget:
            k = count
            cost = lm
        else:
            atom = lm / count
            k = math.floor(budget / atom)
            cost = k * atom
        if k:
            removals.append((float(s.loglevel[i]), k))
            removed_total += k
            removed_mass += cost
            budget -= cost
        if k < count:
            break
    return s.total_count - removed_total, removals, removed_mass


def hmax_smooth_unconditional(s: Spectrum, epsilon: float) -> SmoothEntropyResult:
    """H_max^eps for a trivial Y: drop the lightest atoms while the budget lasts.

    Atoms at one level are interchangeable, each carrying mass/count of the
    level (2**-loglevel up to rounding), so the greedy removes whole levels
    from the top and then as many atoms of the next level as fit.
    """
    if not s.unconditional:
        raise ConditionalNotSupported(
            "exact H_max on a conditional spectrum is not available; "
            "use hmax_threshold_upper or brute_force_smooth"
        )
    _check_epsilon(epsilon, s.pruned_mass)
    support, removals, removed = _hmax_core(s, epsilon)
    value = math.log2(support)
    unc = 0.0
    if s.pruned_mass > 0:
        # pruned atoms count as removed for free: the true value lies in [v(eps), v(eps - p)]
        hi_support, _, _ = _hmax_core(s, max(epsilon - s.pruned_mass, 0.0))
        unc = math.log2(hi_support) - value
    return SmoothEntropyResult(
        "max", epsilon, value,
        {"support": support, "removals": removals, "removed_mass": float(removed)},
        unc,
    )


def hmax_threshold_upper(s: Spectrum, epsilon: float) -> float:
    """Smallest level l* whose strict upper tail (plus pruned mass) is <= eps.

    Keeping only the pairs with P_{X|Y} >= 2**-l* leaves at most 2**l*
    values of x per y, so l* bounds H_max^eps from above, also when Y is
    nontrivial.
    """
    if not (0.0 <= epsilon < 1.0):
        raise EpsilonOutOfRange(f"epsilon must lie in [0, 1), got {epsilon!r}")
    m = s.mass
    # strict upper tail above each level, accumulated from the top
    above = np.concatenate((np.cumsum(m[::-1])[::-1][1:], [0.0])) + s.pruned_mass
    idx = np.flatnonzero(above <= epsilon)
    return float(s.loglevel[idx[0]])


def brute_force_smooth(j: JointDistribution, epsilon: float) -> tuple[SmoothEntropyResult, SmoothEntropyResult]:
    """Oracle (H_min^eps, H_max^eps) computed directly on the explicit table."""
    if j.x_size * j.y_size > BRUTE_FORCE_CAP:
        raise TooLarge(f"table has {j.x_size * j.y_size} cells (cap {BRUTE_FORCE_CAP})")
    if not (0.0 <= epsilon < 1.0):
        raise EpsilonOutOfRange(f"epsilon must lie in [0, 1), got {epsilon!r}")
    return _brute_min(j, epsilon), _brute_max(j, epsilon)


def _brute_min(j: JointDistribution, epsilon: float) -> SmoothEntropyResult:
    p = j.p
    py = np.broadcast_to(j.p_y, p.shape)
    mask = p > 0
    vals, marg = p[mask], py[mask]
    ratio = vals / marg
    order = np.argsort(-ratio, kind="stable")
    vals, marg, ratio = vals[order], marg[order], ratio[order]
    cum_p = np.cumsum(vals)
    cum_y = np.cumsum(marg)
    nxt = np.append(ratio[1:], 0.0)
    # capping the k+1 largest ratios at lam removes cum_p[k] - lam * cum_y[k];
    # the first breakpoint where that lam stays above the next ratio is optimal
    live = cum_p > epsilon
    cand = np.where(live, (cum_p - epsilon) / cum_y, -np.inf)
    k = int(np.flatnonzero(live & (cand >= nxt))[0])
    lam = float(cand[k])
    value = -math.log2(lam) + 0.0
    removed = math.fsum(np.maximum(vals - lam * marg, 0.0))
    return SmoothEntropyResult("min", epsilon, value, {"cap_loglevel": value, "removed_mass": removed})


def _brute_max(j: JointDistribution, epsilon: float) -> SmoothEntropyResult:
    p = j.p
    order = np.argsort(-p, axis=0, kind="stable")
    srt = np.take_along_axis(p, order, axis=0)
    # tails[k, y] = mass of column y outside its k largest entries
    tails = np.vstack((np.cumsum(srt[::-1], axis=0)[::-1], np.zeros((1, j.y_size))))
    best = None
    for k in range(1, j.x_size + 1):
        cost = math.fsum(tails[k])
        if cost <= epsilon:
            best = k
            break
    k = best
    keep_sets = []
    for y in range(j.y_size):
        col = order[:k, y]
        keep_sets.append(sorted(int(x) for x in col if p[x, y] > 0))
    support = max(len(ks) for ks in keep_sets)
    return SmoothEntropyResult(
        "max", epsilon, math.log2(support),
        {"support": support, "keep_sets": keep_sets, "removed_mass": math.fsum(tails[k])},
    )


def reconstruct_q(j: JointDistribution, result: SmoothEntropyResult) -> np.ndarray:
    """Rebuild the smoothed function Q on the explicit table ``j`` from a witness."""
    p = j.p
    if result.kind == "min":
        lam = 2.0 ** -result.witness["cap_loglevel"]
        return np.minimum(p, lam * np.broadcast_to(j.p_y, p.shape))
    if "keep_sets" in result.witness:
        q = np.zeros_like(p)
        for y, keep in enumerate(result.witness["keep_sets"]):
            q[keep, y] = p[keep, y]
        return q
    # spectrum witness: remove the stated number of atoms at each level
    q = p.copy()
    flat = q.reshape(-1)
    with np.errstate(divide="ignore"):
        cond_levels = -np.log2(np.where(p > 0, j.conditional, 0.0)).reshape(-1)
    for level, k in result.witness["removals"]:
        idx = np.flatnonzero((p.reshape(-1) > 0) & (np.abs(cond_levels - level) <= merge_tol(level)))
        flat[idx[:k]] = 0.0
    return q


def value_of_q(j: JointDistribution, q: np.ndarray, kind: str) -> float:
    """Evaluate the min- or max-entropy objective of a smoothed table ``q``."""
    live = j.p_y > 0
    if kind == "min":
        return -math.log2(float(np.max(q[:, live] / j.p_y[live])))
    return math.log2(int(np.max(np.count_nonzero(q[:, live] > 0, axis=0))))
