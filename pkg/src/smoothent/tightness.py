"""The one-heavy-symbol family and numerical checks that the bounds are nearly tight.

P(0) = 1/2 and P(x) = 1/(2(|X|-1)) otherwise.  A sequence with z zeros has
-log2 P = z + (n - z)(1 + log2(|X|-1)), so the n-fold spectrum has exactly
n + 1 levels whose masses are the Binomial(n, 1/2) probabilities of z.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import binom
from .dist import JointDistribution, unconditional
from .errors import AlphabetTooSmall, PreconditionViolated
from .smoothing import hmax_smooth_unconditional, hmin_smooth
from .spectrum import Spectrum, int_to_float


@dataclass(frozen=True)
class TightnessFamily:
    alphabet_size: int
    distribution: JointDistribution
    entropy_bits: float

    @property
    def spread(self) -> float:
        """log2(|X| - 1), the level gap per zero."""
        return math.log2(self.alphabet_size - 1)


def family(alphabet_size: int) -> TightnessFamily:
    if alphabet_size < 3:
        raise AlphabetTooSmall(f"the family needs |X| >= 3, got {alphabet_size}")
    rest = 1.0 / (2 * (alphabet_size - 1))
    j = unconditional([0.5] + [rest] * (alphabet_size - 1))
    return TightnessFamily(alphabet_size, j, 1.0 + 0.5 * math.log2(alphabet_size - 1))


def level_of_zeros(alphabet_size: int, n: int, z):
    """-log2 P_{X^n}(x) for a sequence with z zeros."""
    return z + (n - z) * (1.0 + math.log2(alphabet_size - 1))


def family_spectrum(alphabet_size: int, n: int) -> Spectrum:
    """The exact (n+1)-level spectrum of the n-fold family, built from binomial masses."""
    fam = family(alphabet_size)
    z = np.arange(n, -1, -1)  # descending zeros = ascending level
    levels = level_of_zeros(alphabet_size, n, z.astype(np.float64))
    masses = binom.pmf(n, z, 0.5)
    # count for z zeros is C(n, z) (|X|-1)^(n-z); walk z = 0..n by recurrence, then reverse
    counts = []
    binom_c, other = 1, (alphabet_size - 1) ** n
    for k in range(n + 1):
        counts.append(binom_c * other)
        binom_c = binom_c * (n - k) // (k + 1)
        other //= alphabet_size - 1
    counts.reverse()
    total = alphabet_size**n
    count_arr = np.array(counts, dtype=object) if total >= 2**62 else np.array(counts, dtype=np.int64)
    weights = np.array([int_to_float(c) for c in counts])
    return Spectrum(
        levels, masses, weights, count_arr,
        source_entropy=n * fam.entropy_bits, unconditional=True, _total_count=total,
    )


@dataclass(frozen=True)
class TailCheck:
    side: str
    threshold_zeros: int
    exact_tail: float
    lower_bound: float

    @property
    def holds(self) -> bool:
        return self.exact_tail > self.lower_bound


@dataclass(frozen=True)
class TailTightnessReport:
    alphabet_size: int
    n: int
    delta: float
    upper: TailCheck
    lower: TailCheck

    @property
    def holds(self) -> bool:
        return self.upper.holds and self.lower.holds

    def to_json(self) -> dict:
        out = asdict(self)
        out["upper"]["holds"] = self.upper.holds
        out["lower"]["holds"] = self.lower.holds
        out["holds"] = self.holds
        return out


def tail_lower_bound(alphabet_size: int, n: int, delta: float) -> float:
    spread = math.log2(alphabet_size - 1)
    return 2.0 ** (-12.0 * n * delta * delta / spread**2) / 110.0


def thm3_check(alphabet_size: int, n: int, delta: float) -> TailTightnessReport:
    """Exact tails of -log2 P_{X^n} around nH versus the claimed lower bound.

    The upper event -log2 P >= n(H + delta) is z <= n/2 - n delta / log2(|X|-1);
    the lower event -log2 P <= n(H - delta) is z >= n/2 + n delta / log2(|X|-1).
    """
    if alphabet_size < 3:
        raise AlphabetTooSmall(f"the family needs |X| >= 3, got {alphabet_size}")
    spread = math.log2(alphabet_size - 1)
    if n < 12 or delta < 0 or delta > spread / 12 + 1e-12:
        raise PreconditionViolated(
            f"need n >= 12 and 0 <= delta <= log2(|X|-1)/12 = {spread / 12}, got n={n}, delta={delta}"
        )
    shift = n * delta / spread
    # thresholds that are integers up to rounding belong to the (inclusive) event
    hi_zeros = math.ceil(n / 2 + shift - 1e-9)
    lo_zeros = math.floor(n / 2 - shift + 1e-9)
    bound = tail_lower_bound(alphabet_size, n, delta)
    lower = TailCheck("lower", hi_zeros, binom.tail_sum(n, hi_zeros, 0.5, "above"), bound)
    upper = TailCheck("upper", lo_zeros, binom.tail_sum(n, lo_zeros, 0.5, "below"), bound)
    return TailTightnessReport(alphabet_size, n, delta, upper, lower)


def rate_epsilon(alphabet_size: int, n: int, delta: float) -> float:
    spread = math.log2(alphabet_size - 1)
    return 2.0 ** (-48.0 * n * delta * delta / spread**2) / 880.0


@dataclass(frozen=True)
class RateTightnessReport:
    alphabet_size: int
    n: int
    delta: float
    epsilon: float
    entropy_bits: float
    hmax_rate: float
    hmin_rate: float

    @property
    def holds_max(self) -> bool:
        return self.hmax_rate >= self.entropy_bits + self.delta

    @property
    def holds_min(self) -> bool:
        return self.hmin_rate <= self.entropy_bits - self.delta

    @property
    def holds(self) -> bool:
        return self.holds_max and self.holds_min

    def to_json(self) -> dict:
        out = asdict(self)
        out.update(holds_max=self.holds_max, holds_min=self.holds_min, holds=self.holds)
        return out


def thm4_check(alphabet_size: int, n: int, delta: float, spectrum: Spectrum | None = None) -> RateTightnessReport:
    """Exact smooth entropy rates of the n-fold family against H +- delta."""
    if alphabet_size < 3:
        raise AlphabetTooSmall(f"the family needs |X| >= 3, got {alphabet_size}")
    spread = math.log2(alphabet_size - 1)
    if n < 1200 or delta < 0 or delta > spread / 480 + 1e-12:
        raise PreconditionViolated(
            f"need n >= 1200 and 0 <= delta <= log2(|X|-1)/480 = {spread / 480}, got n={n}, delta={delta}"
        )
    eps = rate_epsilon(alphabet_size, n, delta)
    s = spectrum if spectrum is not None else family_spectrum(alphabet_size, n)
    hmax = hmax_smooth_unconditional(s, eps).value
    hmin = hmin_smooth(s, eps).value
    h = family(alphabet_size).entropy_bits
    return RateTightnessReport(alphabet_size, n, delta, eps, h, hmax / n, hmin / n)
