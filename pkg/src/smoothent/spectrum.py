"""Exact spectra of -log2 P_{X|Y}: per-level mass, weight and atom count.

A spectrum stores, for every distinct value l of -log2 P_{X|Y}(x, y) over
pairs with P_XY(x, y) > 0,

* ``mass``   -- sum of P_XY(x, y) over the pairs at that level,
* ``weight`` -- sum of P_Y(y) over the same pairs (so mass = weight * 2**-l),
* ``count``  -- the number of pairs, as an exact integer.

Independent products correspond to convolution of spectra, which is what
keeps n-fold quantities tractable: the number of levels grows polynomially
in n while the number of atoms grows like |X|^n.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .dist import FactorSequence, JointDistribution, conditional_entropy
from .errors import SmoothEntError, SpectrumOverflow

MERGE_RTOL = 1e-9
DEFAULT_CAP = 10**7
_INT64_SAFE = 2**62


def merge_tol(level) -> np.ndarray | float:
    return MERGE_RTOL * np.maximum(1.0, np.abs(level))


class LevelEntry(NamedTuple):
    loglevel: float
    mass: float
    weight: float
    count: int


class TailMass(NamedTuple):
    mass: float
    uncertainty: float


def int_to_float(n: int) -> float:
    try:
        return float(n)
    except OverflowError:
        return math.inf


@dataclass(frozen=True, eq=False)
class Spectrum:
    loglevel: np.ndarray
    mass: np.ndarray
    weight: np.ndarray
    count: np.ndarray  # int64 while totals fit, object (Python int) beyond
    pruned_mass: float = 0.0
    source_entropy: float = 0.0
    unconditional: bool = False
    _total_count: int = field(default=-1, repr=False)

    def __post_init__(self):
        for name in ("loglevel", "mass", "weight"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        count = np.asarray(self.count)
        if count.dtype != object and count.dtype != np.int64:
            count = count.astype(np.int64)
        count.setflags(write=False)
        object.__setattr__(self, "count", count)
        if not (len(self.loglevel) == len(self.mass) == len(self.weight) == len(count)):
            raise SmoothEntError("spectrum columns differ in length")
        if self._total_count < 0:
            total = int(count.sum()) if count.dtype == np.int64 else sum(count.tolist())
            object.__setattr__(self, "_total_count", total)

    def __len__(self):
        return len(self.loglevel)

    @property
    def entries(self) -> list[LevelEntry]:
        return [
            LevelEntry(float(l), float(m), float(w), int(c))
            for l, m, w, c in zip(self.loglevel, self.mass, self.weight, self.count)
        ]

    @property
    def total_count(self) -> int:
        return self._total_count

    @property
    def total_mass(self) -> float:
        return math.fsum(self.mass)

    @property
    def max_loglevel(self) -> float:
        return float(self.loglevel[-1]) if len(self) else 0.0

    def mean(self) -> float:
        """sum of mass * loglevel, i.e. the entropy carried by the kept entries."""
        return math.fsum(self.mass * self.loglevel)

    def counts(self) -> list[int]:
        return [int(c) for c in self.count]


def point_spectrum() -> Spectrum:
    """Identity for :func:`convolve`: one level at 0 with unit mass."""
    return Spectrum(
        np.zeros(1), np.ones(1), np.ones(1), np.ones(1, dtype=np.int64),
        unconditional=True, _total_count=1,
    )


def _group_starts(levels: np.ndarray) -> np.ndarray:
    if len(levels) == 0:
        return np.zeros(0, dtype=np.intp)
    gaps = np.diff(levels) > merge_tol(levels[1:])
    return np.concatenate(([0], np.flatnonzero(gaps) + 1))


def _aggregate(levels, masses, weights, counts, *, int_counts: bool, **meta) -> Spectrum:
    order = np.argsort(levels, kind="stable")
    levels, masses, weights, counts = levels[order], masses[order], weights[order], counts[order]
    starts = _group_starts(levels)
    mass = np.add.reduceat(masses, starts) if len(starts) else masses
    with np.errstate(over="ignore", invalid="ignore"):
        weight = np.add.reduceat(weights, starts) if len(starts) else weights
    count = np.add.reduceat(counts, starts) if len(starts) else counts
    # representative level: mass-weighted mean of the merged group
    lm = np.add.reduceat(masses * levels, starts) if len(starts) else levels
    with np.errstate(invalid="ignore", divide="ignore"):
        rep = np.where(mass > 0, lm / np.where(mass > 0, mass, 1.0), levels[starts])
    rep = np.maximum(rep, 0.0)
    if not int_counts:
        count = count.astype(object)
    return Spectrum(rep, mass, weight, count, **meta)


def _prune(s: Spectrum, floor: float) -> Spectrum:
    if floor <= 0:
        return s
    drop = s.mass < floor
    if not drop.any():
        return s
    keep = ~drop
    return Spectrum(
        s.loglevel[keep], s.mass[keep], s.weight[keep], s.count[keep],
        pruned_mass=s.pruned_mass + math.fsum(s.mass[drop]),
        source_entropy=s.source_entropy,
        unconditional=s.unconditional,
    )


def from_joint(j: JointDistribution) -> Spectrum:
    """Group the pairs of ``j`` by their conditional probability."""
    mask = j.p > 0
    cond = j.conditional[mask]
    levels = np.maximum(-np.log2(cond), 0.0)
    masses = j.p[mask]
    weights = np.broadcast_to(j.p_y, j.p.shape)[mask]
    counts = np.ones(len(levels), dtype=np.int64)
    return _aggregate(
        levels, masses, weights.astype(np.float64), counts,
        int_counts=True,
        source_entropy=conditional_entropy(j),
        unconditional=j.is_unconditional,
    )


def convolve(a: Spectrum, b: Spectrum, *, prune_floor: float = 0.0, cap: int = DEFAULT_CAP) -> Spectrum:
    """Spectrum of the independent product of the sources of ``a`` and ``b``."""
    projected = len(a) * len(b)
    if projected > cap:
        raise SpectrumOverflow(
            f"convolution would produce {projected} raw entries (cap {cap}); "
            "raise the cap or enable pruning"
        )
    levels = np.add.outer(a.loglevel, b.loglevel).ravel()
    masses = np.multiply.outer(a.mass, b.mass).ravel()
    with np.errstate(over="ignore"):
        # weights overflow to inf once |X|^n passes the double range; solvers never read them
        weights = np.multiply.outer(a.weight, b.weight).ravel()
    total = a.total_count * b.total_count
    int_counts = total < _INT64_SAFE
    if int_counts:
        counts = np.multiply.outer(a.count.astype(np.int64), b.count.astype(np.int64)).ravel()
    else:
        counts = np.multiply.outer(a.count.astype(object), b.count.astype(object)).ravel()
    out = _aggregate(
        levels, masses, weights, counts,
        int_counts=int_counts,
        pruned_mass=a.pruned_mass + b.pruned_mass,
        source_entropy=a.source_entropy + b.source_entropy,
        unconditional=a.unconditional and b.unconditional,
    )
    return _prune(out, prune_floor)


def power(s: Spectrum, n: int, *, prune_floor: float = 0.0, cap: int = DEFAULT_CAP) -> Spectrum:
    """n-fold self-convolution by binary exponentiation."""
    if n < 1:
        raise SmoothEntError(f"power needs n >= 1, got {n}")
    result = None
    base = s
    while True:
        if n & 1:
            result = base if result is None else convolve(result, base, prune_floor=prune_floor, cap=cap)
        n >>= 1
        if not n:
            return result
        base = convolve(base, base, prune_floor=prune_floor, cap=cap)


def from_factors(fs: FactorSequence | Iterable[JointDistribution], *, prune_floor: float = 0.0,
                 cap: int = DEFAULT_CAP) -> Spectrum:
    """Left fold of :func:`convolve` over the factors (identical ones are not special-cased)."""
    factors = fs.factors if isinstance(fs, FactorSequence) else tuple(fs)
    acc = from_joint(factors[0])
    for f in factors[1:]:
        acc = convolve(acc, from_joint(f), prune_floor=prune_floor, cap=cap)
    return acc


def tail_mass(s: Spectrum, threshold: float, side: str = "above") -> TailMass:
    """Mass at loglevels >= threshold (``above``) or <= threshold (``below``).

    Both sides are inclusive; a level within merge tolerance of the
    threshold counts as equal to it.
    """
    tol = merge_tol(threshold)
    if side == "above":
        sel = s.loglevel >= threshold - tol
    elif side == "below":
        sel = s.loglevel <= threshold + tol
    else:
        raise SmoothEntError(f"side must be 'above' or 'below', got {side!r}")
    return TailMass(math.fsum(np.sort(s.mass[sel])), s.pruned_mass)


def write_csv(s: Spectrum, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["loglevel", "mass", "weight", "count"])
    for e in s.entries:
        w.writerow([f"{e.loglevel:.17g}", f"{e.mass:.17g}", f"{e.weight:.17g}", str(e.count)])


@dataclass(frozen=True, eq=False)
class LatticeSpectrum:
    """n-fold distribution of -log2 P_{X|Y} with every factor level rounded onto a dyadic grid.

    Rounding each factor level up (down) can only move the sum up (down), so
    upper (lower) tails read off this lattice are rigorous upper bounds on the
    exact tails.  Used where the exact spectrum has too many levels.
    """

    mass: np.ndarray  # mass[k] sits at level k * step
    step: float
    rounding: str

    def tail_upper_bound(self, threshold: float, side: str) -> float:
        want = "up" if side == "above" else "down"
        if self.rounding != want:
            raise SmoothEntError(f"a lattice rounded {self.rounding} cannot bound the {side} tail")
        levels = np.arange(len(self.mass)) * self.step
        tol = merge_tol(threshold)
        sel = levels >= threshold - tol if side == "above" else levels <= threshold + tol
        return min(1.0, math.fsum(np.sort(self.mass[sel])))


def lattice_power(s: Spectrum, n: int, rounding: str, max_bins: int = 2**16) -> LatticeSpectrum:
    """Round the levels of ``s`` to multiples of 2**-k and take the n-fold convolution.

    k is the largest value keeping n * max_level * 2**k within ``max_bins``.
    The factor has only len(s) occupied bins, so each of the n steps is a
    handful of shifted, scaled adds of nonnegative arrays: no cancellation,
    and the result is accurate to a few ulps per bin.
    """
    if rounding not in ("up", "down"):
        raise SmoothEntError(f"rounding must be 'up' or 'down', got {rounding!r}")
    if n < 1:
        raise SmoothEntError(f"lattice_power needs n >= 1, got {n}")
    top = max(s.max_loglevel, 1.0)
    k = 0
    while n * top * 2 ** (k + 1) <= max_bins and k < 40:
        k += 1
    step = 2.0**-k
    scaled = s.loglevel / step
    idx = (np.ceil(scaled) if rounding == "up" else np.floor(scaled)).astype(np.int64)
    base = np.bincount(idx, weights=s.mass)
    shifts = np.flatnonzero(base)
    acc = base
    for _ in range(n - 1):
        out = np.zeros(len(acc) + shifts[-1])
        for sh in shifts:
            out[sh:sh + len(acc)] += base[sh] * acc
        acc = out
    return LatticeSpectrum(acc, step, rounding)
