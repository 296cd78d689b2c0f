"""Deterministic Monte Carlo estimates of the tails of -log2 P_{X^n|Y^n}.

Trials are split into fixed chunks; chunk i draws from its own stream
``default_rng([master_seed, i])``, so the hit count depends only on
(trials, master_seed, chunk) and never on how chunks are scheduled.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .dist import FactorSequence
from .errors import DomainError, SmoothEntError
from .spectrum import merge_tol

Z95 = float(norm.ppf(0.975))


def default_workers() -> int:
    """Worker count, capped by SMOOTHENT_THREADS when it is set."""
    env = os.environ.get("SMOOTHENT_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise SmoothEntError(f"SMOOTHENT_THREADS must be an integer, got {env!r}") from None
    return n


@dataclass(frozen=True)
class McConfig:
    trials: int
    master_seed: int = 0
    chunk: int = 10_000

    def __post_init__(self):
        if self.trials < 1 or self.chunk < 1:
            raise DomainError(f"trials and chunk must be positive, got {self.trials}, {self.chunk}")


@dataclass(frozen=True)
class McEstimate:
    n: int
    delta: float
    side: str
    trials: int
    hits: int
    estimate: float
    ci_lo: float
    ci_hi: float

    def contains(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi

    def to_json(self) -> dict:
        return dict(self.__dict__)


def wilson_interval(hits: int, trials: int, z: float = Z95) -> tuple[float, float]:
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return lo, hi


class _Sampler:
    """Inverse-CDF sampling of -log2 P_{X|Y} for each distinct factor."""

    def __init__(self, fs: FactorSequence):
        self.tables = {}
        self.keys = []
        for f in fs.factors:
            key = id(f)
            if key not in self.tables:
                flat = f.p.ravel()
                live = flat > 0
                levels = -np.log2(f.conditional.ravel()[live])
                cdf = np.cumsum(flat[live])
                self.tables[key] = (cdf / cdf[-1], levels)
            self.keys.append(key)

    def chunk_hits(self, seed, size: int, threshold: float, side: str) -> int:
        rng = np.random.default_rng(seed)
        total = np.zeros(size)
        for key in self.keys:
            cdf, levels = self.tables[key]
            idx = np.searchsorted(cdf, rng.random(size), side="right")
            total += levels[np.minimum(idx, len(levels) - 1)]
        tol = merge_tol(threshold)
        if side == "above":
            return int(np.count_nonzero(total >= threshold - tol))
        return int(np.count_nonzero(total <= threshold + tol))


def estimate_tail(fs: FactorSequence, delta: float, side: str, cfg: McConfig,
                  workers: int | None = None) -> McEstimate:
    """Fraction of sampled sequences with -log2 P >= H + n delta (or <= H - n delta)."""
    if side not in ("above", "below"):
        raise DomainError(f"side must be 'above' or 'below', got {side!r}")
    if delta < 0:
        raise DomainError(f"delta must be >= 0, got {delta}")
    n = len(fs)
    h = fs.entropy()
    threshold = h + n * delta if side == "above" else h - n * delta
    sampler = _Sampler(fs)
    sizes = [min(cfg.chunk, cfg.trials - s) for s in range(0, cfg.trials, cfg.chunk)]
    jobs = [([cfg.master_seed, i], size) for i, size in enumerate(sizes)]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1:
        hits = sum(sampler.chunk_hits(s, k, threshold, side) for s, k in jobs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda job: sampler.chunk_hits(job[0], job[1], threshold, side), jobs))
    lo, hi = wilson_interval(hits, cfg.trials)
    return McEstimate(n, delta, side, cfg.trials, hits, hits / cfg.trials, lo, hi)


CSV_FIELDS = ("n", "delta", "side", "trials", "hits", "estimate", "ci_lo", "ci_hi")


def write_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.n, repr(r.delta), r.side, r.trials, r.hits, repr(r.estimate), repr(r.ci_lo), repr(r.ci_hi)])
