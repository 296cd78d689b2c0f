"""Finite joint distributions P_XY, their marginals and conditional entropy."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyMatrix, NegativeEntry, NotNormalized, ShapeMismatch, SmoothEntError

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise SmoothEntError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.size:
                raise SmoothEntError("label count does not match alphabet size")
            if len(set(labels)) != len(labels):
                raise SmoothEntError("alphabet labels must be distinct")
            object.__setattr__(self, "labels", labels)

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability table p[x, y]; immutable once constructed.

    Use :func:`validate_joint` to build one from untrusted input.
    """

    x_alphabet: Alphabet
    y_alphabet: Alphabet
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64, copy=True)
        if p.shape != (self.x_alphabet.size, self.y_alphabet.size):
            raise ShapeMismatch(
                f"table shape {p.shape} does not match alphabets "
                f"({self.x_alphabet.size}, {self.y_alphabet.size})"
            )
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def x_size(self) -> int:
        return self.x_alphabet.size

    @property
    def y_size(self) -> int:
        return self.y_alphabet.size

    @cached_property
    def p_y(self) -> np.ndarray:
        out = self.p.sum(axis=0)
        out.setflags(write=False)
        return out

    @cached_property
    def p_x(self) -> np.ndarray:
        out = self.p.sum(axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def conditional(self) -> np.ndarray:
        """P_{X|Y}(x, y); columns with P_Y(y) = 0 are left at zero."""
        py = self.p_y
        out = np.zeros_like(self.p)
        live = py > 0
        out[:, live] = self.p[:, live] / py[live]
        out.setflags(write=False)
        return out

    @property
    def is_unconditional(self) -> bool:
        """True when P_Y is a point mass, so H(X|Y) = H(X) and weights equal counts."""
        return int(np.count_nonzero(self.p_y > 0)) == 1

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return (
            self.x_alphabet == other.x_alphabet
            and self.y_alphabet == other.y_alphabet
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None

    def to_json(self) -> dict:
        out = {"x_size": self.x_size, "y_size": self.y_size, "p": self.p.tolist()}
        if self.x_alphabet.labels is not None:
            out["x_labels"] = list(self.x_alphabet.labels)
        if self.y_alphabet.labels is not None:
            out["y_labels"] = list(self.y_alphabet.labels)
        return out


@dataclass(frozen=True)
class FactorSequence:
    """Independent, possibly distinct, factors P_{X_1Y_1} ... P_{X_nY_n}."""

    factors: tuple[JointDistribution, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise SmoothEntError("a factor sequence needs at least one factor")
        shape = (factors[0].x_size, factors[0].y_size)
        for f in factors[1:]:
            if (f.x_size, f.y_size) != shape:
                raise ShapeMismatch("all factors must share alphabet sizes")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def repeat(cls, j: JointDistribution, n: int) -> FactorSequence:
        if n < 1:
            raise SmoothEntError(f"n must be >= 1, got {n}")
        return cls((j,) * n)

    def __len__(self):
        return len(self.factors)

    @property
    def x_size(self) -> int:
        return self.factors[0].x_size

    def entropy(self) -> float:
        """H(X^n|Y^n) = sum of the per-factor conditional entropies."""
        return math.fsum(conditional_entropy(f) for f in self.factors)


def validate_joint(raw, x_labels=None, y_labels=None) -> JointDistribution:
    """Check a raw x-by-y table and wrap it; never renormalizes."""
    try:
        p = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SmoothEntError(f"table is not a rectangular numeric matrix: {exc}") from None
    if p.size == 0:
        raise EmptyMatrix("probability table is empty")
    if p.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d table, got {p.ndim} dimensions")
    if not np.all(np.isfinite(p)):
        raise SmoothEntError("table contains non-finite entries")
    if np.any(p < 0):
        i, k = np.argwhere(p < 0)[0]
        raise NegativeEntry(f"entry ({i}, {k}) = {p[i, k]} is negative")
    total = math.fsum(p.ravel())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"entries sum to {total!r}, not 1")
    return JointDistribution(
        Alphabet(p.shape[0], x_labels), Alphabet(p.shape[1], y_labels), p
    )


def unconditional(probs: Sequence[float]) -> JointDistribution:
    """Joint with a trivial Y (|Y| = 1) from a probability vector."""
    return validate_joint(np.asarray(probs, dtype=np.float64).reshape(-1, 1))


def conditional_entropy(j: JointDistribution) -> float:
    """H(X|Y) in bits, with 0 log 0 = 0."""
    mask = j.p > 0
    cond = j.conditional[mask]
    return math.fsum(-(j.p[mask] * np.log2(cond)))


def shannon_entropy(probs) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    probs = probs[probs > 0]
    return math.fsum(-(probs * np.log2(probs)))


def product_joint(factors: Sequence[JointDistribution] | FactorSequence) -> JointDistribution:
    """Explicit table of P_{X_1Y_1} x ... x P_{X_nY_n} over X^n x Y^n.

    Row index encodes (x_1, ..., x_n) and column index (y_1, ..., y_n), both
    with x_1 / y_1 as the most significant digit.
    """
    if isinstance(factors, FactorSequence):
        factors = factors.factors
    if not factors:
        raise SmoothEntError("need at least one factor")
    p = factors[0].p
    for f in factors[1:]:
        p = np.kron(p, f.p)
    return JointDistribution(Alphabet(p.shape[0]), Alphabet(p.shape[1]), p)


def joint_from_json(obj: dict) -> JointDistribution:
    try:
        x_size = int(obj["x_size"])
        y_size = int(obj["y_size"])
        table = obj["p"]
    except (KeyError, TypeError) as exc:
        raise SmoothEntError(f"distribution JSON is missing a field: {exc}") from None
    j = validate_joint(table, obj.get("x_labels"), obj.get("y_labels"))
    if (j.x_size, j.y_size) != (x_size, y_size):
        raise ShapeMismatch(
            f"declared size ({x_size}, {y_size}) but table is {j.p.shape}"
        )
    return j


def load_joint(path: str | Path) -> JointDistribution:
    with open(path) as fh:
        return joint_from_json(json.load(fh))
