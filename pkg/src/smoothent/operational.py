"""Source coding with side information and seeded randomness extraction on explicit tables.

The codec keeps, for every y, the atoms chosen by the optimal max-entropy
smoothing and gives each kept x one codeword that does not depend on y.
Codewords come from a greedy coloring of the graph joining two symbols that
are kept together for some y, so the decoder can always tell kept symbols
apart.  When the coloring needs too many colors for the target length, the
codec falls back to random binning at a slightly longer length.

The extractor is Toeplitz hashing over GF(2), evaluated by full enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import JointDistribution
from .errors import EpsilonOutOfRange, SeedLengthMismatch, ShapeMismatch, SmoothEntError, TooLarge
from .smoothing import BRUTE_FORCE_CAP, SmoothEntropyResult, brute_force_smooth

EXPLICIT_CAP = 10**4
SEED_TRIALS = 1000
_BATCH = 64


@dataclass(frozen=True)
class CodecSpec:
    keep_sets: tuple[tuple[int, ...], ...]
    length_bits: int
    encoder: tuple[int, ...]  # codeword of every x; dropped-everywhere x get 0
    index_maps: tuple[dict, ...] = field(repr=False)  # per y: codeword -> decoded x
    method: str = "coloring"
    witness_removed_mass: float = 0.0

    def encode(self, x: int) -> int:
        return self.encoder[x]

    def decode(self, codeword: int, y: int) -> int | None:
        return self.index_maps[y].get(codeword)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "length_bits": self.length_bits,
            "keep_sets": [list(k) for k in self.keep_sets],
            "encoder": list(self.encoder),
            "witness_removed_mass": self.witness_removed_mass,
        }


def _check_explicit(j: JointDistribution, cap: int = EXPLICIT_CAP) -> None:
    if j.x_size * j.y_size > min(cap, BRUTE_FORCE_CAP):
        raise TooLarge(f"table has {j.x_size * j.y_size} cells (cap {cap})")


def _bits_for(count: int) -> int:
    return 0 if count <= 1 else (count - 1).bit_length()


def _greedy_coloring(keep_sets, x_size: int) -> list[int]:
    # symbols kept for many y first: they have the most neighbours
    member = [[] for _ in range(x_size)]
    for y, keep in enumerate(keep_sets):
        for x in keep:
            member[x].append(y)
    order = sorted(range(x_size), key=lambda x: (-len(member[x]), x))
    used = [set() for _ in keep_sets]
    color = [0] * x_size
    for x in order:
        if not member[x]:
            continue
        taken = set().union(*(used[y] for y in member[x]))
        c = 0
        while c in taken:
            c += 1
        color[x] = c
        for y in member[x]:
            used[y].add(c)
    return color


def _index_maps(keep_sets, encoder, weights) -> tuple[dict, ...]:
    """Per y, map each codeword to the kept x of largest P(x, y) carrying it."""
    maps = []
    for y, keep in enumerate(keep_sets):
        m: dict = {}
        for x in sorted(keep, key=lambda x: (-weights[x, y], x)):
            m.setdefault(encoder[x], x)
        maps.append(m)
    return tuple(maps)


def _codec(j, keep_sets, encoder, length, method, removed) -> CodecSpec:
    keep = tuple(tuple(k) for k in keep_sets)
    enc = tuple(int(c) for c in encoder)
    return CodecSpec(keep, length, enc, _index_maps(keep, enc, j.p), method, removed)


def codec_length_bound(hmax_prime: float, epsilon: float, epsilon_prime: float) -> float:
    return hmax_prime + math.log2(1.0 / (epsilon - epsilon_prime)) + 1.0


def build_typical_codec(j: JointDistribution, epsilon_prime: float, epsilon: float | None = None,
                        master_seed: int = 0, witness: SmoothEntropyResult | None = None) -> CodecSpec:
    """Codec whose decoder succeeds on every pair kept by the H_max^{eps'} smoothing.

    When ``epsilon`` is given and the colored codec is longer than
    H_max^{eps'} + log2(1/(eps - eps')) + 1, a binned codec of length
    ceil(H_max^{eps'} + log2(1/(eps - eps'))) is searched for instead, and
    the first seed whose exact error is <= eps is used.
    """
    _check_explicit(j)
    if not (0.0 <= epsilon_prime < 1.0):
        raise EpsilonOutOfRange(f"epsilon_prime must lie in [0, 1), got {epsilon_prime!r}")
    if epsilon is not None and not (epsilon_prime < epsilon < 1.0):
        raise EpsilonOutOfRange(f"need epsilon_prime < epsilon < 1, got {epsilon_prime!r}, {epsilon!r}")
    hmax = witness if witness is not None else brute_force_smooth(j, epsilon_prime)[1]
    keep_sets = hmax.witness["keep_sets"]
    removed = hmax.removed_mass
    color = _greedy_coloring(keep_sets, j.x_size)
    length = _bits_for(max(color) + 1)
    colored = _codec(j, keep_sets, color, length, "coloring", removed)
    if epsilon is None or length <= codec_length_bound(hmax.value, epsilon, epsilon_prime) + 1e-9:
        return colored
    bin_len = math.ceil(hmax.value + math.log2(1.0 / (epsilon - epsilon_prime)) - 1e-9)
    for i in range(SEED_TRIALS):
        rng = np.random.default_rng([master_seed, i])
        bins = rng.integers(0, 2**bin_len, size=j.x_size)
        c = _codec(j, keep_sets, bins, bin_len, "binning", removed)
        if codec_error_prob(j, c) <= epsilon:
            return c
    return colored


def codec_error_prob(j: JointDistribution, c: CodecSpec) -> float:
    """Exact Pr[d(e(X), Y) != X], running the decoder on every pair."""
    if len(c.encoder) != j.x_size or len(c.index_maps) != j.y_size:
        raise ShapeMismatch("codec was built for a table of a different shape")
    p = j.p
    errs = []
    for y in range(j.y_size):
        m = c.index_maps[y]
        for x in np.flatnonzero(p[:, y] > 0):
            if m.get(c.encoder[x]) != x:
                errs.append(p[x, y])
    return math.fsum(errs)


@dataclass(frozen=True)
class ExtractorSeed:
    input_bits: int
    output_bits: int
    seed_bits: tuple[int, ...]

    def __post_init__(self):
        if not (1 <= self.output_bits <= self.input_bits):
            raise SmoothEntError(f"need 1 <= l <= m, got l={self.output_bits}, m={self.input_bits}")
        if len(self.seed_bits) != self.input_bits + self.output_bits - 1:
            raise SeedLengthMismatch(
                f"seed has {len(self.seed_bits)} bits, expected {self.input_bits + self.output_bits - 1}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """The l x m Toeplitz matrix T[i, k] = seed[i - k + m - 1]."""
        m, l = self.input_bits, self.output_bits
        i = np.arange(l)[:, None]
        k = np.arange(m)[None, :]
        return np.asarray(self.seed_bits, dtype=np.int64)[i - k + m - 1]

    def to_json(self) -> dict:
        return {"input_bits": self.input_bits, "output_bits": self.output_bits,
                "seed": "".join(map(str, self.seed_bits))}


def build_extractor(m: int, l: int, seed) -> ExtractorSeed:
    raw = list(seed)
    if any(b not in (0, 1, "0", "1") for b in raw):
        raise SmoothEntError("seed must consist of bits")
    bits = tuple(int(b) for b in raw)
    return ExtractorSeed(m, l, bits)


def input_bits(x_size: int) -> int:
    return max(1, _bits_for(x_size))


def _symbol_bits(x_size: int, m: int) -> np.ndarray:
    x = np.arange(x_size)
    return (x[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1


def _distances(j: JointDistribution, mats: np.ndarray) -> np.ndarray:
    """Exact distances for a stack of l x m matrices."""
    s, l, m = mats.shape
    xb = _symbol_bits(j.x_size, m)
    out_bits = np.einsum("xk,sik->sxi", xb, mats) & 1
    u = out_bits @ (1 << np.arange(l - 1, -1, -1))  # s x |X|
    ny = j.y_size
    idx = (np.arange(s)[:, None, None] * (2**l * ny) + u[:, :, None] * ny + np.arange(ny)[None, None, :])
    joint = np.bincount(idx.ravel(), weights=np.broadcast_to(j.p, (s,) + j.p.shape).ravel(),
                        minlength=s * 2**l * ny).reshape(s, 2**l, ny)
    diff = np.abs(joint - 2.0**-l * j.p_y[None, None, :])
    return 0.5 * diff.reshape(s, -1).sum(axis=1)


def extractor_distance(j: JointDistribution, e: ExtractorSeed) -> float:
    """(1/2) sum_{u, y} |P_{h(X)Y}(u, y) - 2**-l P_Y(y)|, by enumeration."""
    _check_explicit(j)
    if e.input_bits < _bits_for(j.x_size):
        raise SmoothEntError(f"{e.input_bits} input bits cannot index {j.x_size} symbols")
    return float(_distances(j, e.matrix[None])[0])


@dataclass(frozen=True)
class SeedSearch:
    output_bits: int
    best_seed: ExtractorSeed | None
    best_distance: float
    seeds_tried: int
    seeds_within: int


def seed_for(master_seed: int, index: int, length: int) -> tuple[int, ...]:
    rng = np.random.default_rng([master_seed, index])
    return tuple(int(b) for b in rng.integers(0, 2, size=length))


def search_seeds(j: JointDistribution, l: int, epsilon: float, trials: int = SEED_TRIALS,
                 master_seed: int = 0) -> SeedSearch:
    """Evaluate ``trials`` seeds derived from ``master_seed`` and keep the best."""
    _check_explicit(j)
    m = input_bits(j.x_size)
    seeds = [build_extractor(m, l, seed_for(master_seed, i, m + l - 1)) for i in range(trials)]
    dist = np.concatenate([
        _distances(j, np.stack([s.matrix for s in seeds[k:k + _BATCH]]))
        for k in range(0, trials, _BATCH)
    ])
    best = int(np.argmin(dist))
    return SeedSearch(l, seeds[best], float(dist[best]), trials, int(np.count_nonzero(dist <= epsilon)))


@dataclass
class PropReport:
    epsilon: float
    epsilon_prime: float
    hmax_eps: float
    hmax_eps_prime: float
    codec_method: str
    codec_length: int
    codec_error: float
    codec_length_bound: float
    hmin_eps: float
    hmin_eps_prime: float
    extract_length: int | None
    extract_distance: float | None
    extract_seed: str | None
    extract_status: str  # found | inconclusive | skipped

    @property
    def compression_holds(self) -> bool:
        return (self.codec_error <= self.epsilon + 1e-12
                and self.hmax_eps <= self.codec_length + 1e-9
                and self.codec_length <= self.codec_length_bound + 1e-9)

    @property
    def holds(self) -> bool:
        # an inconclusive seed search is not a violation
        return self.compression_holds

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out.update(compression_holds=self.compression_holds, holds=self.holds)
        return out


def prop_check(j: JointDistribution, epsilon: float, epsilon_prime: float, master_seed: int = 0,
               trials: int = SEED_TRIALS) -> PropReport:
    """Build both constructions and evaluate them exactly against the smooth entropies."""
    if not (0.0 <= epsilon_prime < epsilon < 1.0):
        raise EpsilonOutOfRange(f"need 0 <= eps' < eps < 1, got eps'={epsilon_prime!r}, eps={epsilon!r}")
    _check_explicit(j)
    hmin_e, hmax_e = brute_force_smooth(j, epsilon)
    hmin_p, hmax_p = brute_force_smooth(j, epsilon_prime)
    codec = build_typical_codec(j, epsilon_prime, epsilon, master_seed, witness=hmax_p)
    err = codec_error_prob(j, codec)

    l = math.floor(hmin_p.value - 2.0 * math.log2(1.0 / (epsilon - epsilon_prime)) + 1e-9)
    m = input_bits(j.x_size)
    length = dist = seed = None
    status = "skipped"
    if 1 <= l <= m:
        found = search_seeds(j, l, epsilon, trials, master_seed)
        length, dist = l, found.best_distance
        seed = found.best_seed.to_json()["seed"]
        status = "found" if found.best_distance <= epsilon else "inconclusive"
    return PropReport(
        epsilon, epsilon_prime, hmax_e.value, hmax_p.value,
        codec.method, codec.length_bits, err, codec_length_bound(hmax_p.value, epsilon, epsilon_prime),
        hmin_e.value, hmin_p.value, length, dist, seed, status,
    )
