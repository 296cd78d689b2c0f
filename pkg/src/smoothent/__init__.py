"""Exact smooth min- and max-entropies of finite and n-fold product sources."""

from .dist import (
    Alphabet,
    FactorSequence,
    JointDistribution,
    conditional_entropy,
    load_joint,
    product_joint,
    unconditional,
    validate_joint,
)
from .smoothing import (
    SmoothEntropyResult,
    brute_force_smooth,
    hmax_smooth_unconditional,
    hmax_threshold_upper,
    hmin_smooth,
)
from .spectrum import Spectrum, convolve, from_factors, from_joint, power, tail_mass

__all__ = [
    "Alphabet", "FactorSequence", "JointDistribution", "Spectrum", "SmoothEntropyResult",
    "brute_force_smooth", "conditional_entropy", "convolve", "from_factors", "from_joint",
    "hmax_smooth_unconditional", "hmax_threshold_upper", "hmin_smooth", "load_joint",
    "power", "product_joint", "tail_mass", "unconditional", "validate_joint",
]
