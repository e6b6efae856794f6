"""Inverted max-stable distributions and their conditional extremes."""
from .exponent import (ExponentFamily, make_family, parse_family, eta, v, v1,
                       spectral_density, atom_masses, validate)
from .ims import (ImsDistribution, joint_survivor, conditional_survivor,
                  conditional_quantile_exact)
from .norming import norming_for, limit_law_for
from .numerics import RandomStream

__version__ = "0.1.0"

__all__ = [
    "ExponentFamily", "make_family", "parse_family", "eta", "v", "v1",
    "spectral_density", "atom_masses", "validate", "ImsDistribution",
    "joint_survivor", "conditional_survivor", "conditional_quantile_exact",
    "norming_for", "limit_law_for", "RandomStream", "__version__",
]
