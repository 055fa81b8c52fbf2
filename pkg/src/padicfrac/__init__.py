"""Fractional diffusion on towers of p-adic field extensions.

Exact spectra, hypersingular kernel actions, jump-measure and heat-measure
computations for the power-of-norm multiplier operator on cylindrical
functions over an increasing tower of finite extensions of Q_p.
"""

from .padic import (
    BallCoset,
    ExtElement,
    Level,
    PadicScalar,
    PrecisionError,
    base_level,
    character_chi,
    chi_of_angle,
    enumerate_ball_quotient,
    frac_part,
    pairing_angle,
    pairing_character,
    project_T,
    trace,
    vp,
)

__version__ = "0.1.0"

__all__ = [
    "BallCoset",
    "ExtElement",
    "Level",
    "PadicScalar",
    "PrecisionError",
    "base_level",
    "character_chi",
    "chi_of_angle",
    "enumerate_ball_quotient",
    "frac_part",
    "pairing_angle",
    "pairing_character",
    "project_T",
    "trace",
    "vp",
    "__version__",
]
