"""Numerical laboratory for global regularity estimates near the Levi-flat
annulus of worm domains."""
from .geometry import PhiProfile, WormConfig, levi_coefficients, pseudoconvexity_scan
from .operators import GridSpec, OdeCoefficients, assemble_calL
from .shooting import Box, count_zeros, exceptional_sobolev, locate_zeros, shoot
from .mellin import MellinGrid, mellin_forward, mellin_inverse

__version__ = "0.1.0"

__all__ = [
    "PhiProfile",
    "WormConfig",
    "levi_coefficients",
    "pseudoconvexity_scan",
    "GridSpec",
    "OdeCoefficients",
    "assemble_calL",
    "Box",
    "count_zeros",
    "exceptional_sobolev",
    "locate_zeros",
    "shoot",
    "MellinGrid",
    "mellin_forward",
    "mellin_inverse",
]
