"""Spectral Hardy-Hodge toolkit on the unit sphere.

Layer potentials, the Hardy-Hodge split of vector fields, continuation between
Hardy components of locally divergence-free fields, and the bounded extremal
problems used to evaluate that continuation stably.
"""

from .grid import Cap, SphereGrid, build_grid, cap_mask
from .harmonics import ScalarCoeffs, TangentBasisCoeffs, sh_analyze, sh_synthesize

__all__ = [
    "Cap",
    "SphereGrid",
    "build_grid",
    "cap_mask",
    "ScalarCoeffs",
    "TangentBasisCoeffs",
    "sh_analyze",
    "sh_synthesize",
]

__version__ = "0.1.0"
