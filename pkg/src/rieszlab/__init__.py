"""Desk-scale numerics for Riesz-type potentials.

Submodules: rearrange (distribution functions and rearrangements), kernels
(the kernel zoo), domains (measurable-domain growth geometry), symbols
(polynomial symbols and sharp constants), functional (potentials and
exponential-integral experiments), oneil (discrete convolution-inequality
verifiers), presets (named example objects) and cli (manifest runner).
"""

from . import domains, functional, geom, kernels, oneil, radial, rearrange, symbols

__all__ = [
    "domains", "functional", "geom", "kernels", "oneil", "radial",
    "rearrange", "symbols",
]

__version__ = "0.1.0"
