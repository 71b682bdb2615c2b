"""Ortholength spectra of convex-body orbits in real hyperbolic space.

Library layout:

- geom: exact-formula hyperbolic kernel (H^2 / H^3, upper half-space)
- groups: discrete-group presets, word/displacement balls, critical exponents
- perp: common-perpendicular enumeration, deduplication, counting
- asym: closed-form asymptotic constants and predictions
- stats: empirical equidistribution and error-term diagnostics
- limitset: Schottky limit-set pieces, diameter counting, rendering
- cli: batch front-end (`orthocount <command> --config ...`)
"""

__version__ = "0.1.0"

from . import config  # noqa: F401
