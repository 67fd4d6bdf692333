"""Explicit harmonic analysis on compact globally symmetric spaces.

Weight lattices and spectral data (:mod:`space_catalog`), spherical functions
(:mod:`spherical_fn`), Schroedinger kernels as exponential sums (:mod:`kernel_lab`),
Farey dissections (:mod:`farey`), quadratic-form counts (:mod:`quad_count`) and
space-time norm scans (:mod:`strichartz_lab`).
"""

__version__ = "0.1.0"
