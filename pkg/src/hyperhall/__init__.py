"""Magnetic spectra and conductance cocycles on the hyperbolic plane.

Modules build on each other in order: hypgeom (holonomy and transport),
fuchsian (surface groups, balls, multipliers), jacobi (group cocycles
and fan pairings), twisted_algebra (kernels, traces, cyclic cocycles),
spectral (Landau levels, Harper operators, conductance pairings),
adiabatic (quantum adiabatic theorem and Kubo projector algebra).
"""

__version__ = "0.1.0"
