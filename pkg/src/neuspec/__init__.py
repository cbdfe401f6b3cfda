"""Neumann spectra of the Laplacian and even-order polyharmonic operators.

Exact formulas on balls, finite-element and particular-solution solvers on
planar domains, and certified isoperimetric upper bounds built from radial
trial functions.
"""

__version__ = "0.1.0"
