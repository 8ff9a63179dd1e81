"""Conserved functionals of the Kirchhoff-Pokhozhaev equation.

The laws are built exactly over the rationals and certified in a moment
algebra; a Galerkin mode simulator measures their numerical drift.
"""

__version__ = "0.1.0"
