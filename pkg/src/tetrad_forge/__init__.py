"""Tetrad geometry and Clifford-algebra-valued differential forms.

The package builds, from a tetrad given by symbolic expressions, the
metric, Levi-Civita connection and curvature at points of a manifold, the
Clifford algebra of differential forms over it, the spinor-type connection
``B_mu`` and its curvature, and the residuals of a Dirac-type tensor
equation together with its 4x4 matrix reduction.
"""
from __future__ import annotations

__version__ = "0.1.0"
