"""
Local Lorentz rotations of the tetrad
=====================================

Rotates the tetrad 1-forms by S = exp(beta), with beta a combination of
tetrad bivectors, and follows how the connection B_mu transforms.
"""
import numpy as np

from tetrad_forge import catalog
from tetrad_forge.connection import b_connection, connection_transform_check
from tetrad_forge.geometry import build_frame
from tetrad_forge.tetrad import (lorentz_rotate, rotated_metric, sample_spin_element,
                                 tetrad_forms)

geo = catalog.load("flrw")
frame = build_frame(geo, [2.0, 0.3, -0.1, 0.4])
tf = tetrad_forms(frame, 2)

S = sample_spin_element(seed=7, scale=0.5)
print("generator coefficients:", np.round(S.coeffs, 4))
print(f"reversion(S) S - 1: {S.membership_residual(frame):.2e}")

# the rotated 1-forms still square to the Minkowski metric and give back g
rotated = lorentz_rotate(tf, S.jet(tf).truncate(0))
print(f"rotated Clifford relation residual: {rotated.clifford_residual():.2e}")
print(f"rotated metric vs g: {np.abs(rotated_metric(rotated) - frame.g).max():.2e}")

# B changes by conjugation plus an inhomogeneous term
B = b_connection(tf)
print("\nb[x, a, b] before rotation:\n", np.round(B.b[1], 6))
for label, s in (("constant", S),
                 ("position dependent",
                  sample_spin_element(seed=3, scale=0.4, position_dependent=True, geo=geo))):
    r = connection_transform_check(tf, s)
    print(f"{label:20s} transformation residual {r['transform']:.2e}, "
          f"non-bivector part of S nabla S^-1 {r['grade']:.2e}")
