"""
From the tensor equation to 4x4 gamma matrices
==============================================

The idempotent t = (1 + H)(1 - iI)/4 spans a four-dimensional left ideal.
Left multiplication on its basis turns e^a into gamma matrices, and the
tensor equation multiplied by t becomes the usual curved-space Dirac
equation for the ideal coordinates.
"""
import numpy as np

from tetrad_forge import catalog
from tetrad_forge.connection import b_connection
from tetrad_forge.dirac import (gamma_rep, ideal_basis, plane_wave_residual,
                                reduction_equivalence)
from tetrad_forge.fields import random_form_field
from tetrad_forge.geometry import build_frame
from tetrad_forge.tetrad import secondary_generators, tetrad_forms

np.set_printoptions(precision=3, suppress=True)

flat = catalog.load("minkowski")
tf = tetrad_forms(build_frame(flat, flat.base_point()), 2)
sg = secondary_generators(tf)
basis = ideal_basis(sg)
rep = gamma_rep(tf, basis)
print(f"t t - t: {basis.idempotent_residual():.1e}, rank of the ideal basis: {basis.rank()}")
for a in range(4):
    print(f"gamma^{a} =\n{rep.gamma_a[a]}")
print(f"plane wave (m = 0.5, k = (0.3, -1.2, 0.7)) residual: "
      f"{plane_wave_residual(0.5, [0.3, -1.2, 0.7], rep):.1e}")

# on a curved background the spin term appears as 1/4 b_{mu ab} [gamma^a, gamma^b]
geo = catalog.load("schwarzschild")
rng = np.random.default_rng(0)
for x in geo.sample_points(3, 1):
    tf = tetrad_forms(build_frame(geo, x), 2)
    sg = secondary_generators(tf)
    B = b_connection(tf)
    psi = random_form_field(geo, rng, complex_=True)
    res = reduction_equivalence(psi, rng.normal(size=4), 1.0, tf, B, sg)
    print(f"x = {np.round(x, 3)}: tensor vs matrix residual {res.residual:.2e} "
          f"(|psi| = {np.abs(res.psi).max():.2f})")
