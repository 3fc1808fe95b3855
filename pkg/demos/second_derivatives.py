"""
A Lagrangian density free of second derivatives
===============================================

R contains second derivatives of the tetrad; R + 4 Tr(delta(dx^mu B_mu))
does not.  Bumping the second tetrad partials at a point (values and first
partials held fixed) moves R but leaves the combination unchanged.
"""
from tetrad_forge import catalog
from tetrad_forge.geometry import build_frame
from tetrad_forge.lagrangian import (CODIFFERENTIAL_SIGN, l2_density, l2_density_fd,
                                     second_derivative_check)

for name in ("schwarzschild", "flrw", "de-sitter-static"):
    geo = catalog.load(name)
    x = geo.base_point()
    rep = second_derivative_check(geo, x, trials=20, seed=0)
    print(f"{name:18s} L2 = {l2_density(build_frame(geo, x)):+.6f} "
          f"(finite differences {l2_density_fd(geo, x):+.6f}); "
          f"bumps change L2 by {rep.max_deviation:.1e} and R by up to {rep.control:.2e}")

# with the opposite codifferential sign the cancellation is lost
geo = catalog.load("schwarzschild")
rep = second_derivative_check(geo, geo.base_point(), trials=20, seed=0,
                              sign=-CODIFFERENTIAL_SIGN)
print(f"\nopposite sign: L2 moves by up to {rep.max_deviation:.2e}")
