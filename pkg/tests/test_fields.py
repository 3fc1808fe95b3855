from __future__ import annotations

import numpy as np
import pytest

from tetrad_forge import catalog
from tetrad_forge.clifford import blade_index
from tetrad_forge.fields import (ExpressionField, FormJet, fd_covariant_jet, jet_exp,
                                 random_form_field, tetrad_form_jets)
from tetrad_forge.geometry import build_frame


@pytest.fixture(scope="module")
def sch():
    geo = catalog.load("schwarzschild")
    return geo, build_frame(geo, [0.3, 5.0, 1.1, -0.4])


class TestJets:
    def test_symbolic_matches_finite_difference(self, sch):
        geo, frame = sch
        fld = random_form_field(geo, np.random.default_rng(0), slots="l")
        jet = fld.jet(frame, 1)
        fd = fd_covariant_jet(geo, frame, "l", fld.values)
        np.testing.assert_allclose(jet.value, fd.value, atol=1e-14)
        np.testing.assert_allclose(jet.d1, fd.d1, atol=1e-8 * max(1, np.abs(jet.d1).max()))

    def test_tetrad_basis_agrees_with_coordinate_basis(self, sch):
        geo, frame = sch
        # the coefficient of e^1 in the tetrad basis is the form e^1 itself
        tet = ExpressionField(geo, {blade_index(1): "1"}, basis="tetrad").jet(frame, 2)
        e1 = tetrad_form_jets(frame, 2)[1]
        np.testing.assert_allclose(tet.value, e1.value, atol=1e-14)
        np.testing.assert_allclose(tet.d1, e1.d1, atol=1e-12)
        np.testing.assert_allclose(tet.d2, e1.d2, atol=1e-11)

    def test_leibniz_product(self, sch):
        geo, frame = sch
        rng = np.random.default_rng(1)
        u, v = (random_form_field(geo, rng).jet(frame, 2) for _ in range(2))
        uv = u.mul(v)
        # nabla(uv) vs (nabla u) v + u (nabla v), computed through the product table
        t = frame.ctx.table
        expected = (np.einsum("mi,ikj,j->mk", u.d1, t, v.value)
                    + np.einsum("i,ikj,mj->mk", u.value, t, v.d1))
        np.testing.assert_allclose(uv.d1, expected, atol=1e-12 * max(1, np.abs(expected).max()))

    def test_exponential_derivative(self, sch):
        geo, frame = sch
        e = tetrad_form_jets(frame, 1)
        beta = e[1].mul(e[2]).scale(0.3) + e[0].mul(e[3]).scale(-0.2)
        s = jet_exp(beta)

        def values(y):
            fr = build_frame(geo, y, order=1)
            ey = tetrad_form_jets(fr, 0)
            b = ey[1].mul(ey[2]).scale(0.3) + ey[0].mul(ey[3]).scale(-0.2)
            return jet_exp(b).value
        fd = fd_covariant_jet(geo, frame, "", values)
        np.testing.assert_allclose(s.value, fd.value, atol=1e-13)
        np.testing.assert_allclose(s.d1, fd.d1, atol=1e-8)

    def test_complex_field(self, sch):
        geo, frame = sch
        f = random_form_field(geo, np.random.default_rng(2), complex_=True)
        jet = f.jet(frame, 1)
        assert np.iscomplexobj(jet.value)
        assert np.abs(jet.value.imag).max() > 0

    def test_slot_mismatch(self, sch):
        geo, frame = sch
        a = FormJet.constant(frame, np.ones((4, 16)), "l")
        b = FormJet.constant(frame, np.ones(16), "")
        with pytest.raises(ValueError):
            a + b

    def test_bad_basis(self, sch):
        with pytest.raises(ValueError):
            ExpressionField(sch[0], {0: "1"}, basis="spinor")
