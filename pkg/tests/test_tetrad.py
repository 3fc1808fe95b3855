from __future__ import annotations

import numpy as np
import pytest

from tetrad_forge import catalog
from tetrad_forge.clifford import GRADE, Multivector, TensorForm, blade_index
from tetrad_forge.geometry import build_frame
from tetrad_forge.tetrad import (LEMMA_FACTORS, PAIRS, SpinElement, SpinMembershipError,
                                 lemma_contraction, lorentz_rotate, rotated_metric,
                                 sample_spin_element, secondary_generators, tetrad_forms)


def frame_at(name, x=None, order=2):
    geo = catalog.load(name)
    return geo, tetrad_forms(build_frame(geo, geo.base_point() if x is None else x), order)


@pytest.mark.parametrize("name", catalog.names())
class TestTetradForms:
    def test_clifford_relation(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 0):
            tf = tetrad_forms(build_frame(geo, x), 1)
            assert tf.clifford_residual() <= 1e-10
            assert tf.inverse_residual() <= 1e-12

    def test_contraction_four(self, name):
        _, tf = frame_at(name)
        assert tf.contraction_residual() <= 1e-12

    def test_lemma(self, name):
        _, tf = frame_at(name)
        rng = np.random.default_rng(0)
        for k in range(5):
            u = Multivector(np.where(GRADE == k, rng.normal(size=16), 0), tf.ctx)
            np.testing.assert_allclose(lemma_contraction(u, tf).coeffs,
                                       LEMMA_FACTORS[k] * u.coeffs, atol=1e-10)

    def test_secondary_reconstruction(self, name):
        _, tf = frame_at(name)
        assert max(secondary_generators(tf).reconstruction_residuals().values()) <= 1e-10


class TestLemma:
    def test_tensor_valued(self):
        _, tf = frame_at("schwarzschild")
        rng = np.random.default_rng(1)
        data = np.where(GRADE == 3, rng.normal(size=(4, 4, 16)), 0)
        out = lemma_contraction(TensorForm(data, tf.ctx, "ul"), tf)
        assert out.slots == "ul"
        np.testing.assert_allclose(out.data, 2.0 * data, atol=1e-10)

    def test_mixed_grade_rejected(self):
        _, tf = frame_at("minkowski")
        with pytest.raises(ValueError, match="pure grade"):
            lemma_contraction(Multivector.scalar(1.0, tf.ctx) + Multivector.dx(0, tf.ctx), tf)


class TestSpin:
    def test_identity(self):
        _, tf = frame_at("schwarzschild")
        s = sample_spin_element(0, 0.0)
        np.testing.assert_array_equal(s.coeffs, np.zeros(6))
        rot = lorentz_rotate(tf, s.jet(tf).truncate(0))
        for a in range(4):
            np.testing.assert_allclose(rot.up[a].value, tf.up[a].value, atol=1e-15)

    def test_membership(self):
        _, tf = frame_at("flrw")
        s = sample_spin_element(7, 0.3)
        assert s.membership_residual(tf.frame) <= 1e-12

    def test_plane_rotation_closed_form(self):
        _, tf = frame_at("minkowski")
        c = 0.35
        coeffs = np.zeros(6)
        coeffs[PAIRS.index((1, 2))] = c
        rot = lorentz_rotate(tf, SpinElement(coeffs).jet(tf).truncate(0))
        # S = exp(c e^1 e^2): S^-1 e^1 S = cos(2c) e^1 - sin(2c) e^2
        expected = np.zeros(16)
        expected[blade_index(1)] = np.cos(2 * c)
        expected[blade_index(2)] = -np.sin(2 * c)
        np.testing.assert_allclose(rot.up[1].value, expected, atol=1e-14)
        np.testing.assert_allclose(rot.up[0].value, tf.up[0].value, atol=1e-14)
        np.testing.assert_allclose(rot.up[3].value, tf.up[3].value, atol=1e-14)

    def test_boost_closed_form(self):
        _, tf = frame_at("minkowski")
        c = 0.4
        coeffs = np.zeros(6)
        coeffs[PAIRS.index((0, 1))] = c
        rot = lorentz_rotate(tf, SpinElement(coeffs).jet(tf).truncate(0))
        # e^0 e^1 squares to +1, so S^-1 e^0 S = cosh(2c) e^0 + sinh(2c) e^1
        expected = np.zeros(16)
        expected[blade_index(0)] = np.cosh(2 * c)
        expected[blade_index(1)] = np.sinh(2 * c)
        np.testing.assert_allclose(rot.up[0].value, expected, atol=1e-13)

    @pytest.mark.parametrize("name", ["schwarzschild", "de-sitter-static", "rindler"])
    def test_rotation_preserves_metric(self, name):
        _, tf = frame_at(name)
        rot = lorentz_rotate(tf, sample_spin_element(3, 0.6).jet(tf).truncate(0))
        assert rot.clifford_residual() <= 1e-10
        np.testing.assert_allclose(rotated_metric(rot), tf.frame.g, atol=1e-10)

    def test_non_spin_rejected(self):
        _, tf = frame_at("minkowski")
        from tetrad_forge.fields import FormJet
        two = np.zeros(16)
        two[0] = 2.0
        with pytest.raises(SpinMembershipError):
            lorentz_rotate(tf, FormJet.constant(tf.frame, two))

    def test_position_dependent_requires_geometry(self):
        with pytest.raises(ValueError):
            sample_spin_element(1, 0.3, position_dependent=True)

    def test_position_dependent_membership(self):
        geo, tf = frame_at("schwarzschild")
        s = sample_spin_element(5, 0.4, position_dependent=True, geo=geo)
        for x in geo.sample_points(5, 2):
            assert s.membership_residual(build_frame(geo, x, 1)) <= 1e-12


class TestSecondaryGenerators:
    def test_algebra(self):
        _, tf = frame_at("schwarzschild")
        sg = secondary_generators(tf)
        H, I, K, ell = (sg.mv(n) for n in ("H", "I", "K", "ell"))
        one = Multivector.scalar(1.0, tf.ctx)
        np.testing.assert_allclose((I * I).coeffs, -one.coeffs, atol=1e-12)
        np.testing.assert_allclose((K * K).coeffs, -one.coeffs, atol=1e-12)
        np.testing.assert_allclose((H * H).coeffs, one.coeffs, atol=1e-12)
        np.testing.assert_allclose((I * K).coeffs, -(K * I).coeffs, atol=1e-12)
        np.testing.assert_allclose((ell * ell).coeffs, -one.coeffs, atol=1e-12)
