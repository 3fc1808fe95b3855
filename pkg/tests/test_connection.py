from __future__ import annotations

import numpy as np
import pytest

from tetrad_forge import catalog
from tetrad_forge.clifford import GRADE, blade_index
from tetrad_forge.connection import (b_connection, b_from_generators, b_wedge_values,
                                     connection_transform_check, curvature_two_form,
                                     d_commutator, d_operator, field_strength,
                                     riemann_two_form, spin_connection_oracle)
from tetrad_forge.expr import neg
from tetrad_forge.fields import ExpressionField, random_expression, random_form_field
from tetrad_forge.geometry import build_frame
from tetrad_forge.tetrad import SpinElement, sample_spin_element, secondary_generators, tetrad_forms


def setup(name, x=None):
    geo = catalog.load(name)
    x = geo.base_point() if x is None else np.asarray(x, dtype=float)
    tf = tetrad_forms(build_frame(geo, x), 2)
    return geo, tf, b_connection(tf)


class TestB:
    def test_flat_spherical_closed_form(self):
        th = 1.0
        _, tf, B = setup("minkowski-spherical", [0.0, 4.0, th, 0.2])
        # nabla_th e_1 = e_2 and nabla_ph e_1 = sin(th) e_3, nabla_ph e_2 = cos(th) e_3
        expected = np.zeros((4, 4, 4))
        expected[2, 1, 2] = 0.5
        expected[3, 1, 3] = 0.5 * np.sin(th)
        expected[3, 2, 3] = 0.5 * np.cos(th)
        expected -= expected.transpose(0, 2, 1)
        np.testing.assert_allclose(B.b, expected, atol=1e-13)

    def test_minkowski_zero(self):
        _, _, B = setup("minkowski", [0.3, -1.0, 0.5, 2.0])
        assert np.abs(B.values).max() == 0.0

    @pytest.mark.parametrize("name", catalog.names())
    def test_structure(self, name):
        _, tf, B = setup(name)
        assert B.grade_residual() <= 1e-10
        assert B.reconstruction_residual() <= 1e-10
        np.testing.assert_allclose(b_wedge_values(tf), B.values, atol=1e-10)
        np.testing.assert_allclose(B.b, -B.b.transpose(0, 2, 1), atol=0)
        np.testing.assert_allclose(B.b, 0.5 * spin_connection_oracle(tf.frame), atol=1e-9)
        np.testing.assert_allclose(b_from_generators(secondary_generators(tf)), B.values,
                                   atol=1e-9)


class TestTheorem:
    def test_identity_element(self):
        _, tf, _ = setup("schwarzschild")
        r = connection_transform_check(tf, SpinElement(np.zeros(6)))
        assert r["transform"] <= 1e-15 and r["grade"] <= 1e-15

    @pytest.mark.parametrize("name", ["schwarzschild", "flrw", "de-sitter-static"])
    def test_constant(self, name):
        geo, _, _ = setup(name)
        for k, x in enumerate(geo.sample_points(3, 9)):
            tf = tetrad_forms(build_frame(geo, x), 2)
            r = connection_transform_check(tf, sample_spin_element(k, 0.5))
            assert r["transform"] <= 1e-9 and r["grade"] <= 1e-9

    def test_position_dependent(self):
        geo, tf, _ = setup("schwarzschild")
        s = sample_spin_element(4, 0.4, position_dependent=True, geo=geo)
        assert connection_transform_check(tf, s)["transform"] <= 1e-5


class TestD:
    @pytest.mark.parametrize("name", ["schwarzschild", "minkowski-spherical", "flrw"])
    def test_tetrad_constant(self, name):
        _, tf, B = setup(name)
        for j in tf.up + tf.down:
            assert np.abs(d_operator(B, j).value).max() <= 1e-9

    def test_leibniz(self):
        geo, tf, B = setup("schwarzschild")
        rng = np.random.default_rng(2)
        u = random_form_field(geo, rng).jet(tf.frame, 1)
        v = random_form_field(geo, rng, complex_=True).jet(tf.frame, 1)
        lhs = d_operator(B, u.mul(v)).value
        rhs = (d_operator(B, u).mul(v.truncate(0)).value
               + u.truncate(0).mul(d_operator(B, v)).value)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1, np.abs(lhs).max()))

    @pytest.mark.parametrize("grade", range(5))
    def test_commutator_vanishes(self, grade):
        geo, tf, B = setup("schwarzschild")
        u = random_form_field(geo, np.random.default_rng(grade), grades=[grade]).jet(tf.frame, 2)
        assert np.abs(d_commutator(B, u)).max() <= 1e-8

    def test_commutator_on_covector_valued_forms_is_nonzero(self):
        # measured only: with a tensor slot the commutator picks up the Riemann term
        geo, tf, B = setup("schwarzschild")
        u = random_form_field(geo, np.random.default_rng(0), slots="l", grades=[1]).jet(tf.frame, 2)
        assert np.abs(d_commutator(B, u)).max() > 1e-3


class TestCurvature:
    @pytest.mark.parametrize("name", ["schwarzschild", "flrw", "de-sitter-static"])
    def test_riemann_two_form(self, name):
        geo, _, _ = setup(name)
        for x in geo.sample_points(5, 6):
            _, _, B = setup(name, x)
            C = curvature_two_form(B)
            np.testing.assert_allclose(C.data, riemann_two_form(B.tf.frame).data, atol=1e-8)
            assert np.abs(np.where(GRADE == 2, 0, C.data)).max() <= 1e-10

    def test_flat_vanishes(self):
        _, _, B = setup("minkowski-spherical", [0.0, 3.0, 0.8, 0.1])
        assert np.abs(curvature_two_form(B).data).max() <= 1e-12


class TestFieldStrength:
    def test_abelian_closed_form(self):
        geo, tf, B = setup("schwarzschild", [0.4, 5.0, 1.2, -0.3])
        rng = np.random.default_rng(8)
        exprs = [random_expression(geo, rng, 3) for _ in range(4)]
        co = {(mu, blade_index(1, 2)): neg(exprs[mu]) for mu in range(4)}
        A = ExpressionField(geo, co, slots="l", basis="tetrad").jet(tf.frame, 1)
        a_fld = ExpressionField(geo, {(mu, 0): exprs[mu] for mu in range(4)}, slots="l")
        _, da, _ = a_fld.partials(tf.frame.x, 2)
        f = da[:, :, 0] - da[:, :, 0].T                       # d_mu a_nu - d_nu a_mu
        I = secondary_generators(tf).I.value
        F = field_strength(A, B).value
        np.testing.assert_allclose(F, f[:, :, None] * I[None, None, :], atol=1e-10)

    def test_requires_one_slot(self):
        geo, tf, B = setup("minkowski")
        u = random_form_field(geo, np.random.default_rng(0)).jet(tf.frame, 1)
        with pytest.raises(ValueError):
            field_strength(u, B)
