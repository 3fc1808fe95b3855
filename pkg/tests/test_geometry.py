from __future__ import annotations

import json

import numpy as np
import pytest

from tetrad_forge import catalog
from tetrad_forge.fields import random_expression
from tetrad_forge.geometry import (DegenerateTetrad, DomainViolation, GeometryDefinition,
                                   GeometryError, OracleError, bianchi_residual, build_frame,
                                   einstein_tensor, finite_difference_oracle,
                                   metric_compatibility_residual, oracle_frame,
                                   ricci_commutator_residual, riemann_symmetry_residuals)

HALF_PI = np.pi / 2


@pytest.fixture(scope="module")
def schwarzschild():
    return catalog.load("schwarzschild")


class TestSchwarzschild:
    def test_christoffel_closed_form(self, schwarzschild):
        M, r, th = 1.0, 4.0, 1.1
        f = build_frame(schwarzschild, [0.0, r, th, 0.3])
        gam = f.gamma  # gam[m, n, l] = Gamma_{mn}^l
        assert gam[0, 0, 1] == pytest.approx(M * (r - 2 * M) / r ** 3, rel=1e-13)
        assert gam[0, 1, 0] == pytest.approx(M / (r * (r - 2 * M)), rel=1e-13)
        assert gam[1, 1, 1] == pytest.approx(-M / (r * (r - 2 * M)), rel=1e-13)
        assert gam[1, 2, 2] == pytest.approx(1 / r, rel=1e-13)
        assert gam[2, 3, 3] == pytest.approx(np.cos(th) / np.sin(th), rel=1e-13)
        assert gam[3, 3, 2] == pytest.approx(-np.sin(th) * np.cos(th), rel=1e-13)

    def test_base_point_invariants(self, schwarzschild):
        f = build_frame(schwarzschild, [0.0, 4.0, HALF_PI, 0.0])
        assert np.abs(f.ricci).max() <= 1e-9
        assert f.kretschmann == pytest.approx(1.171875e-2, abs=1e-8)
        assert abs(f.scalar_curvature) <= 1e-12

    def test_kretschmann_sampled(self, schwarzschild):
        for x in schwarzschild.sample_points(20, 3):
            f = build_frame(schwarzschild, x)
            assert f.kretschmann == pytest.approx(48 / x[1] ** 6, rel=1e-8)

    def test_oracle_derivative(self, schwarzschild):
        x = np.array([0.0, 4.0, HALF_PI, 0.0])
        de = finite_difference_oracle(schwarzschild, x, 1)
        exact = 1.0 / (4.0 ** 2 * np.sqrt(1 - 2 / 4.0))  # d/dr sqrt(1 - 2/r)
        assert de[1, 0, 0] == pytest.approx(exact, abs=1e-7)


class TestMaximallySymmetric:
    def test_de_sitter(self):
        geo = catalog.load("de-sitter-static")
        H = geo.parameters["H"]
        for x in geo.sample_points(10, 0):
            f = build_frame(geo, x)
            assert f.kretschmann == pytest.approx(24 * H ** 4, rel=1e-10)
            assert abs(f.scalar_curvature) == pytest.approx(12 * H ** 2, rel=1e-10)
            c = f.ricci[0, 0] / f.g[0, 0]
            np.testing.assert_allclose(f.ricci, c * f.g, atol=1e-12)

    def test_flrw_linear_scale_factor(self):
        geo = catalog.load("flrw")
        t = 2.0
        f = build_frame(geo, [t, 0.1, -0.2, 0.3])
        # a(t) = t: a'' = 0, so K = 12 (a'/a)^4 and |R| = 6 (a'/a)^2
        assert f.kretschmann == pytest.approx(12 / t ** 4, rel=1e-12)
        assert abs(f.scalar_curvature) == pytest.approx(6 / t ** 2, rel=1e-12)
        assert np.abs(einstein_tensor(f)).max() > 0.1

    @pytest.mark.parametrize("name", ["minkowski", "minkowski-spherical", "rindler"])
    def test_flat(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 2):
            f = build_frame(geo, x)
            assert np.abs(f.riemann).max() <= 1e-10
            assert np.abs(einstein_tensor(f)).max() <= 1e-10


@pytest.mark.parametrize("name", catalog.names())
class TestIdentities:
    def test_metric_compatibility(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 1):
            assert max(metric_compatibility_residual(build_frame(geo, x)).values()) <= 1e-9

    def test_bianchi(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 1):
            assert bianchi_residual(build_frame(geo, x)) <= 1e-7

    def test_symmetries(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 1):
            assert max(riemann_symmetry_residuals(build_frame(geo, x)).values()) <= 1e-9

    def test_ricci_commutator(self, name):
        from tetrad_forge.fields import ExpressionField
        geo = catalog.load(name)
        rng = np.random.default_rng(11)
        for x in geo.sample_points(3, 1):
            exprs = [random_expression(geo, rng, 3) for _ in range(4)]
            fld = ExpressionField(geo, [[e] + [None] * 15 for e in exprs], slots="l")
            p = fld.partials(x, 2)
            r = ricci_commutator_residual(build_frame(geo, x), p[0][:, 0], p[1][:, :, 0],
                                          p[2][:, :, :, 0])
            assert r <= 1e-8

    def test_oracle_agreement(self, name):
        geo = catalog.load(name)
        for x in geo.sample_points(5, 4):
            o, f = oracle_frame(geo, x), build_frame(geo, x)
            for a, b in ((o.g, f.g), (o.gamma, f.gamma), (o.riemann, f.riemann)):
                assert np.abs(a - b).max() / max(1.0, np.abs(b).max()) <= 1e-5


class TestErrors:
    def _dict(self):
        return catalog.raw("schwarzschild")

    def test_missing_component(self):
        d = self._dict()
        d["tetrad"][3] = d["tetrad"][3][:3]
        with pytest.raises(GeometryError, match="missing component e_3\\^3"):
            GeometryDefinition.from_dict(d)

    def test_bad_expression(self):
        d = self._dict()
        d["tetrad"][0][0] = "sqrt(1 - 2*M/q)"
        with pytest.raises(GeometryError, match="e_0\\^0"):
            GeometryDefinition.from_dict(d)

    def test_outside_domain(self, schwarzschild):
        with pytest.raises(DomainViolation):
            build_frame(schwarzschild, [0.0, 2.2, 1.0, 0.0])

    def test_degenerate(self):
        d = catalog.raw("minkowski")
        d["tetrad"][1] = ["0", "0", "0", "0"]
        geo = GeometryDefinition.from_dict(d)
        with pytest.raises(DegenerateTetrad):
            build_frame(geo, [0.0, 0.0, 0.0, 0.0])

    def test_oracle_stencil_shrinks_then_fails(self, schwarzschild):
        lo = schwarzschild.domain[0][0]
        x = np.array([lo, 4.0, HALF_PI, 0.0])  # on the boundary: no stencil fits
        with pytest.raises(OracleError):
            finite_difference_oracle(schwarzschild, x, 1)

    def test_oracle_near_boundary_shrinks(self, schwarzschild):
        lo = schwarzschild.domain[0][0]
        x = np.array([lo + 2e-4, 4.0, HALF_PI, 0.0])  # default step 6e-4 does not fit
        de = finite_difference_oracle(schwarzschild, x, 1)
        assert np.all(np.isfinite(de))

    def test_json_round_trip(self, tmp_path, schwarzschild):
        path = tmp_path / "geo.json"
        path.write_text(json.dumps(self._dict()))
        geo = GeometryDefinition.from_json(path)
        x = [0.0, 4.0, 1.0, 0.0]
        np.testing.assert_array_equal(geo.tetrad_values(x), schwarzschild.tetrad_values(x))

    def test_with_params(self, schwarzschild):
        geo = schwarzschild.with_params(M=0.5)
        f = build_frame(geo, [0.0, 4.0, 1.0, 0.0])
        assert f.kretschmann == pytest.approx(48 * 0.25 / 4.0 ** 6, rel=1e-10)
        with pytest.raises(GeometryError):
            schwarzschild.with_params(Q=1.0)


def test_sampling_is_seeded(schwarzschild):
    a = schwarzschild.sample_points(10, 5)
    b = schwarzschild.sample_points(10, 5)
    np.testing.assert_array_equal(a, b)
    assert all(schwarzschild.contains(x) for x in a)
