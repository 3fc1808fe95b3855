from __future__ import annotations

import itertools

import numpy as np
import pytest

from tetrad_forge.clifford import (BLADES, GRADE, MetricContext, MetricError, Multivector,
                                   TensorForm, blade_index, exponential, wedge_product)

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

# Dirac representation, written out independently of the library
_S = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
_Z = np.zeros((2, 2))
GAMMA = [np.block([[np.eye(2), _Z], [_Z, -np.eye(2)]]).astype(complex)] + [
    np.block([[_Z, s], [-s, _Z]]).astype(complex) for s in _S]


def random_metric(rng) -> np.ndarray:
    a = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    return a.T @ ETA @ a


def matrix_oracle(g: np.ndarray):
    """rho(dx^mu) = E^mu_a gamma^a with g^{-1} = E eta E^T; blades antisymmetrised."""
    gi = np.linalg.inv(g)
    lam, q = np.linalg.eigh(gi)
    order = np.argsort(-lam)  # the single positive eigenvalue first
    lam, q = lam[order], q[:, order]
    E = q * np.sqrt(np.abs(lam))
    G = [sum(E[m, a] * GAMMA[a] for a in range(4)) for m in range(4)]
    mats = []
    for mask in BLADES:
        idx = [i for i in range(4) if mask >> i & 1]
        acc = np.zeros((4, 4), dtype=complex)
        perms = list(itertools.permutations(range(len(idx))))
        for p in perms:
            sign = np.linalg.det(np.eye(len(idx))[list(p)]) if idx else 1.0
            m = np.eye(4, dtype=complex)
            for k in p:
                m = m @ G[idx[k]]
            acc += sign * m
        mats.append(acc / len(perms))
    return np.array(mats)


def rho(u: Multivector, mats) -> np.ndarray:
    return np.einsum("i,ijk->jk", u.coeffs, mats)


class TestProduct:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_matrix_oracle(self, seed):
        rng = np.random.default_rng(seed)
        g = random_metric(rng)
        ctx = MetricContext(g)
        mats = matrix_oracle(g)
        for _ in range(5):
            u, v = (Multivector(rng.normal(size=16), ctx) for _ in range(2))
            np.testing.assert_allclose(rho(u * v, mats), rho(u, mats) @ rho(v, mats),
                                       atol=1e-10)

    def test_vector_anticommutator(self):
        rng = np.random.default_rng(1)
        ctx = MetricContext(random_metric(rng))
        for m, n in itertools.product(range(4), repeat=2):
            a, b = Multivector.dx(m, ctx), Multivector.dx(n, ctx)
            s = a * b + b * a
            expected = np.zeros(16)
            expected[0] = 2 * ctx.g_inv[m, n]
            np.testing.assert_allclose(s.coeffs, expected, atol=1e-13)

    def test_associativity(self):
        rng = np.random.default_rng(2)
        ctx = MetricContext(random_metric(rng))
        u, v, w = (Multivector(rng.normal(size=16) + 1j * rng.normal(size=16), ctx) for _ in range(3))
        np.testing.assert_allclose(((u * v) * w).coeffs, (u * (v * w)).coeffs, atol=1e-11)

    def test_wedge_is_metric_free(self):
        rng = np.random.default_rng(4)
        u, v = rng.normal(size=16), rng.normal(size=16)
        c1, c2 = MetricContext(random_metric(rng)), MetricContext(random_metric(rng))
        w1 = wedge_product(Multivector(u, c1), Multivector(v, c1))
        w2 = wedge_product(Multivector(u, c2), Multivector(v, c2))
        np.testing.assert_array_equal(w1.coeffs, w2.coeffs)
        # dx^0 ^ dx^1 = -dx^1 ^ dx^0
        a, b = Multivector.dx(0, c1), Multivector.dx(1, c1)
        np.testing.assert_array_equal(wedge_product(a, b).coeffs, -wedge_product(b, a).coeffs)

    def test_reverse_is_antiautomorphism(self):
        rng = np.random.default_rng(5)
        ctx = MetricContext(random_metric(rng))
        u, v = (Multivector(rng.normal(size=16), ctx) for _ in range(2))
        np.testing.assert_allclose((u * v).reverse().coeffs, (v.reverse() * u.reverse()).coeffs,
                                   atol=1e-12)


class TestGrades:
    def test_decomposition(self):
        rng = np.random.default_rng(0)
        u = Multivector(rng.normal(size=16), MetricContext.minkowski())
        total = sum((u.grade(k) for k in range(1, 5)), u.grade(0))
        np.testing.assert_array_equal(total.coeffs, u.coeffs)

    def test_blade_counts(self):
        assert [int((GRADE == k).sum()) for k in range(5)] == [1, 4, 6, 4, 1]
        assert blade_index() == 0 and blade_index(0, 1, 2, 3) == 15

    def test_bivector_commutator_closes(self):
        rng = np.random.default_rng(3)
        ctx = MetricContext(random_metric(rng))
        a = Multivector(np.where(GRADE == 2, rng.normal(size=16), 0), ctx)
        b = Multivector(np.where(GRADE == 2, rng.normal(size=16), 0), ctx)
        c = a * b - b * a
        assert np.abs(np.where(GRADE == 2, 0, c.coeffs)).max() < 1e-12


class TestExponential:
    def test_rotation_closed_form(self):
        ctx = MetricContext.minkowski()
        b = Multivector.blade(ctx, 1, 2)
        theta = 0.7
        # (dx^1 dx^2)^2 = -1 for the Minkowski metric
        expected = np.zeros(16)
        expected[0] = np.cos(theta)
        expected[blade_index(1, 2)] = np.sin(theta)
        np.testing.assert_allclose(exponential(b * theta).coeffs, expected, atol=1e-14)

    def test_boost_closed_form(self):
        ctx = MetricContext.minkowski()
        b = Multivector.blade(ctx, 0, 1)
        phi = 1.3
        expected = np.zeros(16)
        expected[0] = np.cosh(phi)
        expected[blade_index(0, 1)] = np.sinh(phi)
        np.testing.assert_allclose(exponential(b * phi).coeffs, expected, atol=1e-13)


class TestMetricContext:
    def test_rejects_euclidean(self):
        with pytest.raises(MetricError):
            MetricContext(np.eye(4))

    def test_rejects_wrong_signature(self):
        with pytest.raises(MetricError):
            MetricContext(np.diag([1.0, 1.0, -1.0, -1.0]))


class TestTensorForm:
    def test_slot_shape_checked(self):
        with pytest.raises(ValueError):
            TensorForm(np.zeros((4, 16)), MetricContext.minkowski(), "ll")

    def test_product_concatenates_slots(self):
        ctx = MetricContext.minkowski()
        rng = np.random.default_rng(0)
        a = TensorForm(rng.normal(size=(4, 16)), ctx, "l")
        b = TensorForm(rng.normal(size=(4, 16)), ctx, "u")
        ab = a * b
        assert ab.slots == "lu"
        expected = (a[1] * b[2]).coeffs
        np.testing.assert_allclose(ab.data[1, 2], expected, atol=1e-14)
