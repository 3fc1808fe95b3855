"""Registry of pointwise identity checks and the suite runner.

Every invariant of the library appears here as exactly one check.  A
check is a function of a :class:`PointContext` returning a float; its
``kind`` says how the float is judged: ``"max"`` (must stay at or below
the tolerance), ``"min"`` (must stay at or above it) or ``"report"``
(measured and reported, never failing).
"""
from __future__ import annotations

import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping

import numpy as np

from . import __version__
from .clifford import (GRADE, Multivector, TensorForm, outer_product)
from .connection import (b_connection, b_from_generators, b_wedge_values,
                         connection_transform_check, curvature_two_form,
                         d_commutator, d_operator, field_strength, riemann_two_form,
                         spin_connection_oracle)
from .dirac import (GOLDEN_GAMMA0, decompose_spinor, gamma_of, gamma_rep, ideal_basis,
                    reduction_equivalence, spin_term, tensor_dirac_residual)
from .expr import Expression, add, const, derivative, mul, neg
from .fields import ExpressionField, random_expression, random_form_field
from .geometry import (ETA, GeometryDefinition, bianchi_residual, build_frame,
                       metric_compatibility_residual, oracle_frame,
                       ricci_commutator_residual, riemann_symmetry_residuals)
from .lagrangian import (EquationConfig, SourceTerms, abelian_current, codifferential,
                         l0l1_density, l2_density, l2_density_fd, main_residuals,
                         second_derivative_check)
from .tetrad import (LEMMA_FACTORS, PAIRS, SpinElement, lemma_contraction, lorentz_rotate,
                     rotated_metric, sample_spin_element, secondary_generators, tetrad_forms)

__all__ = ["CheckSpec", "CheckRecord", "SuiteReport", "PointContext", "REGISTRY",
           "SUITES", "INVARIANTS", "run_suite", "thread_cap"]

SUITES = ("clifford", "geometry", "tetrad", "connection", "dirac", "lagrangian")


# ---------------------------------------------------------------------------
# Per-point context
# ---------------------------------------------------------------------------


class PointContext:
    """Lazily built geometric objects at one sample point."""

    def __init__(self, geo: GeometryDefinition, x: np.ndarray, seed: int, index: int):
        self.geo = geo
        self.x = np.asarray(x, dtype=float)
        self.seed = seed
        self.index = index

    def rng(self, check_id: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.index, zlib.crc32(check_id.encode())])

    @cached_property
    def frame(self):
        return build_frame(self.geo, self.x, order=3)

    @cached_property
    def tf(self):
        return tetrad_forms(self.frame, 2)

    @cached_property
    def B(self):
        return b_connection(self.tf)

    @cached_property
    def sg(self):
        return secondary_generators(self.tf)

    @cached_property
    def basis(self):
        return ideal_basis(self.sg)

    @cached_property
    def rep(self):
        return gamma_rep(self.tf, self.basis)

    @cached_property
    def second_derivative(self):
        seed = int(self.rng("lagrangian.second-derivative").integers(1 << 30))
        return second_derivative_check(self.geo, self.x, trials=20, seed=seed)

    @property
    def ctx(self):
        return self.frame.ctx


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    return float(np.abs(np.asarray(a) - np.asarray(b)).max(initial=0.0)) / scale


def _random_mv(ctx, rng, grades=None, complex_=False) -> Multivector:
    c = rng.normal(size=16)
    if complex_:
        c = c + 1j * rng.normal(size=16)
    if grades is not None:
        c = np.where(np.isin(GRADE, grades), c, 0)
    return Multivector(c, ctx)


def _tetrad_product_field(pc: PointContext, u: ExpressionField, v: ExpressionField) -> ExpressionField:
    """Symbolic product of two tetrad-basis fields (constant structure constants)."""
    from .clifford import MetricContext
    table = MetricContext.minkowski().table
    out = []
    for k in range(16):
        acc: Expression = const(0.0)
        for i in range(16):
            for j in range(16):
                c = table[i, k, j]
                if c != 0:
                    term = mul(u._re[i], v._re[j])
                    acc = add(acc, term if c == 1 else (neg(term) if c == -1 else mul(const(c), term)))
        out.append(acc)
    return ExpressionField(pc.geo, out, basis="tetrad")


def _covector_partials(pc: PointContext, rng):
    exprs = [random_expression(pc.geo, rng, 3) for _ in range(4)]
    f = ExpressionField(pc.geo, [[e] + [None] * 15 for e in exprs], slots="l")
    p = f.partials(pc.x, 2)
    return exprs, p[0][:, 0], p[1][:, :, 0], p[2][:, :, :, 0]


def _abelian_field(pc: PointContext, exprs) -> ExpressionField:
    """A_mu = a_mu I as a tetrad-basis field (I = -e^1 e^2)."""
    from .clifford import blade_index
    co = np.empty((4, 16), dtype=object)
    co[...] = None
    for mu in range(4):
        co[mu, blade_index(1, 2)] = neg(exprs[mu])
    return ExpressionField(pc.geo, co, slots="l", basis="tetrad")


# ---------------------------------------------------------------------------
# Check functions
# ---------------------------------------------------------------------------


def c_metric_context(pc):
    ctx = pc.ctx
    g, gi = ctx.g, ctx.g_inv
    ev = np.sort(np.linalg.eigvalsh(g))
    bad = (np.linalg.det(g) >= 0) or (g[0, 0] <= 0) or not (ev[0] < 0 and ev[1] < 0 and ev[2] < 0 < ev[3])
    return np.inf if bad else max(float(np.abs(g - g.T).max()), float(np.abs(g @ gi - np.eye(4)).max()))


def c_grade_decomposition(pc):
    u = _random_mv(pc.ctx, pc.rng("clifford.grade-decomposition"), complex_=True)
    s = sum((u.grade(k) for k in range(1, 5)), u.grade(0))
    return float(np.abs(s.coeffs - u.coeffs).max())


def c_associativity(pc):
    rng = pc.rng("clifford.associativity")
    r = 0.0
    for _ in range(2):
        u, v, w = (_random_mv(pc.ctx, rng) for _ in range(3))
        lhs, rhs = (u * v) * w, u * (v * w)
        r = max(r, _rel(lhs.coeffs, rhs.coeffs))
    return r


def c_bivector_closure(pc):
    rng = pc.rng("clifford.bivector-closure")
    a, b = _random_mv(pc.ctx, rng, [2]), _random_mv(pc.ctx, rng, [2])
    c = a * b - b * a
    return float(np.abs(np.where(GRADE == 2, 0, c.coeffs)).max()) / max(1.0, c.norm())


def c_cliff(pc):
    return pc.tf.clifford_residual()


def c_nondegenerate(pc):
    d = abs(np.linalg.det(pc.frame.e))
    return 0.0 if d > 1e-12 else np.inf


def c_christoffel_symmetry(pc):
    gam = pc.frame.gamma
    return _rel(gam, gam.transpose(1, 0, 2))


def c_riemann_symmetries(pc):
    return max(riemann_symmetry_residuals(pc.frame).values())


def c_metric_compat(pc):
    return max(metric_compatibility_residual(pc.frame).values())


def c_bianchi(pc):
    return bianchi_residual(pc.frame)


def c_ricci_commutator(pc):
    _, a, da, d2a = _covector_partials(pc, pc.rng("geometry.ricci-commutator"))
    return ricci_commutator_residual(pc.frame, a, da, d2a)


def c_oracle(pc):
    o = oracle_frame(pc.geo, pc.x)
    f = pc.frame
    return max(_rel(o.g, f.g), _rel(o.gamma, f.gamma), _rel(o.riemann, f.riemann))


def c_schwarzschild_ricci(pc):
    return float(np.abs(pc.frame.ricci).max())


def c_kretschmann(pc):
    M = pc.geo.parameters["M"]
    r = pc.x[1]
    exact = 48 * M ** 2 / r ** 6
    return abs(pc.frame.kretschmann - exact) / exact


def c_inverse(pc):
    return pc.tf.inverse_residual()


def c_lemma(pc):
    rng = pc.rng("tetrad.lemma")
    r = 0.0
    for k in range(5):
        slots = "".join(rng.choice(["u", "l"], size=int(rng.integers(0, 3))))
        shape = (4,) * len(slots) + (16,)
        data = np.where(GRADE == k, rng.normal(size=shape), 0.0)
        u = TensorForm(data, pc.ctx, slots)
        out = lemma_contraction(u, pc.tf)
        r = max(r, _rel(out.data, LEMMA_FACTORS[k] * data))
    return r


def c_contraction_four(pc):
    return pc.tf.contraction_residual()


def c_rotation_preserves(pc):
    s = sample_spin_element(int(pc.rng("tetrad.rotation-preserves").integers(1 << 30)), 0.5)
    rot = lorentz_rotate(pc.tf, s.jet(pc.tf).truncate(0))
    return max(rot.clifford_residual(), _rel(rotated_metric(rot), pc.frame.g))


def c_rotation_plane(pc):
    theta = float(pc.rng("tetrad.rotation-plane").uniform(-2, 2))
    coeffs = np.zeros(len(PAIRS))
    coeffs[PAIRS.index((1, 2))] = 0.5 * theta
    rot = lorentz_rotate(pc.tf, SpinElement(coeffs).jet(pc.tf).truncate(0))
    return float(np.abs(rot.up[0].value - pc.tf.up[0].value).max())


def c_secondary(pc):
    return max(pc.sg.reconstruction_residuals().values())


def c_i_squared(pc):
    I = pc.sg.mv("I")
    one = np.zeros(16)
    one[0] = 1.0
    return float(np.abs((I * I).coeffs + one).max())


def c_spin_membership(pc):
    s = sample_spin_element(int(pc.rng("tetrad.spin-membership").integers(1 << 30)), 0.3)
    return s.membership_residual(pc.frame)


def c_b_grade(pc):
    return pc.B.grade_residual()


def c_b_reconstruction(pc):
    return pc.B.reconstruction_residual()


def c_b_wedge(pc):
    return float(np.abs(b_wedge_values(pc.tf) - pc.B.values).max())


def c_b_antisymmetric(pc):
    b = pc.B.b
    return float(np.abs(b + b.transpose(0, 2, 1)).max())


def c_b_spin_oracle(pc):
    return float(np.abs(pc.B.b - 0.5 * spin_connection_oracle(pc.frame)).max())


def c_theorem_constant(pc):
    s = sample_spin_element(int(pc.rng("connection.theorem-constant").integers(1 << 30)), 0.4)
    return connection_transform_check(pc.tf, s)["transform"]


def c_theorem_grade(pc):
    s = sample_spin_element(int(pc.rng("connection.theorem-grade").integers(1 << 30)), 0.4)
    return connection_transform_check(pc.tf, s)["grade"]


def c_theorem_position(pc):
    s = sample_spin_element(int(pc.rng("connection.theorem-position").integers(1 << 30)), 0.4,
                            position_dependent=True, geo=pc.geo)
    return connection_transform_check(pc.tf, s)["transform"]


def c_upsilon_leibniz(pc):
    rng = pc.rng("connection.upsilon-leibniz")
    u = random_form_field(pc.geo, rng, basis="tetrad", terms=1)
    v = random_form_field(pc.geo, rng, basis="tetrad", terms=1)
    uv = _tetrad_product_field(pc, u, v).jet(pc.frame, 1)
    prod = u.jet(pc.frame, 1).mul(v.jet(pc.frame, 1))
    return _rel(uv.d1, prod.d1)


def c_d_tetrad(pc):
    r = 0.0
    for j in pc.tf.up + pc.tf.down:
        r = max(r, float(np.abs(d_operator(pc.B, j).value).max()))
    return r


def c_d_leibniz(pc):
    rng = pc.rng("connection.d-leibniz")
    u = random_form_field(pc.geo, rng).jet(pc.frame, 1)
    v = random_form_field(pc.geo, rng, complex_=True).jet(pc.frame, 1)
    lhs = d_operator(pc.B, u.mul(v)).value
    rhs = d_operator(pc.B, u).mul(v.truncate(0)).value + u.truncate(0).mul(d_operator(pc.B, v)).value
    # u has no slots, so (u)(D v) keeps the derivative slot first
    return _rel(lhs, rhs)


def c_d_commutator(pc):
    rng = pc.rng("connection.d-commutator")
    k = int(rng.integers(0, 5))
    u = random_form_field(pc.geo, rng, grades=[k]).jet(pc.frame, 2)
    return float(np.abs(d_commutator(pc.B, u)).max())


def c_d_commutator_slot(pc):
    rng = pc.rng("connection.d-commutator-slot")
    u = random_form_field(pc.geo, rng, slots="l", grades=[1]).jet(pc.frame, 2)
    return float(np.abs(d_commutator(pc.B, u)).max())


def c_curvature(pc):
    return float(np.abs(curvature_two_form(pc.B).data - riemann_two_form(pc.frame).data).max())


def c_curvature_antisymmetric(pc):
    C = curvature_two_form(pc.B).data
    return float(np.abs(C + C.transpose(1, 0, 2)).max())


def c_b_generators(pc):
    return float(np.abs(b_from_generators(pc.sg) - pc.B.values).max())


def c_field_strength_antisymmetric(pc):
    rng = pc.rng("connection.field-strength-antisymmetric")
    A = random_form_field(pc.geo, rng, slots="l", grades=[2]).jet(pc.frame, 1)
    F = field_strength(A, pc.B).value
    return float(np.abs(F + F.transpose(1, 0, 2)).max())


def c_idempotent(pc):
    return pc.basis.idempotent_residual()


def c_rank(pc):
    return 0.0 if pc.basis.rank() == 4 else np.inf


def c_eigen(pc):
    return max(pc.basis.eigen_residuals().values())


def c_homomorphism(pc):
    rng = pc.rng("dirac.gamma-homomorphism")
    u, v = _random_mv(pc.ctx, rng, complex_=True), _random_mv(pc.ctx, rng, complex_=True)
    gu, gv, guv = gamma_of(u, pc.basis), gamma_of(v, pc.basis), gamma_of(u * v, pc.basis)
    return _rel(guv, gu @ gv)


def c_gamma_a(pc):
    target = 2 * ETA[:, :, None, None] * np.eye(4)
    return float(np.abs(pc.rep.anticommutators("a") - target).max())


def c_gamma_mu(pc):
    target = 2 * pc.frame.g_inv[:, :, None, None] * np.eye(4)
    return _rel(pc.rep.anticommutators("mu"), target)


def c_gamma_frame(pc):
    return pc.rep.frame_residual()


def c_gamma_spin(pc):
    gb = np.array([gamma_of(pc.B[m], pc.basis) for m in range(4)])
    return float(np.abs(gb - spin_term(pc.B.b, pc.rep.gamma_a)).max())


def c_trace(pc):
    u = _random_mv(pc.ctx, pc.rng("dirac.trace-consistency"), complex_=True)
    return abs(0.25 * np.trace(gamma_of(u, pc.basis)) - u.coeffs[0])


def c_decompose(pc):
    psi = _random_mv(pc.ctx, pc.rng("dirac.spinor-decomposition"), complex_=True)
    c = decompose_spinor(psi, pc.basis)
    return _rel(pc.basis.T @ c, (psi * pc.basis.t).coeffs)


def c_reduction(pc):
    rng = pc.rng("dirac.reduction")
    P = random_form_field(pc.geo, rng, complex_=True)
    a = rng.normal(size=4)
    res = reduction_equivalence(P, a, float(rng.uniform(0, 2)), pc.tf, pc.B, pc.sg,
                                pc.basis, pc.rep)
    return res.residual / (1.0 + float(np.abs(res.psi).max()))


def c_golden(pc):
    return float(np.abs(pc.rep.gamma_a[0] - GOLDEN_GAMMA0).max())


def c_second_derivative(pc):
    return pc.second_derivative.max_deviation


def c_second_derivative_control(pc):
    # the same bumps as c_second_derivative, so a pass there is not vacuous
    return pc.second_derivative.control


def c_l2_fd(pc):
    return abs(l2_density(pc.frame) - l2_density_fd(pc.geo, pc.x))


def c_codifferential_nilpotent(pc):
    w = random_form_field(pc.geo, pc.rng("lagrangian.codifferential-nilpotent"), grades=[2])
    d = codifferential(codifferential(w.jet(pc.frame, 2)))
    return float(np.abs(d.value).max())


def _psi_a(pc, cid):
    rng = pc.rng(cid)
    P = random_form_field(pc.geo, rng, complex_=True).jet(pc.frame, 1)
    exprs, a, _, _ = _covector_partials(pc, rng)
    A = _abelian_field(pc, exprs).jet(pc.frame, 2)
    return rng, P, exprs, a, A


def c_main_dirac(pc):
    rng, P, exprs, a, A = _psi_a(pc, "lagrangian.main-dirac")
    m = float(rng.uniform(0, 2))
    res = main_residuals(P, A, EquationConfig(mass=m), SourceTerms(), pc.B, pc.sg)
    td = tensor_dirac_residual(P, a, m, pc.B, pc.sg)
    return float(np.abs(res.dirac.coeffs - td.coeffs).max())


def c_yang_mills(pc):
    rng = pc.rng("lagrangian.yang-mills")
    exprs, a, da, d2a = _covector_partials(pc, rng)
    A = _abelian_field(pc, exprs).jet(pc.frame, 2)
    J = abelian_current(pc.frame, a, da, d2a, pc.sg.I.value)
    P = random_form_field(pc.geo, rng, complex_=True).jet(pc.frame, 1)
    res = main_residuals(P, A, EquationConfig(), SourceTerms(J=J), pc.B, pc.sg)
    return float(np.abs(res.yang_mills).max()) / max(1.0, float(np.abs(J).max()))


def c_einstein(pc):
    from .geometry import einstein_tensor
    G = einstein_tensor(pc.frame)
    P = random_form_field(pc.geo, pc.rng("lagrangian.einstein"), complex_=True).jet(pc.frame, 1)
    exprs = [const(0.0)] * 4
    A = _abelian_field(pc, exprs).jet(pc.frame, 2)
    res = main_residuals(P, A, EquationConfig(), SourceTerms(T=-G), pc.B, pc.sg)
    return float(np.abs(res.einstein).max())


def c_gauge(pc):
    rng = pc.rng("lagrangian.gauge-invariance")
    exprs, *_ = _covector_partials(pc, rng)
    chi = random_expression(pc.geo, rng, 3)
    shifted = [add(e, derivative(chi, [pc.geo.coordinates[m]])) for m, e in enumerate(exprs)]
    P = random_form_field(pc.geo, rng, complex_=True).jet(pc.frame, 1)
    cfg = EquationConfig()
    l1a = l0l1_density(P, _abelian_field(pc, exprs).jet(pc.frame, 1), cfg, pc.B, pc.sg)[1]
    l1b = l0l1_density(P, _abelian_field(pc, shifted).jet(pc.frame, 1), cfg, pc.B, pc.sg)[1]
    return abs(l1a - l1b) / max(1.0, abs(l1a))


def c_l0_real(pc):
    from .lagrangian import dirac_operator_p
    rng, P, exprs, a, A = _psi_a(pc, "lagrangian.l0-real")
    cfg = EquationConfig(mass=float(rng.uniform(0, 2)))
    t = pc.ctx.table
    Pv = dirac_operator_p(P, A, cfg, pc.B, pc.sg)
    X = outer_product(cfg.conj(P.value), Pv, t) + outer_product(cfg.conj(Pv), P.value, t)
    l0 = 2.0 * outer_product(pc.sg.H.value.astype(complex), X, t)[0]
    return abs(np.imag(l0)) / max(1.0, abs(l0))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckSpec:
    id: str
    suite: str
    tolerance: float | None
    fn: Callable[[PointContext], float]
    description: str
    kind: str = "max"
    max_points: int | None = None
    geometries: tuple[str, ...] | None = None

    def applies(self, geo: GeometryDefinition) -> bool:
        return self.geometries is None or geo.name in self.geometries


# Invariants that must each be covered by exactly one check.
INVARIANTS: dict[str, tuple[str, ...]] = {
    "clifford": ("metric-context", "grade-decomposition", "associativity",
                 "bivector-closure", "tetrad-relation"),
    "geometry": ("nondegenerate", "christoffel-symmetry", "riemann-symmetries",
                 "metric-compatibility", "bianchi", "ricci-commutator", "oracle-equivalence",
                 "schwarzschild-ricci", "kretschmann"),
    "tetrad": ("inverse-components", "lemma", "contraction-four", "rotation-preserves",
               "rotation-plane", "secondary-reconstruction", "i-squared", "spin-membership"),
    "connection": ("b-grade", "b-reconstruction", "b-wedge-clifford", "b-antisymmetric",
                   "b-spin-oracle", "theorem-constant", "theorem-grade", "theorem-position",
                   "upsilon-leibniz", "d-tetrad", "d-leibniz", "d-commutator",
                   "d-commutator-slot", "curvature-riemann", "curvature-antisymmetric",
                   "b-from-generators", "field-strength-antisymmetric"),
    "dirac": ("idempotent", "rank", "eigen-relations", "gamma-homomorphism",
              "gamma-anticommutation", "gamma-metric", "gamma-frame", "gamma-spin-term",
              "trace-consistency", "spinor-decomposition", "reduction", "golden-gamma0"),
    "lagrangian": ("second-derivative", "second-derivative-control", "l2-fd",
                   "codifferential-nilpotent", "main-dirac", "yang-mills", "einstein",
                   "gauge-invariance", "l0-real"),
}


def _spec(cid, tol, fn, desc, **kw) -> CheckSpec:
    return CheckSpec(cid, cid.split(".")[0], tol, fn, desc, **kw)


REGISTRY: tuple[CheckSpec, ...] = (
    _spec("clifford.metric-context", 1e-12, c_metric_context, "g symmetric, g g^-1 = 1, Lorentzian signature"),
    _spec("clifford.grade-decomposition", 1e-14, c_grade_decomposition, "sum of grade parts equals the element"),
    _spec("clifford.associativity", 1e-12, c_associativity, "(uv)w = u(vw), relative"),
    _spec("clifford.bivector-closure", 1e-12, c_bivector_closure, "[a,b] of 2-forms is a 2-form"),
    _spec("clifford.tetrad-relation", 1e-10, c_cliff, "e^a e^b + e^b e^a = 2 eta^ab"),
    _spec("geometry.nondegenerate", 0.0, c_nondegenerate, "tetrad determinant is nonzero"),
    _spec("geometry.christoffel-symmetry", 1e-9, c_christoffel_symmetry, "Gamma symmetric in lower indices"),
    _spec("geometry.riemann-symmetries", 1e-9, c_riemann_symmetries, "Riemann pair/antisymmetry/cyclic, Ricci symmetric"),
    _spec("geometry.metric-compatibility", 1e-9, c_metric_compat, "nabla g = nabla g^-1 = nabla delta = 0"),
    _spec("geometry.bianchi", 1e-7, c_bianchi, "divergence of the Einstein tensor"),
    _spec("geometry.ricci-commutator", 1e-8, c_ricci_commutator, "[nabla, nabla] a = -R a on random covectors"),
    _spec("geometry.oracle-equivalence", 1e-5, c_oracle, "symbolic vs finite-difference g, Gamma, Riemann"),
    _spec("geometry.schwarzschild-ricci", 1e-8, c_schwarzschild_ricci, "vacuum Ricci tensor",
          geometries=("schwarzschild",)),
    _spec("geometry.kretschmann", 1e-8, c_kretschmann, "Kretschmann = 48 M^2 / r^6, relative",
          geometries=("schwarzschild",)),
    _spec("tetrad.inverse-components", 1e-12, c_inverse, "e^mu_a e_nu^a = delta"),
    _spec("tetrad.lemma", 1e-10, c_lemma, "e^a U e_a = (4,-2,0,2,-4)_k U"),
    _spec("tetrad.contraction-four", 1e-12, c_contraction_four, "e^a e_a = 4"),
    _spec("tetrad.rotation-preserves", 1e-10, c_rotation_preserves, "rotated tetrad keeps 2 eta and g"),
    _spec("tetrad.rotation-plane", 1e-12, c_rotation_plane, "rotation in the 1-2 plane fixes e^0"),
    _spec("tetrad.secondary-reconstruction", 1e-10, c_secondary, "e^a rebuilt from H, I, K, l"),
    _spec("tetrad.i-squared", 1e-12, c_i_squared, "I^2 = -1"),
    _spec("tetrad.spin-membership", 1e-10, c_spin_membership, "reversion(S) S = 1 for sampled S"),
    _spec("connection.b-grade", 1e-10, c_b_grade, "B_mu is a pure 2-form"),
    _spec("connection.b-reconstruction", 1e-10, c_b_reconstruction, "B_mu = 1/2 b_mu_ab e^a ^ e^b"),
    _spec("connection.b-wedge-clifford", 1e-10, c_b_wedge, "wedge and Clifford forms of B agree"),
    _spec("connection.b-antisymmetric", 0.0, c_b_antisymmetric, "b_mu_ab = -b_mu_ba"),
    _spec("connection.b-spin-oracle", 1e-9, c_b_spin_oracle, "b = 1/2 e_a_nu nabla_mu e^nu_b"),
    _spec("connection.theorem-constant", 1e-9, c_theorem_constant, "B transformation law, constant S"),
    _spec("connection.theorem-grade", 1e-9, c_theorem_grade, "S nabla S^-1 is a 2-form"),
    _spec("connection.theorem-position", 1e-5, c_theorem_position,
          "B transformation law, position-dependent S (finite differences)", max_points=10),
    _spec("connection.upsilon-leibniz", 1e-9, c_upsilon_leibniz, "nabla(UV) via symbolic product vs Leibniz"),
    _spec("connection.d-tetrad", 1e-9, c_d_tetrad, "D e^a = D e_a = 0"),
    _spec("connection.d-leibniz", 1e-9, c_d_leibniz, "D(UV) = (DU)V + U DV"),
    _spec("connection.d-commutator", 1e-8, c_d_commutator, "[D_mu, D_nu] U = 0 for U without slots"),
    _spec("connection.d-commutator-slot", None, c_d_commutator_slot,
          "[D_mu, D_nu] U for covector-valued U (reported)", kind="report"),
    _spec("connection.curvature-riemann", 1e-8, c_curvature, "C = 1/2 R dx ^ dx"),
    _spec("connection.curvature-antisymmetric", 0.0, c_curvature_antisymmetric, "C_mu_nu = -C_nu_mu"),
    _spec("connection.b-from-generators", 1e-9, c_b_generators, "H, I, K formula equals B"),
    _spec("connection.field-strength-antisymmetric", 0.0, c_field_strength_antisymmetric, "F_mu_nu = -F_nu_mu"),
    _spec("dirac.idempotent", 1e-12, c_idempotent, "t t = t"),
    _spec("dirac.rank", 0.0, c_rank, "ideal basis has rank 4"),
    _spec("dirac.eigen-relations", 1e-12, c_eigen, "H t = t, I t = i t"),
    _spec("dirac.gamma-homomorphism", 1e-10, c_homomorphism, "gamma(UV) = gamma(U) gamma(V), relative"),
    _spec("dirac.gamma-anticommutation", 1e-10, c_gamma_a, "gamma^a gamma^b + gamma^b gamma^a = 2 eta"),
    _spec("dirac.gamma-metric", 1e-10, c_gamma_mu, "gamma^mu gamma^nu + gamma^nu gamma^mu = 2 g^mu_nu, relative"),
    _spec("dirac.gamma-frame", 1e-12, c_gamma_frame, "gamma^mu = gamma^c e^mu_c"),
    _spec("dirac.gamma-spin-term", 1e-10, c_gamma_spin, "gamma(B_mu) = 1/4 b_mu_ab [gamma^a, gamma^b]"),
    _spec("dirac.trace-consistency", 1e-10, c_trace, "1/4 trace gamma(U) = scalar part of U"),
    _spec("dirac.spinor-decomposition", 1e-10, c_decompose, "Psi t = psi^k t_k"),
    _spec("dirac.reduction", 1e-8, c_reduction, "tensor residual times t equals matrix residual"),
    _spec("dirac.golden-gamma0", 1e-12, c_golden, "gamma^0 = diag(1, 1, -1, -1)",
          geometries=("minkowski",)),
    _spec("lagrangian.second-derivative", 1e-8, c_second_derivative,
          "L2 unchanged by second-derivative bumps", max_points=10),
    _spec("lagrangian.second-derivative-control", 1e-3, c_second_derivative_control,
          "the same bumps change R", kind="min", max_points=10),
    _spec("lagrangian.l2-fd", 1e-5, c_l2_fd, "L2 symbolic vs finite differences", max_points=10),
    _spec("lagrangian.codifferential-nilpotent", 1e-8, c_codifferential_nilpotent, "delta delta = 0 on 2-forms"),
    _spec("lagrangian.main-dirac", 1e-12, c_main_dirac, "equation (i) with defaults equals the tensor residual"),
    _spec("lagrangian.yang-mills", 1e-9, c_yang_mills, "abelian field equation with fabricated current"),
    _spec("lagrangian.einstein", 1e-12, c_einstein, "Einstein residual with T = -G vanishes"),
    _spec("lagrangian.gauge-invariance", 1e-9, c_gauge, "L1 invariant under abelian gauge shifts"),
    _spec("lagrangian.l0-real", 1e-12, c_l0_real, "Dirac density is real"),
)


def _assert_registry() -> None:
    ids = [c.id for c in REGISTRY]
    if len(ids) != len(set(ids)):
        raise AssertionError("duplicate check ids in registry")
    expected = {f"{suite}.{name}" for suite, names in INVARIANTS.items() for name in names}
    missing = expected - set(ids)
    extra = set(ids) - expected
    if missing or extra:
        raise AssertionError(f"check registry mismatch: missing {sorted(missing)}, extra {sorted(extra)}")


_assert_registry()


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


@dataclass
class CheckRecord:
    check_id: str
    points_evaluated: int
    max_residual: float
    tolerance: float | None
    passed: bool
    kind: str = "max"

    def to_dict(self) -> dict:
        return {"check-id": self.check_id, "points-evaluated": self.points_evaluated,
                "max-residual": self.max_residual, "tolerance": self.tolerance,
                "pass": self.passed, "kind": self.kind}


@dataclass
class SuiteReport:
    tool_version: str
    geometry: str
    seed: int
    point_count: int
    records: list[CheckRecord]
    wall_time: float = 0.0
    suite: str = "all"

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self, include_time: bool = True) -> dict:
        d = {"tool-version": self.tool_version, "geometry": self.geometry, "suite": self.suite,
             "seed": self.seed, "point-count": self.point_count,
             "records": [r.to_dict() for r in self.records], "pass": self.passed}
        if include_time:
            d["wall-time"] = self.wall_time
        return d

    def record(self, check_id: str) -> CheckRecord:
        for r in self.records:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)


def thread_cap() -> int:
    env = os.environ.get("TETRAD_FORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"TETRAD_FORGE_THREADS must be an integer, got '{env}'")
    return 1


def _eval(spec: CheckSpec, pc: PointContext) -> float:
    try:
        v = float(spec.fn(pc))
    except ArithmeticError:
        v = np.inf
    return v if np.isfinite(v) else np.inf


def run_suite(geo: GeometryDefinition, suite: str = "all", points: int = 100, seed: int = 0,
              tol_overrides: Mapping[str, float] | None = None,
              checks: Iterable[str] | None = None, threads: int | None = None,
              point_limits: Mapping[str, int] | None = None) -> SuiteReport:
    """Run the checks of ``suite`` at ``points`` seeded sample points.

    ``checks`` restricts the run to the given ids; ``point_limits`` caps
    the number of points for individual checks (replacing their default
    cap).  Checks that do not apply to ``geo`` are skipped.
    """
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite '{suite}'")
    tol_overrides = dict(tol_overrides or {})
    known = {c.id for c in REGISTRY}
    for k in tol_overrides:
        if k not in known:
            raise ValueError(f"unknown check id in tolerance override: '{k}'")
    point_limits = dict(point_limits or {})
    for k in point_limits:
        if k not in known:
            raise ValueError(f"unknown check id in point limits: '{k}'")
    selected = [c for c in REGISTRY if (suite == "all" or c.suite == suite) and c.applies(geo)]
    if checks is not None:
        wanted = set(checks)
        if wanted - known:
            raise ValueError(f"unknown check ids: {sorted(wanted - known)}")
        selected = [c for c in selected if c.id in wanted]
    start = time.perf_counter()
    pts = geo.sample_points(points, seed)
    contexts = [PointContext(geo, p, seed, i) for i, p in enumerate(pts)]

    def per_point(pc: PointContext) -> dict[str, float]:
        out = {}
        for spec in selected:
            limit = point_limits.get(spec.id, spec.max_points)
            limit = points if limit is None else limit
            if pc.index < limit:
                out[spec.id] = _eval(spec, pc)
        return out

    n_workers = min(threads or thread_cap(), max(1, len(contexts)))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(per_point, contexts))
    else:
        results = [per_point(pc) for pc in contexts]

    records = []
    for spec in selected:
        vals = [r[spec.id] for r in results if spec.id in r]
        tol = tol_overrides.get(spec.id, spec.tolerance)
        if spec.kind == "min":
            agg = min(vals) if vals else np.inf
            ok = agg >= tol
        else:
            agg = max(vals) if vals else 0.0
            ok = True if spec.kind == "report" else agg <= tol
        records.append(CheckRecord(spec.id, len(vals), float(agg), tol, bool(ok), spec.kind))
    return SuiteReport(__version__, geo.name, seed, points, records,
                       time.perf_counter() - start, suite)
