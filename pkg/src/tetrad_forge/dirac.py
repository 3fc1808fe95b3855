"""Matrix representation on a left ideal and the Dirac-type equation.

The idempotent ``t = (1 + H)(1 - iI)/4`` generates a four-dimensional left
ideal with basis ``t1 = t, t2 = K t, t3 = -I l t, t4 = -K I l t``.  Left
multiplication on that basis gives 4x4 complex matrices ``gamma(U)``, and
the tensor equation multiplied on the right by ``t`` becomes a matrix
Dirac equation for the coordinates of ``Psi t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .clifford import MetricContext, Multivector, blade_index, outer_product
from .connection import BConnection
from .fields import ExpressionField, FormJet, tetrad_blade_jets
from .geometry import ETA, PointFrame
from .tetrad import SecondaryGenerators, TetradFrame

__all__ = [
    "IdealBasis", "GammaRep", "IdealError", "ideal_basis", "ideal_basis_from_values",
    "gamma_of", "gamma_rep", "decompose_spinor", "tensor_dirac_residual",
    "matrix_dirac_residual", "spin_term", "reduction_equivalence",
    "spinor_components", "plane_wave_residual", "GOLDEN_GAMMA0",
]

GOLDEN_GAMMA0 = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)


class IdealError(ArithmeticError):
    """An element could not be represented on the ideal basis."""


@dataclass
class IdealBasis:
    t: Multivector
    basis: list[Multivector]
    T: np.ndarray
    H: Multivector
    I: Multivector

    @property
    def ctx(self) -> MetricContext:
        return self.t.ctx

    def idempotent_residual(self) -> float:
        return float(np.abs((self.t * self.t).coeffs - self.t.coeffs).max())

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.linalg.matrix_rank(self.T, tol=tol))

    def eigen_residuals(self) -> dict[str, float]:
        t = self.t
        return {"Ht=t": float(np.abs((self.H * t).coeffs - t.coeffs).max()),
                "It=it": float(np.abs((self.I * t).coeffs - 1j * t.coeffs).max())}


def ideal_basis_from_values(H: Multivector, I: Multivector, K: Multivector,
                            ell: Multivector) -> IdealBasis:
    ctx = H.ctx
    one = Multivector.scalar(1.0, ctx).as_complex()
    t = ((one + H) * (one - I * 1j)) * 0.25
    basis = [t, K * t, -(I * ell * t), -(K * I * ell * t)]
    T = np.array([b.coeffs for b in basis]).T
    return IdealBasis(t, basis, T, H, I)


def ideal_basis(sg: SecondaryGenerators) -> IdealBasis:
    """The ideal basis at the point of ``sg``."""
    return ideal_basis_from_values(sg.mv("H"), sg.mv("I"), sg.mv("K"), sg.mv("ell"))


def _solve(T: np.ndarray, rhs: np.ndarray, tol: float) -> np.ndarray:
    x, *_ = np.linalg.lstsq(T, rhs, rcond=None)
    res = np.abs(T @ x - rhs).max(initial=0.0)
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if res > tol * scale:
        raise IdealError(f"element does not act on the ideal (residual {res:.3g})")
    return x


def gamma_of(u: Multivector, basis: IdealBasis, tol: float = 1e-10) -> np.ndarray:
    """gamma(U) defined by U t_k = gamma(U)^n_k t_n."""
    cols = np.array([(u * tk).coeffs for tk in basis.basis]).T  # (16, 4)
    return _solve(basis.T, cols, tol)


def decompose_spinor(psi: Multivector, basis: IdealBasis, tol: float = 1e-10) -> np.ndarray:
    """Coordinates of Psi t in the ideal basis."""
    return _solve(basis.T, (psi * basis.t).coeffs, tol)


@dataclass
class GammaRep:
    """gamma^a = gamma(e^a), gamma^mu = gamma(dx^mu)."""

    gamma_a: np.ndarray   # (4, 4, 4)
    gamma_mu: np.ndarray  # (4, 4, 4)
    e_inv: np.ndarray

    @property
    def identity(self) -> np.ndarray:
        return np.eye(4, dtype=complex)

    def anticommutators(self, which: str = "a") -> np.ndarray:
        g = self.gamma_a if which == "a" else self.gamma_mu
        prod = np.einsum("aij,bjk->abik", g, g)
        return prod + prod.transpose(1, 0, 2, 3)

    def frame_residual(self) -> float:
        """max |gamma^mu - gamma^c e^mu_c|."""
        rec = np.einsum("cij,cm->mij", self.gamma_a, self.e_inv)
        return float(np.abs(rec - self.gamma_mu).max())


def gamma_rep(tf: TetradFrame, basis: IdealBasis) -> GammaRep:
    ga = np.array([gamma_of(tf.e(a), basis) for a in range(4)])
    gm = np.array([gamma_of(Multivector.dx(m, tf.ctx), basis) for m in range(4)])
    return GammaRep(ga, gm, tf.e_inv)


def spin_term(b: np.ndarray, gamma_a: np.ndarray) -> np.ndarray:
    """1/4 b_{mu ab} [gamma^a, gamma^b] for each mu."""
    comm = (np.einsum("aij,bjk->abik", gamma_a, gamma_a)
            - np.einsum("bij,ajk->abik", gamma_a, gamma_a))
    return 0.25 * np.einsum("mab,abik->mik", b, comm)


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------


def tensor_dirac_residual(psi: FormJet, a: Sequence[float], m: float,
                          B: BConnection, sg: SecondaryGenerators) -> Multivector:
    """dx^mu (D_mu Psi + a_mu Psi I + B_mu Psi) + m Psi H I at the point."""
    ctx = B.tf.ctx
    t = ctx.table
    psi0 = psi.truncate(1)
    d_psi = psi0.derivative() - B.jet.truncate(0).commutator(psi0.truncate(0))
    pv = psi.value
    I = sg.I.value
    HI = outer_product(sg.H.value, I, t)
    inner = (d_psi.value
             + np.asarray(a, dtype=float)[:, None] * outer_product(pv, I, t)[None]
             + outer_product(B.values, pv, t))
    dx = np.zeros((4, 16))
    for mu in range(4):
        dx[mu, blade_index(mu)] = 1.0
    out = np.einsum("mk->k", np.einsum("mi,ikj,mj->mk", dx, t, inner))
    out = out + m * outer_product(pv, HI, t)
    return Multivector(out, ctx)


def matrix_dirac_residual(psi: np.ndarray, dpsi: np.ndarray, a: Sequence[float],
                          m: float, rep: GammaRep, b: np.ndarray) -> np.ndarray:
    """gamma^mu (d_mu + i a_mu + 1/4 b_{mu ab}[gamma^a, gamma^b]) psi + i m psi.

    Here b_{mu ab} = 1/2 omega_{mu ab} with omega_{mu ab} = e_{a nu} nabla_mu e^nu_b, so
    the spin term equals 1/8 omega_{mu ab}[gamma^a, gamma^b] in the usual curved-space form.
    """
    a = np.asarray(a, dtype=float)
    inner = dpsi + 1j * a[:, None] * psi[None] + spin_term(b, rep.gamma_a) @ psi
    return np.einsum("mij,mj->i", rep.gamma_mu, inner) + 1j * m * psi


@lru_cache(maxsize=1)
def _minkowski_ideal():
    """Ideal data in the tetrad blade basis, where the product is the Minkowski one."""
    ctx = MetricContext.minkowski()
    e = [Multivector.dx(a, ctx) for a in range(4)]
    H, I, K = e[0], -(e[1] * e[2]), -(e[1] * e[3])
    ell = e[0] * e[1] * e[2] * e[3]
    basis = ideal_basis_from_values(H, I, K, ell)
    # coordinates of (c t) for every blade c, as a 4x16 map
    right_t = np.array([(Multivector(np.eye(16)[i], ctx) * basis.t).coeffs
                        for i in range(16)]).T            # (16 blades out, 16 blades in)
    proj = np.linalg.pinv(basis.T) @ right_t             # (4, 16)
    return basis, proj


def spinor_components(psi_field: ExpressionField, frame: PointFrame):
    """psi^k and d_mu psi^k of Psi t through tetrad-basis coordinates.

    In the tetrad blade basis the Clifford product has constant structure
    constants and ``t`` has constant coefficients, so the coordinates of
    ``Psi t`` are a fixed linear map of Psi's tetrad-basis coefficients.
    Those coefficients and their partials come from the coordinate-basis
    values through the tetrad blade matrix and its partials.
    """
    if psi_field.basis != "coordinate" or psi_field.slots:
        raise ValueError("expects a slotless field with coordinate-basis coefficients")
    c, dc = psi_field.partials(frame.x, 1)
    L, dL, _ = tetrad_blade_jets(frame.jet, 1)
    d = np.linalg.solve(L, c)
    dd = np.linalg.solve(L, (dc - np.einsum("rkA,A->rk", dL, d)).T).T
    _, proj = _minkowski_ideal()
    return proj @ d, dd @ proj.T


@dataclass
class ReductionResult:
    rho: np.ndarray
    matrix: np.ndarray
    psi: np.ndarray
    residual: float
    ideal_residual: float


def reduction_equivalence(psi_field: ExpressionField, a: Sequence[float], m: float,
                          tf: TetradFrame, B: BConnection, sg: SecondaryGenerators,
                          basis: IdealBasis | None = None,
                          rep: GammaRep | None = None) -> ReductionResult:
    """Compare the tensor residual times t with the matrix residual.

    Returns the ideal coordinates ``rho`` of (residual * t), the matrix
    residual for psi = coordinates of Psi t, and ``max |rho - matrix|``.
    """
    basis = basis or ideal_basis(sg)
    rep = rep or gamma_rep(tf, basis)
    jet = psi_field.jet(tf.frame, 1)
    r = tensor_dirac_residual(jet, a, m, B, sg)
    rt = (r * basis.t).coeffs
    rho, *_ = np.linalg.lstsq(basis.T, rt, rcond=None)
    ideal_res = float(np.abs(basis.T @ rho - rt).max())
    psi, dpsi = spinor_components(psi_field, tf.frame)
    mat = matrix_dirac_residual(psi, dpsi, a, m, rep, B.b)
    return ReductionResult(rho, mat, psi, float(np.abs(rho - mat).max()), ideal_res)


def plane_wave_residual(mass: float, momentum: Sequence[float], rep: GammaRep,
                        seed: int = 0) -> float:
    """Algebraic on-shell check of (gamma^mu k_mu - m) u = 0 on flat space.

    ``k_0`` is fixed by k_0^2 - |k|^2 = m^2 and ``u`` is taken from the
    image of the projector (gamma^mu k_mu + m).
    """
    kv = np.asarray(momentum, dtype=float)
    k0 = np.sqrt(mass ** 2 + kv @ kv)
    k = np.concatenate([[k0], -kv])  # lower-index components for eta = diag(1,-1,-1,-1)
    slash = np.einsum("mij,m->ij", rep.gamma_mu, k)
    proj = slash + mass * np.eye(4)
    rng = np.random.default_rng(seed)
    u = proj @ (rng.normal(size=4) + 1j * rng.normal(size=4))
    u = u / np.linalg.norm(u)
    return float(np.abs((slash - mass * np.eye(4)) @ u).max())
