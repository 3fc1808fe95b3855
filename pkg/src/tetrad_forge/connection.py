"""The connection B_mu built from the tetrad, the operators D_mu and curvature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import GRADE, WEDGE_TABLE, Multivector, TensorForm, blade_index, outer_product
from .fields import FormJet, tetrad_blade_jets
from .geometry import ETA, PointFrame
from .tetrad import (PAIRS, SecondaryGenerators, SpinElement, TetradFrame,
                     lorentz_rotate)

__all__ = [
    "upsilon", "BConnection", "b_connection", "b_wedge_values", "extract_b",
    "connection_transform_check", "d_operator", "d_commutator",
    "curvature_two_form", "riemann_two_form", "b_from_generators",
    "field_strength", "spin_connection_oracle", "GRADE2",
]

GRADE2 = [blade_index(a, b) for a, b in PAIRS]


def upsilon(f: FormJet, mu: int | None = None) -> FormJet:
    """Componentwise Levi-Civita derivative; the new lower slot comes first."""
    d = f.derivative()
    return d if mu is None else d.component(mu)


@dataclass
class BConnection:
    """B_mu as a jet with one lower slot plus its tetrad coefficients.

    ``b[mu, a, b]`` satisfies B_mu = 1/2 b_{mu ab} e^a ^ e^b.
    """

    jet: FormJet
    b: np.ndarray
    tf: TetradFrame

    def __getitem__(self, mu: int) -> Multivector:
        return Multivector(self.jet.value[mu], self.tf.ctx)

    @property
    def values(self) -> np.ndarray:
        return self.jet.value

    def grade_residual(self) -> float:
        return float(np.abs(np.where(GRADE == 2, 0.0, self.jet.value)).max())

    def reconstruction_residual(self) -> float:
        lam = tetrad_blade_jets(self.tf.frame.jet, 0)[0]
        rec = np.zeros((4, 16))
        for k, (a, c) in enumerate(PAIRS):
            rec += np.outer(self.b[:, a, c], lam[:, GRADE2[k]])
        return float(np.abs(rec - self.jet.value).max())


def b_wedge_values(tf: TetradFrame) -> np.ndarray:
    """-1/4 e^a ^ nabla_mu e_a, using only the exterior product."""
    out = np.zeros((4, 16))
    for a in range(4):
        out += np.einsum("i,ikj,mj->mk", tf.up[a].value, WEDGE_TABLE, tf.down[a].d1)
    return -0.25 * out


def extract_b(values: np.ndarray, frame: PointFrame) -> np.ndarray:
    """Tetrad coefficients b[mu, a, b] of grade-2 values ``values[mu]``.

    Solves the 6x6 change of basis from dx^mu ^ dx^nu to e^a ^ e^b.
    """
    lam = tetrad_blade_jets(frame.jet, 0)[0]
    block = lam[np.ix_(GRADE2, GRADE2)]
    coef = np.linalg.solve(block, values[..., GRADE2].T).T  # [mu, pair]
    b = np.zeros(values.shape[:-1] + (4, 4), dtype=coef.dtype)
    for k, (a, c) in enumerate(PAIRS):
        b[..., a, c] = coef[..., k]
        b[..., c, a] = -coef[..., k]
    return b


def b_connection(tf: TetradFrame) -> BConnection:
    """B_mu = -1/4 e^a nabla_mu e_a (Clifford form) with first derivatives."""
    acc = None
    for a in range(4):
        term = tf.up[a].mul(tf.down[a].derivative())
        acc = term if acc is None else acc + term
    jet = acc.scale(-0.25)
    return BConnection(jet, extract_b(jet.value, tf.frame), tf)


def spin_connection_oracle(frame: PointFrame) -> np.ndarray:
    """omega[mu, a, b] = e_{a nu} nabla_mu e^nu_b from tensor calculus alone.

    ``e^nu_b`` are the inverse tetrad components; the covariant derivative
    acts on the upper index only.
    """
    einv = frame.e_inv                                       # [b, nu]
    jet = frame.jet
    # d_mu e^nu_b = - e^nu_c (d_mu e_rho^c) e^rho_b
    deinv = -np.einsum("cn,mrc,br->mbn", einv, jet.de, einv)
    nabla = deinv + np.einsum("mln,bl->mbn", frame.gamma, einv)  # [mu, b, nu]
    e_low = jet.e @ ETA                                      # e_{nu a}
    return np.einsum("na,mbn->mab", e_low, nabla)


def connection_transform_check(tf: TetradFrame, s: SpinElement) -> dict[str, float]:
    """Compare B computed from S^{-1} e^a S with S^{-1} B S - S^{-1} nabla S.

    Returns the transformation residual and the grade residual of
    S nabla_mu S^{-1} (which must be a pure 2-form).
    """
    s_jet = s.jet(tf)
    rotated = lorentz_rotate(tf, s_jet.truncate(1), check=True, tol=1e-9)
    lhs = b_connection_values(rotated)
    B = b_connection(tf).jet.truncate(0)
    s0 = s_jet.truncate(1)
    s_inv = s0.reverse()
    rhs = (s_inv.truncate(0).mul(B).mul(s0.truncate(0)).value
           - s_inv.truncate(0).mul(s0.derivative().truncate(0)).value)
    grade_part = s0.truncate(0).mul(s_inv.derivative().truncate(0)).value
    return {
        "transform": float(np.abs(lhs - rhs).max()),
        "grade": float(np.abs(np.where(GRADE == 2, 0.0, grade_part)).max()),
    }


def b_connection_values(tf: TetradFrame) -> np.ndarray:
    """Value of -1/4 e^a nabla_mu e_a for tetrads known to first order."""
    acc = np.zeros((4, 16))
    t = tf.ctx.table
    for a in range(4):
        acc = acc + outer_product(tf.up[a].value, tf.down[a].d1, t)
    return -0.25 * acc


def d_operator(B: BConnection, f: FormJet, mu: int | None = None) -> FormJet:
    """D_mu f = nabla_mu f - [B_mu, f]; the new lower slot comes first."""
    out = f.derivative() - B.jet.commutator(f)
    return out if mu is None else out.component(mu)


def d_commutator(B: BConnection, f: FormJet) -> np.ndarray:
    """``out[mu, nu]`` = (D_mu D_nu - D_nu D_mu) f at the point."""
    dd = d_operator(B, d_operator(B, f))  # [nu, mu, ...] = D_nu D_mu f
    v = dd.value
    return np.swapaxes(v, 0, 1) - v


def curvature_two_form(B: BConnection) -> TensorForm:
    """C_{mu nu} from 1/2 C = D_mu B_nu - D_nu B_mu + [B_mu, B_nu]."""
    t = B.tf.ctx.table
    val = B.jet.value
    nabla = B.jet.d1                                          # [mu, nu] = nabla_mu B_nu
    bb = outer_product(val, val, t)
    comm = bb - bb.transpose(1, 0, 2)                         # [B_mu, B_nu]
    d_mn = nabla - comm                                       # D_mu B_nu
    half = d_mn - d_mn.transpose(1, 0, 2) + comm
    return TensorForm(2.0 * half, B.tf.ctx, "ll")


def riemann_two_form(frame: PointFrame) -> TensorForm:
    """1/2 R_{mu nu alpha beta} dx^alpha ^ dx^beta with R lowered on its first index."""
    R = frame.riemann_lower
    out = np.zeros((4, 4, 16))
    for al in range(4):
        for be in range(al + 1, 4):
            out[:, :, blade_index(al, be)] = R[:, :, al, be]
    return TensorForm(out, frame.ctx, "ll")


def b_from_generators(sg: SecondaryGenerators) -> np.ndarray:
    """B_mu from the derivatives of H, I, K (values ``[mu, blade]``)."""
    ctx = sg.tf.ctx
    H, I, K = (Multivector(j.value, ctx) for j in (sg.H, sg.I, sg.K))
    dH, dI, dK = (TensorForm(j.d1, ctx, "l") for j in (sg.H, sg.I, sg.K))
    iii = I * dI + K * dK
    out = (-(3.0 / 8.0) * (H * dH) + 0.25 * iii + 0.125 * (H * iii * H)
           - 0.125 * ((I * K * H) * dH * (K * I))
           - 0.125 * ((K * I) * dI * K + (I * K) * dK * I))
    return out.data


def field_strength(A: FormJet, B: BConnection) -> FormJet:
    """F_{mu nu} = D_mu A_nu - D_nu A_mu - [A_mu, A_nu] as a jet with slots 'll'."""
    if A.slots != "l":
        raise ValueError("A must carry exactly one lower slot")
    da = d_operator(B, A)                                     # [mu, nu]
    aa = A.truncate(da.order).mul(A.truncate(da.order))       # [mu, nu] = A_mu A_nu
    comm = aa - aa.permute_slots([1, 0])
    return da - da.permute_slots([1, 0]) - comm
