"""Codifferential, Lagrangian densities and field-equation residuals."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .clifford import INTERIOR, REVERSE_SIGN, Multivector, blade_index, outer_product
from .connection import BConnection, b_connection, d_operator, field_strength
from .fields import FormJet, fd_covariant_jet
from .geometry import (GeometryDefinition, PointFrame, TetradJet, build_frame,
                       einstein_tensor, frame_from_jet, oracle_frame)
from .tetrad import SecondaryGenerators, TetradFrame, secondary_generators, tetrad_forms

__all__ = [
    "CODIFFERENTIAL_SIGN", "CONJUGATIONS", "EquationConfig", "SourceTerms",
    "codifferential", "l2_density", "l2_density_fd", "second_derivative_check",
    "SecondDerivativeReport", "l0l1_density", "main_residuals", "MainResiduals",
    "dirac_operator_p", "abelian_current",
]

# Overall sign of (delta w)_{m2..mk} = sign * nabla^{m1} w_{m1 m2..mk}.  Fixed by
# requiring R + 4 Tr(delta B) to be free of second tetrad derivatives; the
# opposite sign leaves a residual of the same size as the curvature change.
CODIFFERENTIAL_SIGN = 1.0


def _reversion_conj(a: np.ndarray) -> np.ndarray:
    return np.conj(a) * REVERSE_SIGN


CONJUGATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "reversion-conj": _reversion_conj,
    "conj": np.conj,
    "reversion": lambda a: a * REVERSE_SIGN,
}


def _dx_array() -> np.ndarray:
    dx = np.zeros((4, 16))
    for mu in range(4):
        dx[mu, blade_index(mu)] = 1.0
    return dx


_DX = _dx_array()


def codifferential(w: FormJet, sign: float = CODIFFERENTIAL_SIGN) -> FormJet:
    """Gradewise contraction of the derivative index with the first form index.

    Works on slotless jets; the result has one derivative order fewer.
    """
    if w.slots:
        raise ValueError("codifferential acts on slotless fields")
    if w.d1 is None:
        raise ValueError("codifferential needs first derivatives")
    op = sign * np.einsum("nl,lok->nok", w.frame.g_inv, INTERIOR)  # [nu, out, in]
    val = np.einsum("nok,n...k->...o", op, w.d1)
    d1 = None if w.d2 is None else np.einsum("nok,rn...k->r...o", op, w.d2)
    return FormJet(val, d1, None, "", w.frame)


def _b_sum(B: BConnection) -> FormJet:
    """dx^mu B_mu as a slotless jet (dx^mu is covariantly constant as a (1,0)-valued form)."""
    t = B.tf.ctx.table
    val = np.einsum("mi,ikj,mj->k", _DX, t, B.jet.value)
    d1 = np.einsum("mi,ikj,nmj->nk", _DX, t, B.jet.d1)
    return FormJet(val, d1, None, "", B.tf.frame)


def l2_density(frame: PointFrame, sign: float = CODIFFERENTIAL_SIGN) -> float:
    """R + 4 Tr(delta B) at a frame with second tetrad derivatives."""
    tf = tetrad_forms(frame, 2)
    B = b_connection(tf)
    delta = codifferential(_b_sum(B), sign)
    return float(frame.scalar_curvature + 4.0 * delta.value[0])


def l2_density_fd(geo: GeometryDefinition, x: Sequence[float]) -> float:
    """The same density with R and nabla B from central differences."""
    x = np.asarray(x, dtype=float)
    frame = build_frame(geo, x, order=2)

    def bsum(y):
        fr = build_frame(geo, y, order=1)
        B = _b_values_first_order(tetrad_forms(fr, 1))
        return np.einsum("mi,ikj,mj->k", _DX, fr.ctx.table, B)
    jet = fd_covariant_jet(geo, frame, "", bsum)
    delta = codifferential(jet)
    return float(oracle_frame(geo, x).scalar_curvature + 4.0 * delta.value[0])


def _b_values_first_order(tf: TetradFrame) -> np.ndarray:
    t = tf.ctx.table
    acc = np.zeros((4, 16))
    for a in range(4):
        acc = acc + outer_product(tf.up[a].value, tf.down[a].d1, t)
    return -0.25 * acc


@dataclass
class SecondDerivativeReport:
    max_deviation: float
    control: float
    trials: int


def second_derivative_check(geo: GeometryDefinition, x: Sequence[float], trials: int = 20,
                            seed: int = 0, amplitude: float = 0.1,
                            sign: float = CODIFFERENTIAL_SIGN) -> SecondDerivativeReport:
    """Perturb the second tetrad partials at ``x`` and watch L2 and R.

    Each trial keeps the tetrad values and first partials and adds a random
    symmetric block of size ``amplitude`` to the second partials (a
    quadratic bump).  ``max_deviation`` is the largest change of L2 and
    ``control`` the largest change of R alone over the same trials.
    """
    x = np.asarray(x, dtype=float)
    base = build_frame(geo, x, order=2)
    l_base = l2_density(base, sign)
    r_base = base.scalar_curvature
    rng = np.random.default_rng(seed)
    dev, ctrl = 0.0, 0.0
    done = 0
    while done < trials:
        p = rng.normal(size=(4, 4, 4, 4))
        p = amplitude * 0.5 * (p + p.transpose(1, 0, 2, 3))
        jet = TetradJet(base.jet.e, base.jet.de, base.jet.d2e + p, None)
        try:
            fr = frame_from_jet(jet, x)
        except ValueError:
            continue
        dev = max(dev, abs(l2_density(fr, sign) - l_base))
        ctrl = max(ctrl, abs(fr.scalar_curvature - r_base))
        done += 1
    return SecondDerivativeReport(dev, float(ctrl), trials)


# ---------------------------------------------------------------------------
# Dirac and Yang-Mills densities, field equations
# ---------------------------------------------------------------------------


@dataclass
class EquationConfig:
    """Constants of the coupled system.

    ``n`` and ``e`` map secondary generators to Multivectors; ``None``
    selects the defaults N = 1 and E = -H I.
    """

    mass: float = 0.0
    c1: float = 1.0
    c2: float = 1.0
    n: Callable[[SecondaryGenerators], Multivector] | None = None
    e: Callable[[SecondaryGenerators], Multivector] | None = None
    conjugation: str = "reversion-conj"

    def n_value(self, sg: SecondaryGenerators) -> np.ndarray:
        if self.n is None:
            out = np.zeros(16, dtype=complex)
            out[0] = 1.0
            return out
        return np.asarray(self.n(sg).coeffs, dtype=complex)

    def e_value(self, sg: SecondaryGenerators) -> np.ndarray:
        if self.e is None:
            t = sg.tf.ctx.table
            return -outer_product(sg.H.value, sg.I.value, t).astype(complex)
        return np.asarray(self.e(sg).coeffs, dtype=complex)

    def conj(self, a: np.ndarray) -> np.ndarray:
        if self.conjugation not in CONJUGATIONS:
            raise ValueError(f"unknown conjugation '{self.conjugation}'")
        return CONJUGATIONS[self.conjugation](a)


@dataclass
class SourceTerms:
    """Current J^nu (four multivectors) and energy-momentum T^{mu nu}."""

    J: np.ndarray = field(default_factory=lambda: np.zeros((4, 16), dtype=complex))
    T: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        self.J = np.asarray(self.J)
        self.T = np.asarray(self.T, dtype=float)
        if self.J.shape != (4, 16):
            raise ValueError("J must have shape (4, 16)")
        if self.T.shape != (4, 4) or not np.allclose(self.T, self.T.T, atol=1e-12):
            raise ValueError("T must be a symmetric 4x4 array")


def dirac_operator_p(psi: FormJet, A: FormJet, cfg: EquationConfig, B: BConnection,
                     sg: SecondaryGenerators) -> np.ndarray:
    """P = dx^mu (D_mu Psi + Psi A_mu + B_mu Psi) N - m Psi E (blade coefficients)."""
    t = B.tf.ctx.table
    psi1 = psi.truncate(1)
    d_psi = d_operator(B, psi1).value                        # [mu, blade]
    inner = (d_psi + outer_product(psi.value, A.value, t)
             + outer_product(B.values, psi.value, t))
    lhs = np.einsum("mi,ikj,mj->k", _DX, t, inner)
    lhs = outer_product(lhs, cfg.n_value(sg), t)
    return lhs - cfg.mass * outer_product(psi.value, cfg.e_value(sg), t)


def _raise_both(F: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    return np.einsum("am,bn,mn...->ab...", g_inv, g_inv, F)


def l0l1_density(psi: FormJet, A: FormJet, cfg: EquationConfig, B: BConnection,
                 sg: SecondaryGenerators) -> tuple[float, float]:
    """L0 = 2 Tr(e^0 (Psi* P + P* Psi)) and L1 = 1/4 Tr(F_{mu nu} F^{mu nu}).

    Tr is the grade-0 part; the conjugation is ``cfg.conjugation``.
    """
    t = B.tf.ctx.table
    P = dirac_operator_p(psi, A, cfg, B, sg)
    ps = cfg.conj(psi.value)
    X = outer_product(ps, P, t) + outer_product(cfg.conj(P), psi.value, t)
    l0 = 2.0 * outer_product(sg.H.value.astype(complex), X, t)[0]
    if A.order < 1:
        raise ValueError("A needs first derivatives")
    F = field_strength(A.truncate(1), B).value
    Fu = _raise_both(F, B.tf.frame.g_inv)
    l1 = 0.25 * np.einsum("mni,ij,mnj->", F, t[:, 0, :], Fu)
    return float(np.real(l0)), float(np.real(l1))


@dataclass
class MainResiduals:
    dirac: Multivector
    yang_mills: np.ndarray   # (4, 16): one multivector per nu
    einstein: np.ndarray     # (4, 4)


def main_residuals(psi: FormJet, A: FormJet, cfg: EquationConfig, sources: SourceTerms,
                   B: BConnection, sg: SecondaryGenerators) -> MainResiduals:
    """Left-minus-right residuals of the three coupled equations.

    The Yang-Mills part uses D_mu F^{mu nu}: the covariant derivative of
    the density sqrt(-g) F^{mu nu} divided by sqrt(-g).
    """
    frame = B.tf.frame
    t = B.tf.ctx.table
    P = dirac_operator_p(psi, A, cfg, B, sg)
    if A.order < 2:
        raise ValueError("A needs second derivatives for the field equation")
    F = field_strength(A, B)                                   # order 1, slots ll
    Fu = F.raise_slot(0).raise_slot(1)
    dF = d_operator(B, Fu)                                     # [rho, mu, nu]
    div = np.einsum("mmnk->nk", dF.value)
    comm = outer_product(A.value, Fu.value, t) - np.moveaxis(
        outer_product(Fu.value, A.value, t), 2, 0)            # [A_rho, F^{mu nu}]
    ym = div - np.einsum("mmnk->nk", comm) - sources.J
    ein = einstein_tensor(frame) + sources.T
    return MainResiduals(Multivector(P, B.tf.ctx), ym, ein)


def abelian_current(frame: PointFrame, a: np.ndarray, da: np.ndarray, d2a: np.ndarray,
                    I: np.ndarray) -> np.ndarray:
    """(1/sqrt(-g)) d_mu (sqrt(-g) f^{mu nu}) I from coordinate partials.

    ``a[nu]``, ``da[mu, nu]`` = d_mu a_nu, ``d2a[r, mu, nu]``.  Used to
    fabricate a source for which the abelian field equation holds.
    """
    gi, dgi = frame.g_inv, frame.dg_inv
    f = da - da.T                                              # f_{mu nu}
    df = d2a - d2a.transpose(0, 2, 1)                          # d_r f_{mu nu}
    fu = gi @ f @ gi.T
    dfu = (np.einsum("ram,mn,bn->rab", dgi, f, gi) + np.einsum("am,rmn,bn->rab", gi, df, gi)
           + np.einsum("am,mn,rbn->rab", gi, f, dgi))
    dlog = 0.5 * np.einsum("ab,rab->r", gi, frame.dg)          # d_r ln sqrt(-g)
    j = np.einsum("mmn->n", dfu) + np.einsum("m,mn->n", dlog, fu)
    return j[:, None] * I[None, :]
