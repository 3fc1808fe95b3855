"""Tetrad 1-forms, secondary generators and Lorentz rotations at a point."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clifford import (GRADE, Multivector, MetricContext, TensorForm, blade_index,
                       exponential, outer_product)
from .expr import Expression, compile_many, parse
from .fields import FormJet, fd_covariant_jet, jet_exp, tetrad_form_jets
from .geometry import ETA, DegenerateTetrad, GeometryDefinition, PointFrame

__all__ = [
    "LEMMA_FACTORS", "TetradFrame", "tetrad_forms", "lemma_contraction",
    "SecondaryGenerators", "secondary_generators", "SpinElement",
    "SpinMembershipError", "sample_spin_element", "lorentz_rotate",
    "rotated_metric", "PAIRS",
]

# e^a U e_a = LEMMA_FACTORS[k] U for U of pure grade k
LEMMA_FACTORS = (4.0, -2.0, 0.0, 2.0, -4.0)
PAIRS = tuple((a, b) for a in range(4) for b in range(a + 1, 4))


class SpinMembershipError(ValueError):
    pass


@dataclass
class TetradFrame:
    """The tetrad 1-forms e^a and e_a = eta_ab e^b as jets at a point."""

    frame: PointFrame
    up: list[FormJet]
    down: list[FormJet]

    @property
    def ctx(self) -> MetricContext:
        return self.frame.ctx

    @property
    def e_inv(self) -> np.ndarray:
        return self.frame.e_inv

    @property
    def eta(self) -> np.ndarray:
        return ETA

    def e(self, a: int) -> Multivector:
        return Multivector(self.up[a].value, self.ctx)

    def e_low(self, a: int) -> Multivector:
        return Multivector(self.down[a].value, self.ctx)

    def product(self, *indices: int) -> FormJet:
        """Clifford product e^{a1} e^{a2} ... as a jet."""
        out = self.up[indices[0]]
        for a in indices[1:]:
            out = out.mul(self.up[a])
        return out

    def anticommutator_matrix(self) -> np.ndarray:
        """``M[a, b]`` = e^a e^b + e^b e^a as 16-vectors."""
        vals = np.array([j.value for j in self.up])
        t = self.ctx.table
        ab = outer_product(vals, vals, t)
        return ab + ab.transpose(1, 0, 2)

    def clifford_residual(self) -> float:
        target = np.zeros((4, 4, 16))
        target[:, :, 0] = 2 * ETA
        return float(np.abs(self.anticommutator_matrix() - target).max())

    def inverse_residual(self) -> float:
        """max |e^mu_a e_nu^a - delta^mu_nu|."""
        m = np.einsum("am,na->mn", self.e_inv, self.frame.e)
        return float(np.abs(m - np.eye(4)).max())

    def contraction_residual(self) -> float:
        """max |e^a e_a - 4| over value and derivatives."""
        acc = self.up[0].mul(self.down[0])
        for a in range(1, 4):
            acc = acc + self.up[a].mul(self.down[a])
        target = np.zeros(16)
        target[0] = 4.0
        r = np.abs(acc.value - target).max()
        if acc.d1 is not None:
            r = max(r, np.abs(acc.d1).max())
        return float(r)


def tetrad_forms(frame: PointFrame, order: int = 2) -> TetradFrame:
    """Tetrad 1-forms with covariant jets up to ``order``."""
    if order >= 2 and frame.jet.d2e is None:
        raise ValueError("frame lacks second tetrad derivatives")
    up = tetrad_form_jets(frame, order)
    down = [up[a].scale(ETA[a, a]) for a in range(4)]
    return TetradFrame(frame, up, down)


def lemma_contraction(u, tf: TetradFrame, check_grade: bool = True):
    """Sum over a of e^a U e_a for a Multivector or TensorForm ``U``."""
    data = u.coeffs if isinstance(u, Multivector) else u.data
    if check_grade:
        present = {int(GRADE[i]) for i in range(16)
                   if np.abs(data[..., i]).max() > 0}
        if len(present) > 1:
            raise ValueError(f"U must be of pure grade, found grades {sorted(present)}")
    t = tf.ctx.table
    out = np.zeros_like(data, dtype=np.result_type(data, float))
    for a in range(4):
        left = outer_product(tf.up[a].value, data, t)
        out = out + outer_product(left, tf.down[a].value, t)
    if isinstance(u, Multivector):
        return Multivector(out, u.ctx)
    return TensorForm(out, u.ctx, u.slots)


# ---------------------------------------------------------------------------
# Secondary generators
# ---------------------------------------------------------------------------


@dataclass
class SecondaryGenerators:
    """H = e^0, I = -e^1 e^2, K = -e^1 e^3, l = e^0 e^1 e^2 e^3 as jets."""

    H: FormJet
    I: FormJet
    K: FormJet
    ell: FormJet
    tf: TetradFrame

    def mv(self, name: str) -> Multivector:
        return Multivector(getattr(self, name).value, self.tf.ctx)

    def reconstruction(self) -> dict[str, Multivector]:
        H, I, K, l = (self.mv(n) for n in ("H", "I", "K", "ell"))
        return {"e0": H, "e1": I * K * l * H, "e2": K * l * H, "e3": -(I * l * H)}

    def reconstruction_residuals(self) -> dict[str, float]:
        rec = self.reconstruction()
        return {f"e{a}": float(np.abs(rec[f"e{a}"].coeffs - self.tf.up[a].value).max())
                for a in range(4)}


def secondary_generators(tf: TetradFrame) -> SecondaryGenerators:
    H = tf.up[0]
    I = tf.up[1].mul(tf.up[2]).scale(-1.0)
    K = tf.up[1].mul(tf.up[3]).scale(-1.0)
    ell = tf.product(0, 1, 2, 3)
    return SecondaryGenerators(H, I, K, ell, tf)


# ---------------------------------------------------------------------------
# Spin elements and Lorentz rotations
# ---------------------------------------------------------------------------


@dataclass
class SpinElement:
    """S = exp(beta) with beta = sum_{a<b} c_ab f_ab(x) e^a ^ e^b.

    ``coeffs[k]`` multiplies the pair ``PAIRS[k]``.  ``factors`` holds the
    optional coordinate expressions f_ab; when absent S has constant
    coefficients in the tetrad blade basis.
    """

    coeffs: np.ndarray
    factors: list[Expression] | None = None
    geo: GeometryDefinition | None = field(default=None, repr=False)

    @property
    def position_dependent(self) -> bool:
        return self.factors is not None

    def _factor_values(self, x) -> np.ndarray:
        if self.factors is None:
            return np.ones(len(PAIRS))
        env_args = self.geo._args(x)
        fn = self.__dict__.get("_fn")
        if fn is None:
            fn = compile_many(self.factors, self.geo._argnames)
            self.__dict__["_fn"] = fn
        return np.array(fn(*env_args))

    def generator_value(self, frame: PointFrame) -> Multivector:
        """beta at the frame point."""
        f = self._factor_values(frame.x)
        e = [Multivector(j.value, frame.ctx) for j in tetrad_form_jets(frame, 0)]
        beta = Multivector.zero(frame.ctx)
        for (a, b), c, fv in zip(PAIRS, self.coeffs, f):
            beta = beta + (e[a] * e[b]) * (c * fv)
        return beta

    def value(self, frame: PointFrame) -> Multivector:
        return exponential(self.generator_value(frame))

    def membership_residual(self, frame: PointFrame) -> float:
        s = self.value(frame)
        one = s.reverse() * s
        target = np.zeros(16)
        target[0] = 1.0
        odd = np.abs(s.coeffs[GRADE % 2 == 1]).max()
        imag = np.abs(np.imag(s.coeffs)).max()
        return float(max(np.abs(one.coeffs - target).max(), odd, imag))

    def check(self, frame: PointFrame, tol: float = 1e-10) -> None:
        r = self.membership_residual(frame)
        if r > tol:
            raise SpinMembershipError(f"element fails the Spin membership test (residual {r:.3g})")

    def jet(self, tf: TetradFrame) -> FormJet:
        """Covariant jet of S at the frame of ``tf``.

        Constant coefficients: exact, via the exponential series of the
        tetrad-built generator.  Position-dependent: first order only, by
        central differences of the 16 blade coefficients.
        """
        if not self.position_dependent:
            beta = None
            for (a, b), c in zip(PAIRS, self.coeffs):
                term = tf.up[a].mul(tf.up[b]).scale(c)
                beta = term if beta is None else beta + term
            return jet_exp(beta)
        if self.geo is None:
            raise ValueError("position-dependent element needs its geometry")
        from .geometry import TetradJet, frame_from_jet

        def coords(y):
            e = self.geo.tetrad_values(y)
            fr = frame_from_jet(TetradJet(e, np.zeros((4, 4, 4))), y, check=False)
            return self.value(fr).coeffs
        return fd_covariant_jet(self.geo, tf.frame, "", coords)


def sample_spin_element(seed: int, scale: float, position_dependent: bool = False,
                        geo: GeometryDefinition | None = None) -> SpinElement:
    """Random S = exp(beta) with tetrad coefficients uniform in [-scale, scale]."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(-scale, scale, size=len(PAIRS)) if scale > 0 else np.zeros(len(PAIRS))
    if not position_dependent:
        return SpinElement(c)
    if geo is None:
        raise ValueError("position-dependent sampling needs a geometry")
    centre = geo.base_point()
    width = np.array([max(hi - lo, 1e-9) for lo, hi in geo.domain])
    factors = []
    for _ in PAIRS:
        i = int(rng.integers(0, 4))
        k = float(rng.uniform(0.2, 1.0) / min(width[i], 10.0))
        ph = float(rng.uniform(-1, 1))
        factors.append(parse(f"1 + 0.5*sin({k!r}*({geo.coordinates[i]} - {float(centre[i])!r}) + {ph!r})",
                             geo.symbols))
    return SpinElement(c, factors, geo)


def lorentz_rotate(tf: TetradFrame, s_jet: FormJet, check: bool = True,
                   tol: float = 1e-10) -> TetradFrame:
    """Rotated tetrad S^{-1} e^a S with S^{-1} = reversion(S)."""
    if check:
        sv = Multivector(s_jet.value, tf.ctx)
        one = sv.reverse() * sv
        target = np.zeros(16)
        target[0] = 1.0
        r = max(np.abs(one.coeffs - target).max(), np.abs(np.imag(sv.coeffs)).max(),
                np.abs(sv.coeffs[GRADE % 2 == 1]).max())
        if r > tol:
            raise SpinMembershipError(f"element fails the Spin membership test (residual {r:.3g})")
    s_inv = s_jet.reverse()
    up = [s_inv.mul(e).mul(s_jet) for e in tf.up]
    down = [up[a].scale(ETA[a, a]) for a in range(4)]
    return TetradFrame(tf.frame, up, down)


def rotated_metric(tf: TetradFrame) -> np.ndarray:
    """g_{mu nu} rebuilt from the grade-1 coefficients of the e^a jets."""
    idx = [blade_index(m) for m in range(4)]
    comps = np.array([[j.value[i] for i in idx] for j in tf.up]).T  # [mu, a]
    return comps @ ETA @ comps.T
