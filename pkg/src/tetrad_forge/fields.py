"""Multivector-valued tensor fields and their covariant jets.

A field is anything that, given a :class:`~tetrad_forge.geometry.PointFrame`,
produces a :class:`FormJet`: the value of the field at the point together
with its first and (optionally) second covariant derivatives.  Jets are
combined with Clifford products through the Leibniz rule, which is exact
because the Levi-Civita derivative annihilates the metric that defines the
product.  This keeps every derived quantity (``B_mu``, ``C_mu nu``, ...)
free of numerical differentiation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .clifford import (GRADE, REVERSE_SIGN, WEDGE_TABLE, Multivector, TensorForm,
                       blade_index, outer_product)
from .expr import Expression, SymbolTable, compile_many, derivative, parse
from .geometry import (ETA, GeometryDefinition, PointFrame, TetradJet,
                       connection_terms, finite_difference_oracle)

__all__ = [
    "FormJet", "FieldOfForms", "ExpressionField", "ConstantField",
    "tetrad_form_jets", "tetrad_blade_jets", "jet_exp", "scalar_jet",
    "random_expression", "random_form_field", "random_covector_expressions",
    "fd_covariant_jet",
]


def _movefront(arr: np.ndarray, src: Sequence[int]) -> np.ndarray:
    return np.moveaxis(arr, list(src), list(range(len(src))))


@dataclass
class FormJet:
    """Value and covariant derivatives of a multivector-valued tensor at a point.

    ``value`` has shape ``(4,)*len(slots) + (16,)``; ``d1[mu]`` is
    nabla_mu of it and ``d2[nu, mu]`` is nabla_nu nabla_mu.  Missing orders
    are ``None``.
    """

    value: np.ndarray
    d1: np.ndarray | None
    d2: np.ndarray | None
    slots: str
    frame: PointFrame

    # construction -------------------------------------------------------
    @classmethod
    def from_partials(cls, frame: PointFrame, slots: str, value: np.ndarray,
                      partials: np.ndarray | None = None,
                      second: np.ndarray | None = None) -> "FormJet":
        """Covariant jet from coordinate partials of blade coefficients."""
        d1 = d2 = None
        if partials is not None:
            d1 = partials + connection_terms(value, slots, frame.gamma,
                                             frame.form_connection)
        if second is not None and partials is not None:
            d = second.copy()
            for nu in range(4):
                d[nu] += connection_terms(partials[nu], slots, frame.gamma,
                                          frame.form_connection)
                d[nu] += connection_terms(value, slots, frame.dgamma[nu],
                                          frame.dform_connection[nu])
            d2 = d + connection_terms(d1, "l" + slots, frame.gamma, frame.form_connection)
        return cls(value, d1, d2, slots, frame)

    @classmethod
    def constant(cls, frame: PointFrame, value, slots: str = "") -> "FormJet":
        """A covariantly constant field with the given value."""
        v = value.coeffs if isinstance(value, Multivector) else np.asarray(value)
        return cls(v, np.zeros((4,) + v.shape, v.dtype),
                   np.zeros((4, 4) + v.shape, v.dtype), slots, frame)

    @classmethod
    def scalar(cls, frame: PointFrame, value: float, partials=None, second=None) -> "FormJet":
        """A scalar function (grade 0) with its coordinate partials."""
        v = np.zeros(16, dtype=np.result_type(value, float))
        v[0] = value
        d1 = d2 = None
        if partials is not None:
            p = np.asarray(partials)
            d1 = np.zeros((4, 16), dtype=np.result_type(p, float))
            d1[:, 0] = p
        if second is not None:
            s = np.asarray(second)
            # nabla_nu nabla_mu f = d_nu d_mu f - Gamma_{mu nu}^lam d_lam f
            hess = s - np.einsum("mnl,l->nm", frame.gamma, np.asarray(partials))
            d2 = np.zeros((4, 4, 16), dtype=np.result_type(hess, float))
            d2[:, :, 0] = hess
        return cls(v, d1, d2, "", frame)

    # basic algebra ------------------------------------------------------
    @property
    def ctx(self):
        return self.frame.ctx

    @property
    def order(self) -> int:
        return 0 if self.d1 is None else (1 if self.d2 is None else 2)

    def _lin(self, other: "FormJet", sign: float) -> "FormJet":
        if other.slots != self.slots:
            raise ValueError(f"slot mismatch '{self.slots}' vs '{other.slots}'")
        d1 = None if self.d1 is None or other.d1 is None else self.d1 + sign * other.d1
        d2 = None if self.d2 is None or other.d2 is None else self.d2 + sign * other.d2
        return FormJet(self.value + sign * other.value, d1, d2, self.slots, self.frame)

    def __add__(self, other: "FormJet") -> "FormJet":
        return self._lin(other, 1.0)

    def __sub__(self, other: "FormJet") -> "FormJet":
        return self._lin(other, -1.0)

    def __neg__(self) -> "FormJet":
        return self.scale(-1.0)

    def scale(self, c) -> "FormJet":
        return FormJet(self.value * c, None if self.d1 is None else self.d1 * c,
                       None if self.d2 is None else self.d2 * c, self.slots, self.frame)

    __rmul__ = scale

    def map_blades(self, f: Callable[[np.ndarray], np.ndarray]) -> "FormJet":
        """Apply a linear, connection-commuting map to the blade axis."""
        return FormJet(f(self.value), None if self.d1 is None else f(self.d1),
                       None if self.d2 is None else f(self.d2), self.slots, self.frame)

    def reverse(self) -> "FormJet":
        return self.map_blades(lambda a: a * REVERSE_SIGN)

    def conj(self) -> "FormJet":
        return self.map_blades(np.conj)

    def grade(self, k: int) -> "FormJet":
        mask = (GRADE == k)
        return self.map_blades(lambda a: np.where(mask, a, 0))

    def truncate(self, order: int) -> "FormJet":
        return FormJet(self.value, self.d1 if order >= 1 else None,
                       self.d2 if order >= 2 else None, self.slots, self.frame)

    def __mul__(self, other):
        if isinstance(other, FormJet):
            return self.mul(other)
        return self.scale(other)

    def mul(self, other: "FormJet") -> "FormJet":
        """Clifford product; slots of ``self`` precede those of ``other``."""
        t = self.frame.ctx.table
        na = len(self.slots)
        u, v = self, other
        value = outer_product(u.value, v.value, t)
        d1 = d2 = None
        if u.d1 is not None and v.d1 is not None:
            d1 = (outer_product(u.d1, v.value, t)
                  + _movefront(outer_product(u.value, v.d1, t), [na]))
        if d1 is not None and u.d2 is not None and v.d2 is not None:
            cross = outer_product(u.d1, v.d1, t)  # [mu_u, A, mu_v, B]
            d2 = (outer_product(u.d2, v.value, t)
                  + _movefront(outer_product(u.value, v.d2, t), [na, na + 1])
                  + _movefront(cross, [na + 1])        # [nu=v, mu=u]
                  + _movefront(cross, [0, na + 1]))    # [nu=u, mu=v]
        return FormJet(value, d1, d2, self.slots + other.slots, self.frame)

    def commutator(self, other: "FormJet") -> "FormJet":
        """[self, other] with slots of ``self`` first in both terms."""
        ab = self.mul(other)
        ba = other.mul(self)
        na, nb = len(self.slots), len(other.slots)
        if na and nb:
            # reorder ba's slots (B, A) -> (A, B)
            perm = list(range(nb, nb + na)) + list(range(nb))
            ba = ba.permute_slots(perm)
        return ab - ba

    def permute_slots(self, perm: Sequence[int]) -> "FormJet":
        """Reorder tensor slots: new slot i is old slot ``perm[i]``."""
        n = len(self.slots)

        def f(a, lead):
            axes = list(range(lead)) + [lead + p for p in perm] + [lead + n]
            return np.transpose(a, axes)
        slots = "".join(self.slots[p] for p in perm)
        return FormJet(f(self.value, 0), None if self.d1 is None else f(self.d1, 1),
                       None if self.d2 is None else f(self.d2, 2), slots, self.frame)

    def derivative(self) -> "FormJet":
        """nabla as a field with one more lower slot (first)."""
        if self.d1 is None:
            raise ValueError("jet carries no first derivative")
        return FormJet(self.d1, self.d2, None, "l" + self.slots, self.frame)

    def component(self, *idx: int) -> "FormJet":
        """Fix the leading slot indices."""
        k = len(idx)
        return FormJet(self.value[idx],
                       None if self.d1 is None else self.d1[(slice(None),) + idx],
                       None if self.d2 is None else self.d2[(slice(None), slice(None)) + idx],
                       self.slots[k:], self.frame)

    def raise_slot(self, i: int) -> "FormJet":
        if self.slots[i] != "l":
            raise ValueError(f"slot {i} is not lower")
        gi = self.frame.g_inv

        def f(a, lead):
            ax = lead + i
            return np.moveaxis(np.tensordot(gi, a, axes=([1], [ax])), 0, ax)
        slots = self.slots[:i] + "u" + self.slots[i + 1:]
        return FormJet(f(self.value, 0), None if self.d1 is None else f(self.d1, 1),
                       None if self.d2 is None else f(self.d2, 2), slots, self.frame)

    # conversions --------------------------------------------------------
    def multivector(self, *idx: int) -> Multivector:
        return Multivector(self.value[idx], self.frame.ctx)

    def tensor_form(self) -> TensorForm:
        return TensorForm(self.value, self.frame.ctx, self.slots)

    def nabla(self) -> TensorForm:
        return TensorForm(self.d1, self.frame.ctx, "l" + self.slots)


def scalar_jet(frame: PointFrame, value, partials=None, second=None) -> FormJet:
    return FormJet.scalar(frame, value, partials, second)


def jet_exp(beta: FormJet, max_terms: int = 64) -> FormJet:
    """exp of a slotless jet by its power series, differentiated termwise."""
    if beta.slots:
        raise ValueError("exponential needs a slotless jet")
    one = np.zeros(16, dtype=beta.value.dtype)
    one[0] = 1.0
    term = FormJet.constant(beta.frame, one).truncate(beta.order)
    total = term
    for k in range(1, max_terms + 1):
        term = term.mul(beta).scale(1.0 / k)
        total = total + term
        tn = np.abs(term.value).max()
        if term.d1 is not None:
            tn = max(tn, np.abs(term.d1).max())
        if tn < 1e-17 * max(1.0, np.abs(total.value).max()):
            return total
    return total


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


class FieldOfForms:
    """Base class: a multivector-valued tensor field on a geometry."""

    slots: str = ""

    def jet(self, frame: PointFrame, order: int = 1) -> FormJet:  # pragma: no cover
        raise NotImplementedError

    def __call__(self, frame: PointFrame, order: int = 1) -> FormJet:
        return self.jet(frame, order)


class ConstantField(FieldOfForms):
    """A field whose value has constant coefficients in the tetrad blade basis.

    Such fields are built from the tetrad, so they are evaluated through
    the tetrad jets (for example ``e^0`` or ``I = -e^1 e^2``).
    """

    def __init__(self, builder: Callable[[PointFrame, int], FormJet], slots: str = ""):
        self.builder = builder
        self.slots = slots

    def jet(self, frame: PointFrame, order: int = 1) -> FormJet:
        return self.builder(frame, order)


class ExpressionField(FieldOfForms):
    """Blade coefficients given by expressions.

    ``coeffs[slot indices...][blade]`` is an Expression (or ``None`` for
    zero).  ``imag`` optionally gives imaginary parts of the same shape.
    ``basis`` selects the blade basis: ``'coordinate'`` (dx blades) or
    ``'tetrad'`` (e^a blades).
    """

    def __init__(self, geo: GeometryDefinition, coeffs, slots: str = "",
                 imag=None, basis: str = "coordinate"):
        if basis not in ("coordinate", "tetrad"):
            raise ValueError("basis must be 'coordinate' or 'tetrad'")
        self.geo = geo
        self.slots = slots
        self.basis = basis
        shape = (4,) * len(slots) + (16,)
        self.shape = shape
        self._re = _expr_array(coeffs, shape, geo.symbols)
        self._im = None if imag is None else _expr_array(imag, shape, geo.symbols)
        self._compiled: dict[int, Callable] = {}

    @property
    def is_complex(self) -> bool:
        return self._im is not None

    def _fn(self, order: int):
        if order not in self._compiled:
            exprs = []
            flat = [e for e in np.ravel(self._re)]
            if self._im is not None:
                flat += [e for e in np.ravel(self._im)]
            for multi in itertools.combinations_with_replacement(range(4), order):
                names = [self.geo.coordinates[i] for i in multi]
                for e in flat:
                    exprs.append(derivative(e, names))
            self._compiled[order] = compile_many(exprs, self.geo._argnames)
        return self._compiled[order]

    def partials(self, x: Sequence[float], order: int = 2):
        """Coefficient values and coordinate partials up to ``order``."""
        args = self.geo._args(x)
        out = []
        for k in range(order + 1):
            vals = np.array(self._fn(k)(*args))
            n = int(np.prod(self.shape))
            if self._im is not None:
                vals = vals.reshape(-1, 2, n)
                vals = vals[:, 0] + 1j * vals[:, 1]
            vals = vals.reshape((-1,) + self.shape)
            full = np.empty((4,) * k + self.shape, dtype=vals.dtype)
            for m, multi in enumerate(itertools.combinations_with_replacement(range(4), k)):
                for perm in set(itertools.permutations(multi)):
                    full[perm] = vals[m]
            out.append(full)
        return out

    def jet(self, frame: PointFrame, order: int = 1) -> FormJet:
        parts = self.partials(frame.x, order)
        parts += [None] * (3 - len(parts))
        if self.basis == "coordinate":
            return FormJet.from_partials(frame, self.slots, parts[0], parts[1], parts[2])
        lam = tetrad_blade_jets(frame.jet, order)
        val, p1, p2 = _apply_blade_matrix(lam, parts, order)
        return FormJet.from_partials(frame, self.slots, val, p1, p2)

    def values(self, x: Sequence[float]) -> np.ndarray:
        return self.partials(x, 0)[0]


def _expr_array(coeffs, shape, symbols: SymbolTable) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    src = np.empty(shape, dtype=object)
    if isinstance(coeffs, np.ndarray) and coeffs.dtype == object:
        src = coeffs
    else:
        src[...] = None
        _fill(src, coeffs)
    for idx in np.ndindex(shape):
        e = src[idx]
        if e is None:
            e = parse("0", symbols)
        elif isinstance(e, str):
            e = parse(e, symbols)
        elif isinstance(e, (int, float)):
            e = parse(repr(float(e)), symbols)
        elif not isinstance(e, Expression):
            raise TypeError(f"coefficient {idx} is not an expression: {e!r}")
        arr[idx] = e
    return arr


def _fill(dst: np.ndarray, src) -> None:
    if isinstance(src, Mapping):
        for k, v in src.items():
            dst[k] = v
        return
    src = list(src)
    for i, item in enumerate(src):
        if dst.ndim == 1:
            dst[i] = item
        else:
            _fill(dst[i], item)


# ---------------------------------------------------------------------------
# Tetrad-derived jets
# ---------------------------------------------------------------------------


def tetrad_form_jets(frame: PointFrame, order: int = 2) -> list[FormJet]:
    """The 1-forms e^a = e_mu^a dx^mu as covariant jets."""
    jet = frame.jet
    out = []
    for a in range(4):
        val = np.zeros(16)
        p1 = np.zeros((4, 16))
        p2 = np.zeros((4, 4, 16))
        for mu in range(4):
            b = blade_index(mu)
            val[b] = jet.e[mu, a]
            p1[:, b] = jet.de[:, mu, a]
            if order >= 2:
                if jet.d2e is None:
                    raise ValueError("second tetrad derivatives are needed")
                p2[:, :, b] = jet.d2e[:, :, mu, a]
        out.append(FormJet.from_partials(frame, "", val, p1 if order >= 1 else None,
                                         p2 if order >= 2 else None))
    return out


def _wedge_partial(a, b, order):
    # Leibniz with coordinate partials for the metric-free wedge product
    def w(x, y):
        return np.einsum("...i,ikj,...j->...k", x, WEDGE_TABLE, y)
    va, da, dda = a
    vb, db, ddb = b
    val = w(va, vb)
    d1 = w(da, vb[None]) + w(va[None], db) if order >= 1 else None
    d2 = None
    if order >= 2:
        d2 = (w(dda, vb[None, None]) + w(va[None, None], ddb)
              + w(da[:, None], db[None, :]) + w(da[None, :], db[:, None]))
    return val, d1, d2


def tetrad_blade_jets(jet: TetradJet, order: int = 1):
    """Coordinate coefficients of the tetrad blades and their partials.

    Returns ``(L, dL, d2L)`` where column ``A`` of ``L`` holds the dx-blade
    coefficients of the tetrad blade ``e^{a1} ^ ... ^ e^{ak}`` (same
    ordering as the coordinate blades).  Only the wedge product is used,
    so no metric enters.
    """
    from .clifford import BLADES
    vecs = []
    for a in range(4):
        v = np.zeros(16)
        d = np.zeros((4, 16))
        dd = np.zeros((4, 4, 16))
        for mu in range(4):
            b = blade_index(mu)
            v[b] = jet.e[mu, a]
            d[:, b] = jet.de[:, mu, a]
            if order >= 2:
                dd[:, :, b] = jet.d2e[:, :, mu, a]
        vecs.append((v, d, dd))
    one = np.zeros(16)
    one[0] = 1.0
    cols = []
    for m in BLADES:
        acc = (one, np.zeros((4, 16)), np.zeros((4, 4, 16)))
        for a in range(4):
            if m >> a & 1:
                acc = _wedge_partial(acc, vecs[a], order)
        cols.append(acc)
    L = np.stack([c[0] for c in cols], axis=-1)
    dL = np.stack([c[1] for c in cols], axis=-1) if order >= 1 else None
    d2L = np.stack([c[2] for c in cols], axis=-1) if order >= 2 else None
    return L, dL, d2L


def _apply_blade_matrix(lam, parts, order):
    L, dL, d2L = lam
    c, dc, ddc = parts[0], parts[1], parts[2]
    val = np.einsum("kA,...A->...k", L, c)
    p1 = p2 = None
    if order >= 1:
        p1 = (np.einsum("rkA,...A->r...k", dL, c) + np.einsum("kA,r...A->r...k", L, dc))
    if order >= 2:
        p2 = (np.einsum("srkA,...A->sr...k", d2L, c)
              + np.einsum("rkA,s...A->sr...k", dL, dc)
              + np.einsum("skA,r...A->sr...k", dL, dc)
              + np.einsum("kA,sr...A->sr...k", L, ddc))
    return val, p1, p2


def fd_covariant_jet(geo: GeometryDefinition, frame: PointFrame, slots: str,
                     values: Callable[[np.ndarray], np.ndarray]) -> FormJet:
    """First-order jet of a pointwise-defined field by central differences.

    ``values(x)`` returns dx-blade coefficients with the given slots.  The
    partials come from :func:`finite_difference_oracle`; the connection
    terms are exact.
    """
    v = np.asarray(values(frame.x))
    dv = finite_difference_oracle(geo, frame.x, 1, values=values)
    return FormJet.from_partials(frame, slots, v, dv, None)


# ---------------------------------------------------------------------------
# Random expression-backed test fields
# ---------------------------------------------------------------------------


def random_expression(geo: GeometryDefinition, rng: np.random.Generator,
                      terms: int = 3, scale: float = 1.0) -> Expression:
    """A mild polynomial/trigonometric expression in the coordinates."""
    coords = geo.coordinates
    centre = geo.base_point()
    width = np.array([max(hi - lo, 1e-9) for lo, hi in geo.domain])
    parts = []
    for _ in range(terms):
        c = float(rng.uniform(-scale, scale))
        i, j = (int(k) for k in rng.integers(0, 4, size=2))
        ki, kj = (float(k) for k in rng.uniform(-1, 1, size=2) / np.minimum(width[[i, j]], 10.0))
        u = f"({coords[i]} - {float(centre[i])!r})"
        v = f"({coords[j]} - {float(centre[j])!r})"
        kind = rng.integers(0, 4)
        if kind == 0:
            parts.append(f"{c!r}*{ki!r}*{u}*{kj!r}*{v}")
        elif kind == 1:
            parts.append(f"{c!r}*sin({ki!r}*{u} + {kj!r}*{v})")
        elif kind == 2:
            parts.append(f"{c!r}*cos({ki!r}*{u})*{kj!r}*{v}")
        else:
            parts.append(f"{c!r}*exp({ki!r}*{u})")
    return parse(" + ".join(parts), geo.symbols)


def random_form_field(geo: GeometryDefinition, rng: np.random.Generator,
                      slots: str = "", grades: Sequence[int] | None = None,
                      complex_: bool = False, basis: str = "coordinate",
                      terms: int = 2) -> ExpressionField:
    shape = (4,) * len(slots) + (16,)
    re = np.empty(shape, dtype=object)
    im = np.empty(shape, dtype=object) if complex_ else None
    for idx in np.ndindex(shape):
        blade = idx[-1]
        if grades is not None and GRADE[blade] not in grades:
            re[idx] = None
            if im is not None:
                im[idx] = None
            continue
        re[idx] = random_expression(geo, rng, terms)
        if im is not None:
            im[idx] = random_expression(geo, rng, terms)
    return ExpressionField(geo, re, slots, im, basis)


def random_covector_expressions(geo: GeometryDefinition, rng: np.random.Generator,
                                terms: int = 3) -> list[Expression]:
    return [random_expression(geo, rng, terms) for _ in range(4)]
