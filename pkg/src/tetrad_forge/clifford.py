"""Clifford algebra of differential forms at a point.

Elements live in the 16-dimensional space spanned by the coordinate blades
``1, dx^mu, dx^mu^dx^nu (mu<nu), ..., dx^0^dx^1^dx^2^dx^3``.  The product
depends on the inverse metric ``g^{mu nu}`` through the contraction rule

    dx^mu . v = dx^mu ^ v + g^{mu nu} i_nu v

which is expanded once per metric into a table of left-multiplication
matrices.  Arrays of shape ``(..., 16)`` are used internally; the
:class:`Multivector` and :class:`TensorForm` wrappers carry the metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "BLADES", "GRADE", "N_BLADES", "blade_index", "blade_name",
    "MetricContext", "MetricError", "ContextMismatch", "SeriesNotConverged",
    "Multivector", "TensorForm",
    "clifford_product", "wedge_product", "grade_project", "reversion",
    "exponential", "trace_zero", "commutator", "norm",
    "WEDGE_TABLE", "INTERIOR", "WEDGE_VECTOR", "REVERSE_SIGN",
]

N_BLADES = 16

# bit mu of a mask <-> dx^mu; ordered by grade then lexicographically
BLADES: tuple[int, ...] = tuple(
    sorted(range(16), key=lambda m: (bin(m).count("1"),
                                     [i for i in range(4) if m >> i & 1])))
_INDEX = {m: i for i, m in enumerate(BLADES)}
GRADE = np.array([bin(m).count("1") for m in BLADES])
REVERSE_SIGN = np.array([(-1) ** (k * (k - 1) // 2) for k in GRADE], dtype=float)


def blade_index(*mus: int) -> int:
    """Index of the blade dx^mu1 ^ ... (indices must be increasing)."""
    if list(mus) != sorted(set(mus)):
        raise ValueError(f"blade indices must be strictly increasing: {mus}")
    mask = 0
    for m in mus:
        mask |= 1 << m
    return _INDEX[mask]


def blade_name(i: int) -> str:
    m = BLADES[i]
    idx = [k for k in range(4) if m >> k & 1]
    return "1" if not idx else "^".join(f"dx{k}" for k in idx)


def _reorder_sign(a: int, b: int) -> int:
    # sign of sorting the concatenation of ordered index sets a, b
    swaps = 0
    for i in range(4):
        if b >> i & 1:
            swaps += bin(a >> (i + 1)).count("1")
    return -1 if swaps & 1 else 1


def _build_constant_tables():
    wedge = np.zeros((16, 16, 16))  # wedge[i, k, j]: (blade_i ^ blade_j)_k
    for i, a in enumerate(BLADES):
        for j, b in enumerate(BLADES):
            if a & b == 0:
                wedge[i, _INDEX[a | b], j] = _reorder_sign(a, b)
    interior = np.zeros((4, 16, 16))  # i_{d/dx^nu}
    wvec = np.zeros((4, 16, 16))      # dx^mu ^ (.)
    for j, m in enumerate(BLADES):
        for nu in range(4):
            below = bin(m & ((1 << nu) - 1)).count("1")
            s = -1.0 if below & 1 else 1.0
            if m >> nu & 1:
                interior[nu, _INDEX[m ^ (1 << nu)], j] = s
            else:
                wvec[nu, _INDEX[m | (1 << nu)], j] = s
    return wedge, interior, wvec


WEDGE_TABLE, INTERIOR, WEDGE_VECTOR = _build_constant_tables()
_WEDGE_FLAT = WEDGE_TABLE.reshape(16, 256)


def _build_form_derivation():
    # Q[o, i, nu, lam]: coefficient on blade o after replacing the factor
    # dx^nu of blade i by dx^lam (derivation acting factor by factor)
    q = np.zeros((16, 16, 4, 4))
    for i, m in enumerate(BLADES):
        idx = [k for k in range(4) if m >> k & 1]
        for pos, nu in enumerate(idx):
            for lam in range(4):
                seq = idx[:pos] + [lam] + idx[pos + 1:]
                if len(set(seq)) < len(seq):
                    continue
                perm_sign = 1
                s = list(seq)
                for a in range(len(s)):
                    for b in range(a + 1, len(s)):
                        if s[a] > s[b]:
                            perm_sign = -perm_sign
                mask = 0
                for k in s:
                    mask |= 1 << k
                q[_INDEX[mask], i, nu, lam] += perm_sign
    return q


FORM_DERIVATION = _build_form_derivation()


class MetricError(ValueError):
    pass


class ContextMismatch(ValueError):
    pass


class SeriesNotConverged(ArithmeticError):
    pass


@dataclass(eq=False)
class MetricContext:
    """Metric data at a point and the Clifford product table it induces."""

    g: np.ndarray
    g_inv: np.ndarray = None
    det_g: float = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        if self.g_inv is None:
            self.g_inv = np.linalg.inv(self.g)
        if self.det_g is None:
            self.det_g = float(np.linalg.det(self.g))
        if self.check:
            self.validate()

    def validate(self) -> None:
        g = self.g
        scale = max(1.0, float(np.abs(g).max()))
        if g.shape != (4, 4) or np.abs(g - g.T).max() > 1e-14 * scale:
            raise MetricError("metric is not a symmetric 4x4 matrix")
        resid = np.abs(g @ self.g_inv - np.eye(4)).max()
        if resid > 1e-12 * max(1.0, float(np.linalg.cond(g))):
            raise MetricError(f"g . g_inv deviates from identity by {resid:.3g}")
        if not self.det_g < 0:
            raise MetricError(f"det g = {self.det_g:.6g} is not negative")
        if not g[0, 0] > 0:
            raise MetricError(f"g_00 = {g[0, 0]:.6g} is not positive")
        ev = np.linalg.eigvalsh(0.5 * (g + g.T))
        if (ev > 0).sum() != 1 or (ev < 0).sum() != 3:
            raise MetricError(f"metric signature is not (+,-,-,-): eigenvalues {ev}")

    @classmethod
    def minkowski(cls) -> "MetricContext":
        return _MINKOWSKI

    @cached_property
    def table(self) -> np.ndarray:
        """``table[i, k, j]``: coefficient of blade k in ``blade_i . blade_j``."""
        return _product_table(self.g_inv)

    @cached_property
    def _table_flat(self) -> np.ndarray:
        return self.table.reshape(16, 256)

    @cached_property
    def contraction(self) -> np.ndarray:
        """``contraction[mu]`` is the matrix of ``dx^mu _| (.)``."""
        return np.einsum("mn,nkj->mkj", self.g_inv, INTERIOR)


def _product_table(g_inv: np.ndarray) -> np.ndarray:
    contract = np.einsum("mn,nkj->mkj", g_inv, INTERIOR)
    left: dict[int, np.ndarray] = {0: np.eye(16)}
    vec = {mu: WEDGE_VECTOR[mu] + contract[mu] for mu in range(4)}
    for i, m in enumerate(BLADES):
        if m == 0:
            continue
        mu1 = (m & -m).bit_length() - 1
        rest = m ^ (1 << mu1)
        rest_i = _INDEX[rest]
        # dx^mu1 ^ R = dx^mu1 . R - dx^mu1 _| R   (mu1 below every index of R)
        mat = vec[mu1] @ left[rest_i]
        lower = contract[mu1][:, rest_i]
        for c in np.nonzero(lower)[0]:
            mat = mat - lower[c] * left[int(c)]
        left[i] = mat
    return np.stack([left[i] for i in range(16)])


_MINKOWSKI = MetricContext(np.diag([1.0, -1.0, -1.0, -1.0]))


# ---------------------------------------------------------------------------
# raw-array kernels
# ---------------------------------------------------------------------------


def outer_product(a: np.ndarray, b: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Clifford product of every element of ``a`` with every element of ``b``.

    ``a`` has shape ``A + (16,)`` and ``b`` shape ``B + (16,)``; the result
    has shape ``A + B + (16,)``.
    """
    sa, sb = a.shape[:-1], b.shape[:-1]
    a2 = a.reshape(-1, 16)
    b2 = b.reshape(-1, 16)
    x = (a2 @ table.reshape(16, 256)).reshape(-1, 16, 16)  # [a, k, j]
    out = x @ b2.T  # [a, k, b]
    return np.moveaxis(out, 1, 2).reshape(sa + sb + (16,))


def paired_product(a: np.ndarray, b: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Clifford product of matching elements of two equally-shaped arrays."""
    shape = np.broadcast_shapes(a.shape, b.shape)
    a2 = np.broadcast_to(a, shape).reshape(-1, 16)
    b2 = np.broadcast_to(b, shape).reshape(-1, 16)
    x = (a2 @ table.reshape(16, 256)).reshape(-1, 16, 16)
    return np.einsum("nkj,nj->nk", x, b2).reshape(shape)


def wedge_raw(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return paired_product(a, b, WEDGE_TABLE)


def grade_mask(k: int) -> np.ndarray:
    return (GRADE == k).astype(float)


# ---------------------------------------------------------------------------
# Multivector
# ---------------------------------------------------------------------------


class Multivector:
    """An element of the Clifford algebra of forms at one point."""

    __slots__ = ("coeffs", "ctx")

    def __init__(self, coeffs, ctx: MetricContext):
        c = np.asarray(coeffs)
        if c.shape != (16,):
            raise ValueError(f"expected 16 coefficients, got shape {c.shape}")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        self.coeffs = c
        self.ctx = ctx

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ctx: MetricContext, complex_: bool = False) -> "Multivector":
        return cls(np.zeros(16, dtype=complex if complex_ else float), ctx)

    @classmethod
    def scalar(cls, value, ctx: MetricContext) -> "Multivector":
        c = np.zeros(16, dtype=complex if isinstance(value, complex) else float)
        c[0] = value
        return cls(c, ctx)

    @classmethod
    def blade(cls, ctx: MetricContext, *mus: int, coeff=1.0) -> "Multivector":
        c = np.zeros(16, dtype=complex if isinstance(coeff, complex) else float)
        c[blade_index(*mus)] = coeff
        return cls(c, ctx)

    @classmethod
    def dx(cls, mu: int, ctx: MetricContext) -> "Multivector":
        return cls.blade(ctx, mu)

    # properties ---------------------------------------------------------
    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coeffs)

    @property
    def scalar_part(self):
        return self.coeffs[0]

    def grade(self, k: int) -> "Multivector":
        return grade_project(self, k)

    def grades(self, tol: float = 0.0) -> list[int]:
        return [k for k in range(5) if np.abs(self.coeffs[GRADE == k]).max() > tol]

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max())

    def reverse(self) -> "Multivector":
        return reversion(self)

    def conj(self) -> "Multivector":
        return Multivector(np.conj(self.coeffs), self.ctx)

    def as_complex(self) -> "Multivector":
        return Multivector(self.coeffs.astype(complex), self.ctx)

    # arithmetic ---------------------------------------------------------
    def _same(self, other: "Multivector") -> None:
        if other.ctx is not self.ctx and not (
                np.array_equal(other.ctx.g, self.ctx.g)):
            raise ContextMismatch("multivectors belong to different metric contexts")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._same(other)
            return Multivector(self.coeffs + other.coeffs, self.ctx)
        return self + Multivector.scalar(other, self.ctx)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Multivector):
            self._same(other)
            return Multivector(self.coeffs - other.coeffs, self.ctx)
        return self - Multivector.scalar(other, self.ctx)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Multivector(-self.coeffs, self.ctx)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return clifford_product(self, other)
        if isinstance(other, TensorForm):
            return NotImplemented
        return Multivector(self.coeffs * other, self.ctx)

    def __rmul__(self, other):
        if isinstance(other, TensorForm):
            return NotImplemented
        return Multivector(other * self.coeffs, self.ctx)

    def __truediv__(self, other):
        return Multivector(self.coeffs / other, self.ctx)

    def __xor__(self, other):
        return wedge_product(self, other)

    def __eq__(self, other):
        return (isinstance(other, Multivector) and self.ctx is other.ctx
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = other if isinstance(other, Multivector) else Multivector.scalar(other, self.ctx)
        return bool(np.abs(self.coeffs - other.coeffs).max() <= atol)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c != 0:
                terms.append(f"{c:.6g}*{blade_name(i)}")
        return "Multivector(" + (" + ".join(terms) or "0") + ")"


def _check_ctx(u: Multivector, v: Multivector) -> None:
    if u.ctx is not v.ctx and not np.array_equal(u.ctx.g, v.ctx.g):
        raise ContextMismatch("multivectors belong to different metric contexts")


def clifford_product(u: Multivector, v: Multivector) -> Multivector:
    _check_ctx(u, v)
    t = u.ctx.table
    return Multivector(np.einsum("i,ikj,j->k", u.coeffs, t, v.coeffs), u.ctx)


def wedge_product(u: Multivector, v: Multivector) -> Multivector:
    _check_ctx(u, v)
    return Multivector(np.einsum("i,ikj,j->k", u.coeffs, WEDGE_TABLE, v.coeffs), u.ctx)


def grade_project(u: Multivector, k: int) -> Multivector:
    if k not in range(5):
        raise ValueError(f"grade must be 0..4, got {k}")
    return Multivector(np.where(GRADE == k, u.coeffs, 0), u.ctx)


def reversion(u: Multivector) -> Multivector:
    return Multivector(u.coeffs * REVERSE_SIGN, u.ctx)


def trace_zero(u: Multivector):
    """Trace of a form: its grade-0 coefficient."""
    return u.coeffs[0]


def commutator(u: Multivector, v: Multivector) -> Multivector:
    return clifford_product(u, v) - clifford_product(v, u)


def norm(u) -> float:
    if isinstance(u, (Multivector, TensorForm)):
        return float(np.abs(u.coeffs if isinstance(u, Multivector) else u.data).max(initial=0.0))
    return float(np.abs(np.asarray(u)).max(initial=0.0))


def exp_series(a: np.ndarray, table: np.ndarray, max_terms: int = 64) -> np.ndarray:
    result = np.zeros_like(a)
    result[0] = 1.0
    term = result.copy()
    for k in range(1, max_terms + 1):
        term = paired_product(term, a, table) / k
        result = result + term
        tn = np.abs(term).max()
        if tn < 1e-16 * max(np.abs(result).max(), 1e-300):
            return result
    if tn > 1e-12 * np.abs(result).max():
        raise SeriesNotConverged(
            f"exponential series not converged after {max_terms} terms "
            f"(last term {tn:.3g})")
    return result


def exponential(u: Multivector, max_terms: int = 64) -> Multivector:
    """``sum u^k / k!`` summed until the term is negligible."""
    return Multivector(exp_series(u.coeffs, u.ctx.table, max_terms), u.ctx)


# ---------------------------------------------------------------------------
# TensorForm
# ---------------------------------------------------------------------------


class TensorForm:
    """A multivector-valued tensor with named slots.

    ``slots`` is a string of ``'u'`` (upper) and ``'l'`` (lower) markers,
    one per tensor index; ``data`` has shape ``(4,) * len(slots) + (16,)``.
    """

    __slots__ = ("slots", "data", "ctx")

    def __init__(self, data, ctx: MetricContext, slots: str = ""):
        data = np.asarray(data)
        if data.shape != (4,) * len(slots) + (16,):
            raise ValueError(f"data shape {data.shape} does not match slots '{slots}'")
        if set(slots) - {"u", "l"}:
            raise ValueError(f"slots must be 'u'/'l' markers, got '{slots}'")
        self.slots = slots
        self.data = data
        self.ctx = ctx

    @property
    def p(self) -> int:
        return self.slots.count("u")

    @property
    def q(self) -> int:
        return self.slots.count("l")

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    def __getitem__(self, idx) -> Multivector:
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Multivector(self.data[idx], self.ctx)

    @classmethod
    def from_multivectors(cls, items, ctx: MetricContext, slots: str) -> "TensorForm":
        arr = np.array([[m.coeffs for m in row] if isinstance(row, (list, tuple)) else row.coeffs
                        for row in items])
        return cls(arr, ctx, slots)

    def grade(self, k: int) -> "TensorForm":
        return TensorForm(np.where(GRADE == k, self.data, 0), self.ctx, self.slots)

    def norm(self) -> float:
        return float(np.abs(self.data).max(initial=0.0))

    def __add__(self, other: "TensorForm") -> "TensorForm":
        if other.slots != self.slots:
            raise ValueError("slot structure mismatch")
        return TensorForm(self.data + other.data, self.ctx, self.slots)

    def __sub__(self, other: "TensorForm") -> "TensorForm":
        if other.slots != self.slots:
            raise ValueError("slot structure mismatch")
        return TensorForm(self.data - other.data, self.ctx, self.slots)

    def __neg__(self) -> "TensorForm":
        return TensorForm(-self.data, self.ctx, self.slots)

    def __mul__(self, other):
        if isinstance(other, TensorForm):
            return TensorForm(outer_product(self.data, other.data, self.ctx.table),
                              self.ctx, self.slots + other.slots)
        if isinstance(other, Multivector):
            return TensorForm(outer_product(self.data, other.coeffs, self.ctx.table),
                              self.ctx, self.slots)
        return TensorForm(self.data * other, self.ctx, self.slots)

    def __rmul__(self, other):
        if isinstance(other, Multivector):
            return TensorForm(outer_product(other.coeffs, self.data, self.ctx.table),
                              self.ctx, self.slots)
        return TensorForm(other * self.data, self.ctx, self.slots)

    def __repr__(self):
        return f"TensorForm(slots='{self.slots}', norm={self.norm():.3g})"
