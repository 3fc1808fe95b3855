"""Metric geometry induced by a tetrad, evaluated pointwise.

A :class:`GeometryDefinition` holds the sixteen tetrad components
``e_mu^a(x)`` as expressions.  :func:`build_frame` differentiates them
symbolically (up to third order), assembles the metric
``g_{mu nu} = e_mu^a e_nu^b eta_ab`` and its derivatives, and computes
the Levi-Civita connection, the Riemann tensor and its contractions.

Index layout of the arrays stored on a :class:`PointFrame`:

``gamma[mu, nu, lam]``          Gamma_{mu nu}^lam
``dgamma[rho, mu, nu, lam]``    d_rho Gamma_{mu nu}^lam
``riemann[lam, mu, nu, kap]``   R_{lam mu nu}^kap
                                = d_mu Gamma_{nu lam}^kap - d_nu Gamma_{mu lam}^kap
                                  + Gamma_{mu eta}^kap Gamma_{nu lam}^eta
                                  - Gamma_{nu eta}^kap Gamma_{mu lam}^eta
``ricci[nu, rho]``              R_{nu rho} = R_{nu mu rho}^mu

A second, symbolic-free pipeline (:func:`oracle_frame`) uses central
differences of the tetrad values and plain loops; it exists only to
cross-check the first.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .clifford import FORM_DERIVATION, MetricContext, MetricError
from .expr import (Expression, SymbolTable, compile_many, derivative, parse,
                   evaluate)

__all__ = [
    "ETA", "GeometryError", "DomainViolation", "DegenerateTetrad", "OracleError",
    "GeometryDefinition", "TetradJet", "PointFrame",
    "build_frame", "frame_from_jet", "covariant_derivative",
    "second_covariant_derivative", "connection_terms", "einstein_tensor",
    "finite_difference_oracle", "oracle_frame", "OracleFrame",
    "bianchi_residual", "metric_compatibility_residual", "riemann_symmetry_residuals",
    "ricci_commutator_residual",
]

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


class GeometryError(ValueError):
    pass


class DomainViolation(GeometryError):
    pass


class DegenerateTetrad(GeometryError):
    pass


class OracleError(GeometryError):
    pass


def _multi_indices(order: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations_with_replacement(range(4), order))


# ---------------------------------------------------------------------------
# Geometry definitions
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GeometryDefinition:
    """Tetrad components as expressions plus coordinate domain data.

    ``tetrad[mu][a]`` is the expression for ``e_mu^a``.  A point is inside
    the geometry when it lies in the closed ``domain`` box and every
    ``exclude`` expression evaluates to a value ``<= 0`` there.
    """

    name: str
    coordinates: tuple[str, str, str, str]
    parameters: dict[str, float]
    tetrad: list[list[Expression]]
    domain: list[tuple[float, float]]
    exclude: list[Expression] = field(default_factory=list)
    source: dict | None = field(default=None, repr=False)

    @property
    def symbols(self) -> SymbolTable:
        return SymbolTable(tuple(self.coordinates), tuple(self.parameters))

    # construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, d: Mapping) -> "GeometryDefinition":
        for key in ("name", "coordinates", "tetrad", "domain"):
            if key not in d:
                raise GeometryError(f"geometry definition lacks field '{key}'")
        coords = tuple(d["coordinates"])
        if len(coords) != 4:
            raise GeometryError(f"expected 4 coordinate names, got {len(coords)}")
        params = {str(k): float(v) for k, v in dict(d.get("parameters", {})).items()}
        symbols = SymbolTable(coords, tuple(params))
        rows = d["tetrad"]
        if not isinstance(rows, list):
            raise GeometryError("tetrad must be a 4x4 array of expression strings")
        tetrad: list[list[Expression]] = []
        for mu in range(4):
            row = rows[mu] if mu < len(rows) else []
            parsed = []
            for a in range(4):
                if a >= len(row):
                    raise GeometryError(f"missing component e_{mu}^{a}")
                try:
                    parsed.append(parse(str(row[a]), symbols))
                except ValueError as exc:
                    raise GeometryError(f"component e_{mu}^{a}: {exc}") from exc
            if len(row) > 4:
                raise GeometryError(f"tetrad row {mu} has {len(row)} entries")
            tetrad.append(parsed)
        if len(rows) > 4:
            raise GeometryError(f"tetrad has {len(rows)} rows")
        domain = [tuple(map(float, iv)) for iv in d["domain"]]
        if len(domain) != 4 or any(len(iv) != 2 or iv[0] > iv[1] for iv in domain):
            raise GeometryError("domain must list 4 intervals [lo, hi]")
        exclude = []
        for i, s in enumerate(d.get("exclude", [])):
            try:
                exclude.append(parse(str(s), symbols))
            except ValueError as exc:
                raise GeometryError(f"exclude[{i}]: {exc}") from exc
        return cls(str(d["name"]), coords, params, tetrad, domain, exclude, dict(d))

    @classmethod
    def from_json(cls, path: str | Path) -> "GeometryDefinition":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GeometryError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def with_params(self, **params: float) -> "GeometryDefinition":
        unknown = set(params) - set(self.parameters)
        if unknown:
            raise GeometryError(f"unknown parameters {sorted(unknown)}")
        new = dict(self.parameters)
        new.update({k: float(v) for k, v in params.items()})
        return GeometryDefinition(self.name, self.coordinates, new, self.tetrad,
                                  self.domain, self.exclude, self.source)

    # evaluation ---------------------------------------------------------
    def _args(self, x: Sequence[float]) -> list[float]:
        return [float(v) for v in x] + [self.parameters[p] for p in self.parameters]

    @cached_property
    def _argnames(self) -> list[str]:
        return list(self.coordinates) + list(self.parameters)

    def _compiled(self, order: int):
        cache = self.__dict__.setdefault("_fn_cache", {})
        if order not in cache:
            exprs = []
            for multi in _multi_indices(order):
                names = [self.coordinates[i] for i in multi]
                for mu in range(4):
                    for a in range(4):
                        exprs.append(derivative(self.tetrad[mu][a], names))
            cache[order] = compile_many(exprs, self._argnames)
        return cache[order]

    def tetrad_values(self, x: Sequence[float]) -> np.ndarray:
        return np.array(self._compiled(0)(*self._args(x))).reshape(4, 4)

    def tetrad_jet(self, x: Sequence[float], order: int = 3) -> "TetradJet":
        args = self._args(x)
        e = np.array(self._compiled(0)(*args)).reshape(4, 4)
        derivs = []
        for k in range(1, order + 1):
            flat = np.array(self._compiled(k)(*args)).reshape(-1, 4, 4)
            full = np.empty((4,) * k + (4, 4))
            for n, multi in enumerate(_multi_indices(k)):
                for perm in set(itertools.permutations(multi)):
                    full[perm] = flat[n]
            derivs.append(full)
        derivs += [None] * (3 - order)
        return TetradJet(e, *derivs)

    def contains(self, x: Sequence[float]) -> bool:
        for v, (lo, hi) in zip(x, self.domain):
            if not lo <= v <= hi:
                return False
        if self.exclude:
            env = dict(zip(self.coordinates, map(float, x)))
            env.update(self.parameters)
            for ex in self.exclude:
                try:
                    if evaluate(ex, env) > 0:
                        return False
                except ArithmeticError:
                    return False
        return True

    def sample_points(self, n: int, seed: int, max_tries: int = 100000) -> np.ndarray:
        """Uniform points in the domain box outside excluded regions."""
        rng = np.random.default_rng(seed)
        lo = np.array([iv[0] for iv in self.domain])
        hi = np.array([iv[1] for iv in self.domain])
        pts = []
        tries = 0
        while len(pts) < n:
            tries += 1
            if tries > max_tries:
                raise GeometryError(f"could not sample {n} admissible points")
            p = lo + (hi - lo) * rng.random(4)
            if self.contains(p):
                pts.append(p)
        return np.array(pts).reshape(n, 4)

    def base_point(self) -> np.ndarray:
        """A fixed admissible point: the catalog's base point if given, else the box centre."""
        if self.source and "base_point" in self.source:
            return np.array(self.source["base_point"], dtype=float)
        return np.array([(lo + hi) / 2 for lo, hi in self.domain])


@dataclass
class TetradJet:
    """Tetrad values and coordinate partials at a point.

    ``e[mu, a]``, ``de[r, mu, a]``, ``d2e[r, s, mu, a]``, ``d3e[r, s, t, mu, a]``.
    """

    e: np.ndarray
    de: np.ndarray
    d2e: np.ndarray | None = None
    d3e: np.ndarray | None = None

    @property
    def order(self) -> int:
        return 1 + (self.d2e is not None) + (self.d3e is not None)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def _eta_outer(a: np.ndarray, b: np.ndarray, na: int, nb: int) -> np.ndarray:
    # (A eta B^T) with na/nb leading derivative axes on a/b
    la = "opqr"[:na]
    lb = "stuv"[:nb]
    return np.einsum(f"{la}ma,ab,{lb}nb->{la}{lb}mn", a, ETA, b)


def metric_jet(jet: TetradJet):
    e, de, d2e, d3e = jet.e, jet.de, jet.d2e, jet.d3e
    g = e @ ETA @ e.T
    t = _eta_outer(de, e, 1, 0)
    dg = t + np.swapaxes(t, -1, -2)
    d2g = d3g = None
    if d2e is not None:
        a = _eta_outer(d2e, e, 2, 0)
        b = _eta_outer(de, de, 1, 1)
        d2g = a + np.swapaxes(a, -1, -2) + b + np.swapaxes(b, 0, 1)
    if d3e is not None:
        a = _eta_outer(d3e, e, 3, 0)
        b = _eta_outer(d2e, de, 2, 1)  # [r, s, t]: d_rs e, d_t e
        c = b + np.swapaxes(b, -1, -2)  # symmetrise in (m, n) slots
        # sum over which single derivative index sits on the first-order factor
        mixed = c + np.transpose(c, (0, 2, 1, 3, 4)) + np.transpose(c, (2, 1, 0, 3, 4))
        d3g = a + np.swapaxes(a, -1, -2) + mixed
    return g, dg, d2g, d3g


@dataclass(eq=False)
class PointFrame:
    """All geometric data of the tetrad geometry at one point."""

    x: np.ndarray
    jet: TetradJet
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray | None
    d3g: np.ndarray | None
    gamma: np.ndarray
    dgamma: np.ndarray | None
    d2gamma: np.ndarray | None
    riemann: np.ndarray | None
    driemann: np.ndarray | None
    ctx: MetricContext

    @property
    def e(self) -> np.ndarray:
        return self.jet.e

    @cached_property
    def e_inv(self) -> np.ndarray:
        """``e_inv[c, mu]`` = e^mu_c, so that e^mu_c e_mu^a = delta_c^a."""
        return np.linalg.inv(self.jet.e)

    @cached_property
    def dg_inv(self) -> np.ndarray:
        return -np.einsum("ab,rbc,cd->rad", self.g_inv, self.dg, self.g_inv)

    @cached_property
    def ricci(self) -> np.ndarray:
        return np.einsum("nmrm->nr", self.riemann)

    @cached_property
    def scalar_curvature(self) -> float:
        return float(np.einsum("rn,rn->", self.g_inv, self.ricci))

    @cached_property
    def riemann_lower(self) -> np.ndarray:
        """R_{kap lam mu nu} = g_{kap rho} R_{lam mu nu}^rho."""
        return np.einsum("kr,lmnr->klmn", self.g, self.riemann)

    @cached_property
    def riemann_upper(self) -> np.ndarray:
        gi = self.g_inv
        return np.einsum("klmn,ka,lb,mc,nd->abcd", self.riemann_lower, gi, gi, gi, gi)

    @cached_property
    def kretschmann(self) -> float:
        return float(np.einsum("abcd,abcd->", self.riemann_lower, self.riemann_upper))

    @cached_property
    def ricci_upper(self) -> np.ndarray:
        return self.g_inv @ self.ricci @ self.g_inv

    @cached_property
    def sqrt_minus_g(self) -> float:
        return math.sqrt(-self.ctx.det_g)

    @cached_property
    def form_connection(self) -> np.ndarray:
        """``G[mu]``: 16x16 matrix of the Levi-Civita derivation on blade coefficients."""
        return -np.einsum("oivl,mlv->moi", FORM_DERIVATION, self.gamma)

    @cached_property
    def dform_connection(self) -> np.ndarray:
        """``dG[rho, mu]`` = d_rho G[mu]."""
        return -np.einsum("oivl,rmlv->rmoi", FORM_DERIVATION, self.dgamma)


def frame_from_jet(jet: TetradJet, x: Sequence[float] | None = None,
                   check: bool = True) -> PointFrame:
    """Assemble metric, connection and curvature from tetrad partials."""
    e = jet.e
    det_e = np.linalg.det(e)
    if not np.isfinite(det_e) or abs(det_e) < 1e-12 * max(1.0, np.abs(e).max()) ** 4:
        raise DegenerateTetrad(f"tetrad matrix is singular (det = {det_e:.3g})")
    g, dg, d2g, d3g = metric_jet(jet)
    g = 0.5 * (g + g.T)
    g_inv = np.linalg.inv(g)
    ctx = MetricContext(g, g_inv, float(np.linalg.det(g)), check=check)

    g1 = 0.5 * (np.einsum("mnk->mnk", dg) + np.einsum("nmk->mnk", dg)
                - np.einsum("kmn->mnk", dg))
    gamma = np.einsum("mnk,kl->mnl", g1, g_inv)
    dgamma = d2gamma = riemann = driemann = None
    dginv = -np.einsum("ab,rbc,cd->rad", g_inv, dg, g_inv)
    if d2g is not None:
        dg1 = 0.5 * (np.einsum("rmnk->rmnk", d2g) + np.einsum("rnmk->rmnk", d2g)
                     - np.einsum("rkmn->rmnk", d2g))
        dgamma = (np.einsum("rmnk,kl->rmnl", dg1, g_inv)
                  + np.einsum("mnk,rkl->rmnl", g1, dginv))
        riemann = (np.einsum("mnlk->lmnk", dgamma) - np.einsum("nmlk->lmnk", dgamma)
                   + np.einsum("mhk,nlh->lmnk", gamma, gamma)
                   - np.einsum("nhk,mlh->lmnk", gamma, gamma))
    if d3g is not None:
        d2g1 = 0.5 * (np.einsum("srmnk->srmnk", d3g) + np.einsum("srnmk->srmnk", d3g)
                      - np.einsum("srkmn->srmnk", d3g))
        # d_s d_r g^{-1} = -(d_s g^-1) dg_r g^-1 - g^-1 d2g_sr g^-1 - g^-1 dg_r d_s g^-1
        d2ginv = -(np.einsum("sab,rbc,cd->srad", dginv, dg, g_inv)
                   + np.einsum("ab,srbc,cd->srad", g_inv, d2g, g_inv)
                   + np.einsum("ab,rbc,scd->srad", g_inv, dg, dginv))
        d2gamma = (np.einsum("srmnk,kl->srmnl", d2g1, g_inv)
                   + np.einsum("rmnk,skl->srmnl", dg1, dginv)
                   + np.einsum("smnk,rkl->srmnl", dg1, dginv)
                   + np.einsum("mnk,srkl->srmnl", g1, d2ginv))
        driemann = (np.einsum("smnlk->slmnk", d2gamma) - np.einsum("snmlk->slmnk", d2gamma)
                    + np.einsum("smhk,nlh->slmnk", dgamma, gamma)
                    + np.einsum("mhk,snlh->slmnk", gamma, dgamma)
                    - np.einsum("snhk,mlh->slmnk", dgamma, gamma)
                    - np.einsum("nhk,smlh->slmnk", gamma, dgamma))
    xx = np.zeros(4) if x is None else np.asarray(x, dtype=float)
    return PointFrame(xx, jet, g, g_inv, dg, d2g, d3g, gamma, dgamma, d2gamma,
                      riemann, driemann, ctx)


def build_frame(geo: GeometryDefinition, x: Sequence[float], order: int = 3) -> PointFrame:
    """Geometry at ``x`` from symbolic tetrad derivatives up to ``order``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise GeometryError("a point needs exactly 4 coordinates")
    if not geo.contains(x):
        raise DomainViolation(f"point {x.tolist()} is outside the domain of '{geo.name}'")
    jet = geo.tetrad_jet(x, order)
    return frame_from_jet(jet, x)


# ---------------------------------------------------------------------------
# Covariant derivatives of tensors (and multivector-valued tensors)
# ---------------------------------------------------------------------------

_LETTERS = "abcdefghijklnopqrstuvwxy"


def connection_terms(t: np.ndarray, slots: str, gamma: np.ndarray,
                     form_connection: np.ndarray | None = None) -> np.ndarray:
    """Connection part of the covariant derivative of ``t``.

    ``t`` has one axis of length 4 per entry of ``slots`` ('u' upper,
    'l' lower), optionally followed by a blade axis of length 16 whose
    coefficients transform through ``form_connection`` (16x16 per
    direction).  The returned array carries the derivative index first.
    """
    n = len(slots)
    letters = _LETTERS[:n]
    blade = t.ndim == n + 1
    tail = "z" if blade else ""
    out = np.zeros((4,) + t.shape, dtype=np.result_type(t, gamma))
    src = letters + tail
    for s, kind in enumerate(slots):
        summed = letters[:s] + "w" + letters[s + 1:] + tail
        res = "m" + src
        if kind == "l":
            out -= np.einsum(f"{letters[s]}mw,{summed}->{res}", gamma, t)
        else:
            out += np.einsum(f"wm{letters[s]},{summed}->{res}", gamma, t)
    if blade:
        if form_connection is None:
            raise ValueError("blade axis present but no form connection given")
        out += np.einsum(f"mzi,{letters}i->m{letters}z", form_connection, t)
    return out


def covariant_derivative(values: np.ndarray, partials: np.ndarray, slots: str,
                         frame: PointFrame, forms: bool = False) -> np.ndarray:
    """First covariant derivative; the new (lower) index comes first.

    ``partials[mu, ...]`` holds the coordinate partials d_mu of ``values``.
    Scalars (``slots == ''``) reduce to the partials themselves.
    """
    if partials is None:
        raise ValueError("covariant derivative needs the component partials")
    fc = frame.form_connection if forms else None
    return partials + connection_terms(values, slots, frame.gamma, fc)


def second_covariant_derivative(values: np.ndarray, partials: np.ndarray,
                                second: np.ndarray, slots: str, frame: PointFrame,
                                forms: bool = False) -> np.ndarray:
    """``out[nu, mu, ...]`` = nabla_nu nabla_mu of the tensor."""
    if frame.dgamma is None:
        raise ValueError("frame lacks connection derivatives")
    fc = frame.form_connection if forms else None
    first = partials + connection_terms(values, slots, frame.gamma, fc)
    # d_nu of the first derivative, component-wise
    d_first = second.copy()
    for nu in range(4):
        d_first[nu] = d_first[nu] + connection_terms(
            partials[nu], slots, frame.gamma, fc)
        d_first[nu] = d_first[nu] + connection_terms(
            values, slots, frame.dgamma[nu],
            frame.dform_connection[nu] if forms else None)
    return d_first + connection_terms(first, "l" + slots, frame.gamma, fc)


def einstein_tensor(frame: PointFrame) -> np.ndarray:
    """G^{mu nu} = R^{mu nu} - R g^{mu nu} / 2."""
    g_up = frame.ricci_upper - 0.5 * frame.scalar_curvature * frame.g_inv
    return 0.5 * (g_up + g_up.T)


# ---------------------------------------------------------------------------
# Identity residuals
# ---------------------------------------------------------------------------


def metric_compatibility_residual(frame: PointFrame) -> dict[str, float]:
    """Max |nabla g|, |nabla g^-1|, |nabla delta| at the frame."""
    ng = covariant_derivative(frame.g, frame.dg, "ll", frame)
    ngi = covariant_derivative(frame.g_inv, frame.dg_inv, "uu", frame)
    nd = covariant_derivative(np.eye(4), np.zeros((4, 4, 4)), "ul", frame)
    return {"g": float(np.abs(ng).max()), "g_inv": float(np.abs(ngi).max()),
            "delta": float(np.abs(nd).max())}


def riemann_symmetry_residuals(frame: PointFrame) -> dict[str, float]:
    """Relative residuals of the Christoffel and Riemann symmetries."""
    R = frame.riemann_lower
    scale = max(float(np.abs(R).max()), 1e-300)
    gscale = max(float(np.abs(frame.gamma).max()), 1e-300)
    cyc = R[:, :, :, :] + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)
    ric = frame.ricci
    out = {
        "gamma_symmetric": float(np.abs(frame.gamma - frame.gamma.transpose(1, 0, 2)).max()) / gscale,
        "pair_symmetry": float(np.abs(R - R.transpose(2, 3, 0, 1)).max()) / scale,
        "antisymmetry_first": float(np.abs(R + R.transpose(1, 0, 2, 3)).max()) / scale,
        "antisymmetry_last": float(np.abs(R + R.transpose(0, 1, 3, 2)).max()) / scale,
        "cyclic": float(np.abs(cyc).max()) / scale,
        "ricci_symmetric": float(np.abs(ric - ric.T).max()) / max(float(np.abs(ric).max()), 1e-300),
    }
    if float(np.abs(R).max()) < 1e-13:
        out = {k: (v if k == "gamma_symmetric" else 0.0) for k, v in out.items()}
    if float(np.abs(frame.gamma).max()) < 1e-13:
        out["gamma_symmetric"] = 0.0
    if float(np.abs(ric).max()) < 1e-13:
        out["ricci_symmetric"] = float(np.abs(ric - ric.T).max())
    return out


def bianchi_residual(frame: PointFrame) -> float:
    """max_beta |nabla_alpha G^{alpha beta}|, relative to the size of its terms."""
    if frame.driemann is None:
        raise ValueError("contracted Bianchi identity needs third tetrad derivatives")
    gi, dgi = frame.g_inv, frame.dg_inv
    ric = frame.ricci
    dric = np.einsum("snmrm->snr", frame.driemann)
    R = frame.scalar_curvature
    dR = np.einsum("srn,rn->s", dgi, ric) + np.einsum("rn,srn->s", gi, dric)
    ric_up = gi @ ric @ gi
    d_ric_up = (np.einsum("sar,rn,nb->sab", dgi, ric, gi)
                + np.einsum("ar,srn,nb->sab", gi, dric, gi)
                + np.einsum("ar,rn,snb->sab", gi, ric, dgi))
    G = ric_up - 0.5 * R * gi
    dG = d_ric_up - 0.5 * (dR[:, None, None] * gi + R * dgi)
    gam = frame.gamma
    div = (np.einsum("aab->b", dG)
           + np.einsum("laa,lb->b", gam, G)
           + np.einsum("lab,al->b", gam, G))
    scale = max(1.0, float(np.abs(dG).max()), float(np.abs(gam).max() * np.abs(G).max()))
    return float(np.abs(div).max()) / scale


def ricci_commutator_residual(frame: PointFrame, a: np.ndarray, da: np.ndarray,
                              d2a: np.ndarray) -> float:
    """Residual of [nabla_mu, nabla_nu] a_rho + R_{rho mu nu}^lam a_lam.

    ``a``, ``da[mu, rho]``, ``d2a[nu, mu, rho]`` are a covector field and its
    coordinate partials at the frame point.
    """
    nn = second_covariant_derivative(a, da, d2a, "l", frame)  # [nu, mu, rho]
    comm = nn - nn.transpose(1, 0, 2)  # [mu, nu, rho] = (nabla_mu nabla_nu - nabla_nu nabla_mu)a_rho
    rhs = -np.einsum("rmnl,l->mnr", frame.riemann, a)
    scale = max(1.0, float(np.abs(rhs).max()))
    return float(np.abs(comm - rhs).max()) / scale


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def _stencil(order: int):
    offs = []
    for r in range(4):
        for sr in (1, -1):
            offs.append({r: sr})
            if order == 2:
                for t in range(r + 1, 4):
                    for st in (1, -1):
                        offs.append({r: sr, t: st})
    return offs


def _steps(geo: GeometryDefinition, x: np.ndarray, base: float, order: int) -> np.ndarray:
    h = base * (1.0 + np.abs(x))
    offs = _stencil(order)
    for _ in range(5):
        ok = True
        for off in offs:
            p = x.copy()
            for k, sgn in off.items():
                p[k] += sgn * h[k]
            if not geo.contains(p):
                ok = False
                break
        if ok:
            return h
        h = h / 2
    raise OracleError(f"finite-difference stencil leaves the domain at {x.tolist()}")


def _central(f, x: np.ndarray, h: np.ndarray, order: int, f0=None) -> np.ndarray:
    if order == 1:
        out = []
        for r in range(4):
            xp, xm = x.copy(), x.copy()
            xp[r] += h[r]
            xm[r] -= h[r]
            out.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h[r]))
        return np.array(out)
    out = np.empty((4, 4) + f0.shape)
    for r in range(4):
        for s in range(r, 4):
            if r == s:
                xp, xm = x.copy(), x.copy()
                xp[r] += h[r]
                xm[r] -= h[r]
                v = (np.asarray(f(xp)) - 2 * f0 + np.asarray(f(xm))) / h[r] ** 2
            else:
                acc = 0.0
                for sr, ss in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    p = x.copy()
                    p[r] += sr * h[r]
                    p[s] += ss * h[s]
                    acc = acc + sr * ss * np.asarray(f(p))
                v = acc / (4 * h[r] * h[s])
            out[r, s] = v
            out[s, r] = v
    return out


def finite_difference_oracle(geo: GeometryDefinition, x: Sequence[float],
                             order: int = 1, values=None, extrapolate: bool = True) -> np.ndarray:
    """Central-difference partials of the tetrad at ``x``.

    ``order=1`` returns ``de[r, mu, a]`` with base step ``1e-4 (1 + |x_r|)``;
    ``order=2`` returns ``d2e[r, s, mu, a]`` with base step ``1e-3 (1 + |x_r|)``.
    With ``extrapolate`` the differences at ``h`` and ``h/2`` are combined
    as ``(4 D(h/2) - D(h)) / 3``, cancelling the O(h^2) truncation term;
    every stencil point stays inside the plain ``h`` stencil.
    ``values`` may replace ``geo.tetrad_values`` with any array-valued field.
    """
    if order not in (1, 2):
        raise ValueError("oracle order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    f = values or geo.tetrad_values
    h = _steps(geo, x, 1e-4 if order == 1 else 1e-3, order)
    f0 = np.asarray(f(x)) if order == 2 else None
    coarse = _central(f, x, h, order, f0)
    if not extrapolate:
        return coarse
    fine = _central(f, x, h / 2, order, f0)
    return (4 * fine - coarse) / 3


@dataclass
class OracleFrame:
    g: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar_curvature: float
    jet: TetradJet


def oracle_frame(geo: GeometryDefinition, x: Sequence[float]) -> OracleFrame:
    """Metric, connection and curvature from finite differences, written with loops."""
    x = np.asarray(x, dtype=float)
    e = geo.tetrad_values(x)
    de = finite_difference_oracle(geo, x, 1)
    d2e = finite_difference_oracle(geo, x, 2)
    eta = [1.0, -1.0, -1.0, -1.0]
    R4 = range(4)

    def gmet(m, n):
        return sum(eta[a] * e[m, a] * e[n, a] for a in R4)

    def dgm(r, m, n):
        return sum(eta[a] * (de[r, m, a] * e[n, a] + e[m, a] * de[r, n, a]) for a in R4)

    def d2gm(r, s, m, n):
        return sum(eta[a] * (d2e[r, s, m, a] * e[n, a] + de[r, m, a] * de[s, n, a]
                             + de[s, m, a] * de[r, n, a] + e[m, a] * d2e[r, s, n, a])
                   for a in R4)

    g = np.array([[gmet(m, n) for n in R4] for m in R4])
    gi = np.linalg.inv(g)
    dg = np.array([[[dgm(r, m, n) for n in R4] for m in R4] for r in R4])
    gam = np.zeros((4, 4, 4))
    for m in R4:
        for n in R4:
            for l in R4:
                gam[m, n, l] = 0.5 * sum(
                    gi[l, k] * (dg[m, n, k] + dg[n, m, k] - dg[k, m, n]) for k in R4)
    # d_r Gamma via d_r (g^{lk}) and second metric partials
    dgam = np.zeros((4, 4, 4, 4))
    for r in R4:
        dgi = -gi @ dg[r] @ gi
        for m in R4:
            for n in R4:
                for l in R4:
                    acc = 0.0
                    for k in R4:
                        first = dg[m, n, k] + dg[n, m, k] - dg[k, m, n]
                        second = d2gm(r, m, n, k) + d2gm(r, n, m, k) - d2gm(r, k, m, n)
                        acc += 0.5 * (dgi[l, k] * first + gi[l, k] * second)
                    dgam[r, m, n, l] = acc
    riem = np.zeros((4, 4, 4, 4))
    for l in R4:
        for m in R4:
            for n in R4:
                for k in R4:
                    v = dgam[m, n, l, k] - dgam[n, m, l, k]
                    for h in R4:
                        v += gam[m, h, k] * gam[n, l, h] - gam[n, h, k] * gam[m, l, h]
                    riem[l, m, n, k] = v
    ric = np.zeros((4, 4))
    for n in R4:
        for r in R4:
            ric[n, r] = sum(riem[n, m, r, m] for m in R4)
    R = float(sum(gi[r, n] * ric[r, n] for r in R4 for n in R4))
    return OracleFrame(g, gam, riem, ric, R, TetradJet(e, de, d2e))
