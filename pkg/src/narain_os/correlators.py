"""Schwinger functions: truncated mode sums in the radial domain and the free-field closed form."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, ChargeOverflow, CoincidingPoints, NotRadiallyOrdered, PointSentToInfinity
from .model import Model
from .vertex import VertexSymbol, apply_vertex_sectors, vacuum_sectors

MAX_CURRENTS = 4


@dataclass(frozen=True)
class Configuration:
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(complex(z) for z in self.points))

    def __len__(self):
        return len(self.points)

    @property
    def distinct(self) -> bool:
        pts = self.points
        return all(pts[i] != pts[j] for i in range(len(pts)) for j in range(i))

    @property
    def radially_ordered(self) -> bool:
        r = [abs(z) for z in self.points]
        return all(r[i] > r[i + 1] for i in range(len(r) - 1)) and (not r or r[-1] > 0)

    def require_distinct(self):
        if not self.distinct:
            raise CoincidingPoints("insertion points must be pairwise distinct")


@dataclass(frozen=True)
class SchwingerValue:
    value: complex
    truncation_error: float
    cutoff: float


def _as_cfg(points) -> Configuration:
    return points if isinstance(points, Configuration) else Configuration(tuple(points))


# ------------------------------------------------------------------ truncated evaluator

def _truncated_value(model: Model, insertions, cfg: Configuration, cutoff: float) -> complex:
    k = int(math.floor(cutoff + 1e-9))
    st = vacuum_sectors(model, k, k)
    for sym, z in reversed(list(zip(insertions[1:], cfg.points[1:]))):
        st = apply_vertex_sectors(model, sym, z, st, cutoff, strict=False)
        if not st.data:
            raise ChargeOverflow("every intermediate sector lies above the cutoff")
    st = apply_vertex_sectors(model, insertions[0], cfg.points[0], st, 0.0, strict=False)
    C = st.data.get((0,) * model.rank)
    return complex(C[0, 0]) if C is not None else 0j


def schwinger_truncated(model: Model, insertions, points, cutoff: float) -> SchwingerValue:
    """<1, Y(a_1, z_1) ... Y(a_n, z_n) 1> with intermediate states truncated at h + hbar <= cutoff."""
    cfg = _as_cfg(points)
    if len(cfg) != len(insertions):
        raise ValueError("one point per insertion")
    if not cfg.radially_ordered:
        raise NotRadiallyOrdered("need |z_1| > ... > |z_n| > 0")
    if not insertions:
        return SchwingerValue(1.0 + 0j, 0.0, cutoff)
    val = _truncated_value(model, insertions, cfg, cutoff)
    err = 0.0
    if cutoff >= 1:
        try:
            err = abs(val - _truncated_value(model, insertions, cfg, cutoff - 1))
        except ChargeOverflow:
            err = abs(val)
    return SchwingerValue(val, err, cutoff)


# ------------------------------------------------------------------ closed form

def _expand_symbol(model: Model, sym: VertexSymbol):
    """Terms (coef, kind, payload) with kind 'e' (charge), 'l'/'r' (frame direction)."""
    out = []
    for m, c in sym.state.items():
        if m.n_osc == 0:
            out.append((c, "e", m.charge))
        elif m.n_osc == 1 and not any(m.charge):
            if m.left and m.left[0][1] == 1:
                out.append((c, "l", m.left[0][0]))
            elif m.right and m.right[0][1] == 1:
                out.append((c, "r", m.right[0][0]))
            else:
                raise ValueError("closed form covers exponentials and weight-one currents only")
        else:
            raise ValueError("closed form covers exponentials and weight-one currents only")
    return out


def pair_power(model: Model, a, b, w: complex) -> complex:
    """w^{(pa,pb)_p} wbar^{(pbar a, pbar b)_p} evaluated as |w|^{2s} w^{(a,b)_lat}."""
    qa = model.polarization.Pbar @ np.asarray(a, float)
    qb = model.polarization.Pbar @ np.asarray(b, float)
    s = float(qa @ model.metric @ qb)
    return abs(w) ** (2 * s) * w ** model.lat_pair(a, b)


def _matchings(items):
    """All partial matchings of a list: yields (pairs, singles)."""
    if not items:
        yield [], []
        return
    first, rest = items[0], items[1:]
    for pairs, singles in _matchings(rest):
        yield pairs, [first] + singles
    for i, other in enumerate(rest):
        for pairs, singles in _matchings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + pairs, singles


def _closed_term(model: Model, kinds, points) -> complex:
    exps = [(k[1], z) for k, z in zip(kinds, points) if k[0] == "e"]
    total = np.zeros(model.rank, dtype=np.int64)
    for a, _ in exps:
        total += np.asarray(a)
    if np.any(total):
        return 0j
    val = 1.0 + 0j
    for i in range(len(exps)):
        for j in range(i + 1, len(exps)):
            (a, zi), (b, zj) = exps[i], exps[j]
            if not any(a) or not any(b):
                continue
            val *= model.eps(a, b) * pair_power(model, a, b, zi - zj)
    cur = [(k[0], k[1], z) for k, z in zip(kinds, points) if k[0] != "e"]
    if not cur:
        return val
    if len(cur) > MAX_CURRENTS:
        raise CapExceeded(f"at most {MAX_CURRENTS} currents in the closed form")

    def vec(side, d):
        return model.left_basis[d] if side == "l" else model.right_basis[d]

    def linear(side, d, z):
        h = vec(side, d)
        acc = 0j
        for a, za in exps:
            if any(a):
                w = z - za if side == "l" else np.conj(z - za)
                acc += model.pair_p(h, a) / w
        return acc

    wick = 0j
    for pairs, singles in _matchings(cur):
        term = 1.0 + 0j
        for (s1, d1, z1), (s2, d2, z2) in pairs:
            if s1 != s2:
                term = 0j
                break
            w = z1 - z2 if s1 == "l" else np.conj(z1 - z2)
            term *= model.pair_p(vec(s1, d1), vec(s2, d2)) / w ** 2
        if term == 0:
            continue
        for s1, d1, z1 in singles:
            term *= linear(s1, d1, z1)
        wick += term
    return val * wick


def schwinger_closed_form(model: Model, insertions, points) -> complex:
    """Closed-form S_n for exponential and current insertions on all of X_n(C)."""
    cfg = _as_cfg(points)
    if len(cfg) != len(insertions):
        raise ValueError("one point per insertion")
    cfg.require_distinct()
    expanded = [_expand_symbol(model, s) for s in insertions]
    total = 0j
    for combo in itertools.product(*expanded):
        coef = 1.0 + 0j
        for c, _, _ in combo:
            coef *= c
        total += coef * _closed_term(model, [(k, p) for _, k, p in combo], cfg.points)
    return complex(total)


# ------------------------------------------------------------------ Moebius covariance

def covariance_factor(g, dgz: complex) -> complex:
    """(dg)^h conj(dg)^hbar for grading g, as |dg|^{2 hbar} dg^{h - hbar}."""
    return abs(dgz) ** (2 * g.hbar) * dgz ** g.spin


def moebius_pushforward(value_fn, gamma, insertions, points) -> complex:
    """prod_j (gamma'(z_j))^{h_j} conj(gamma'(z_j))^{hbar_j} S(gamma z_1, ..., gamma z_n)."""
    from .errors import PoleHit

    cfg = _as_cfg(points)
    new_pts = []
    fac = 1.0 + 0j
    for sym, z in zip(insertions, cfg.points):
        try:
            gz, dg = gamma.apply(z)
        except PoleHit as exc:
            raise PointSentToInfinity(str(exc)) from exc
        new_pts.append(gz)
        fac *= covariance_factor(sym.grading, dg)
    return fac * value_fn(insertions, new_pts)


def inversion_transform(value_fn, insertions, points) -> complex:
    """prod (-1)^{h - hbar} z^{-2h} zbar^{-2hbar} S(1/z_1, ..., 1/z_n)."""
    from .errors import ZeroPoint

    cfg = _as_cfg(points)
    fac = 1.0 + 0j
    for sym, z in zip(insertions, cfg.points):
        if z == 0:
            raise ZeroPoint("inversion needs nonzero points")
        g = sym.grading
        fac *= (-1) ** g.spin * abs(z) ** (-4 * g.hbar) * z ** (-2 * g.spin)
    return fac * value_fn(insertions, [1 / z for z in cfg.points])
