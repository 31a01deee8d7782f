"""Vertex operators Y(a, zeta, zetabar) of F_{L,p} acting on truncated states.

Everything factorizes into a left-moving operator on left oscillators, a right-moving operator
on right oscillators, and a scalar on charge sectors:

    Y(a, z) (x e_beta) = eps(gamma, beta) z^{(p gamma, p beta)_p} zbar^{(pbar gamma, pbar beta)_p}
                         (L_a x_left) (R_a x_right) e_{gamma + beta}

with L_a built from E^-E^+ and the descendant rule, and the power evaluated single-valued as
|z|^{2 (pbar gamma, pbar beta)_p} z^{(gamma, beta)_lat}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chiral import ChiralSpace, chiral_space
from .errors import CutoffTooSmall, IndefiniteMetric, RecursionDepthExceeded, ZeroPoint
from .fock import (
    FockState,
    Grading,
    PBWMonomial,
    conformal_vector,
    is_quasi_primary,
    state_grading,
    weight,
)
from .model import Model

EPS = 1e-9
MAX_DEPTH = 12


@dataclass(frozen=True)
class VertexSymbol:
    """A field insertion: the state a whose vertex operator Y(a, z) is meant."""

    kind: str
    state: FockState
    grading: Grading
    quasi_primary: bool
    data: tuple = ()
    label: str = field(default="", compare=False)

    def terms(self):
        return list(self.state.items())


def make_symbol(model: Model, state: FockState, kind: str = "Descendant", data=(), label="") -> VertexSymbol:
    g = state_grading(model, state)
    if g is None:
        raise ValueError("vertex symbols must be homogeneous and nonzero")
    return VertexSymbol(kind, state, g, is_quasi_primary(model, state), tuple(data), label)


def vacuum_symbol(model: Model) -> VertexSymbol:
    return make_symbol(model, FockState.vacuum(model.rank), "Exponential", (0,) * model.rank, "1")


def exponential(model: Model, alpha) -> VertexSymbol:
    alpha = tuple(int(x) for x in alpha)
    return make_symbol(model, FockState.basis(alpha), "Exponential", alpha, f"e{alpha}")


def _current_state(model: Model, h, side: str) -> FockState:
    h = np.asarray(h, float)
    z = (0,) * model.rank
    if side == "l":
        c = model.left_signs * model.left_coords(h)
        terms = {PBWMonomial(z, ((d, 1),), ()): v for d, v in enumerate(c) if abs(v) > 1e-15}
    else:
        c = model.right_signs * model.right_coords(h)
        terms = {PBWMonomial(z, (), ((d, 1),)): v for d, v in enumerate(c) if abs(v) > 1e-15}
    return FockState(terms)


def current_left(model: Model, h) -> VertexSymbol:
    """h(-1) 1 for h in H_l (lattice coordinates); its field is the current h(z)."""
    h = np.asarray(h, float)
    if np.abs(model.polarization.Pbar @ h).max() > 1e-9:
        raise ValueError("left current needs h in ker(1-p)")
    return make_symbol(model, _current_state(model, h, "l"), "CurrentLeft", tuple(h), "jl")


def current_right(model: Model, h) -> VertexSymbol:
    h = np.asarray(h, float)
    if np.abs(model.polarization.P @ h).max() > 1e-9:
        raise ValueError("right current needs h in ker(p)")
    return make_symbol(model, _current_state(model, h, "r"), "CurrentRight", tuple(h), "jr")


def descendant(model: Model, state: FockState, label: str = "") -> VertexSymbol:
    return make_symbol(model, state, "Descendant", (), label)


def conformal_symbol(model: Model) -> VertexSymbol:
    return descendant(model, conformal_vector(model), "nu")


# ------------------------------------------------------------------ sector states

@dataclass
class SectorState:
    """State stored as charge -> coefficient matrix over (left basis) x (right basis)."""

    left: ChiralSpace
    right: ChiralSpace
    data: dict

    def copy(self) -> "SectorState":
        return SectorState(self.left, self.right, {k: v.copy() for k, v in self.data.items()})


def spaces(model: Model, kl: int, kr: int) -> tuple:
    kl = max(int(kl), 0) if model.n_left else 0
    kr = max(int(kr), 0) if model.n_right else 0
    return (chiral_space(model.n_left, kl, tuple(model.left_signs)),
            chiral_space(model.n_right, kr, tuple(model.right_signs)))


def to_sectors(model: Model, s: FockState, kl: int, kr: int) -> SectorState:
    L, R = spaces(model, kl, kr)
    data: dict = {}
    for m, c in s.items():
        if m.left not in L.index or m.right not in R.index:
            raise CutoffTooSmall("state has oscillator content above the level cap")
        C = data.setdefault(m.charge, np.zeros((L.dim, R.dim), dtype=complex))
        C[L.index[m.left], R.index[m.right]] += c
    return SectorState(L, R, data)


def from_sectors(st: SectorState, tol: float = 0.0) -> FockState:
    terms = {}
    for ch, C in st.data.items():
        for i, j in zip(*np.nonzero(np.abs(C) > tol)):
            terms[PBWMonomial(ch, st.left.basis[i], st.right.basis[j])] = C[i, j]
    return FockState(terms)


def vacuum_sectors(model: Model, kl: int, kr: int) -> SectorState:
    return to_sectors(model, FockState.vacuum(model.rank), kl, kr)


# ------------------------------------------------------------------ one-sided operators

def _side_data(model: Model, side: str):
    if side == "l":
        return model.left_signs, model.left_coords
    return model.right_signs, model.right_coords


def side_operator(model: Model, side: str, gamma, osc, z: complex, beta, space: ChiralSpace):
    """Returns X -> (one-sided part of Y(osc e_gamma, z)) X, acting on columns of X.

    The zero modes of the oscillators read the target charge beta.
    """
    signs, coords = _side_data(model, side)
    c = signs * coords(gamma)
    zb = coords(beta)
    K = space.K

    def base(X):
        return space.e_minus(c, z, space.e_plus(c, z, X))

    op = base
    for d, m in reversed(osc):
        n = m - 1
        cm = np.zeros((space.ndirs, K + 1), dtype=complex)
        for k in range(n, K):
            cm[d, k + 1] = math.comb(k, n) * z ** (k - n)
        cp = np.zeros((space.ndirs, K + 1), dtype=complex)
        for k in range(1, K + 1):
            cp[d, k] = (-1) ** n * math.comb(n + k, n) * z ** (-k - 1 - n)
        Dm = space.mode_sum(-1, cm)
        Dp = space.mode_sum(1, cp)
        zero_val = (-1) ** n * z ** (-1 - n) * zb[d]

        def op(X, inner=op, Dm=Dm, Dp=Dp, zero_val=zero_val):
            return Dm @ inner(X) + inner(Dp @ X + zero_val * X)

    return op


def scalar_factor(model: Model, gamma, beta, z: complex) -> complex:
    """eps(gamma, beta) z^{(p g, p b)_p} zbar^{(pbar g, pbar b)_p}, single-valued."""
    pol = model.polarization
    qg = pol.Pbar @ np.asarray(gamma, float)
    qb = pol.Pbar @ np.asarray(beta, float)
    s = float(qg @ model.metric @ qb)
    k = model.lat_pair(gamma, beta)
    return model.eps(gamma, beta) * abs(z) ** (2 * s) * z ** k


def _check_depth(sym: VertexSymbol, max_depth: int):
    for m in sym.state:
        if m.n_osc > max_depth:
            raise RecursionDepthExceeded(f"oscillator depth {m.n_osc} exceeds cap {max_depth}")


def apply_vertex_sectors(model: Model, sym: VertexSymbol, z: complex, st: SectorState, cutoff: float,
                         max_depth: int = MAX_DEPTH, strict: bool = True) -> SectorState:
    """Y(sym, z) on a sector state, keeping output components with h + hbar <= cutoff."""
    if not model.positive:
        raise IndefiniteMetric("vertex operators need a positive polarization")
    z = complex(z)
    if z == 0:
        raise ZeroPoint("insertion point must be nonzero")
    _check_depth(sym, max_depth)
    L, R = st.left, st.right
    zb = z.conjugate()
    out: dict = {}
    any_sector = not st.data
    for mon, coef in sym.state.items():
        gamma = mon.charge
        for beta, C in st.data.items():
            ch = tuple(g + b for g, b in zip(gamma, beta))
            h, hb = model.sector_weight(ch)
            w = h + hb
            if w > cutoff + EPS:
                continue
            any_sector = True
            s = coef * scalar_factor(model, gamma, beta, z)
            X = side_operator(model, "l", gamma, mon.left, z, beta, L)(C)
            Y = side_operator(model, "r", gamma, mon.right, zb, beta, R)(X.T).T
            mask = (L.levels[:, None] + R.levels[None, :] + w) <= cutoff + EPS
            Y = np.where(mask, s * Y, 0)
            if ch in out:
                out[ch] += Y
            else:
                out[ch] = Y
    if strict and not any_sector:
        raise CutoffTooSmall("every output sector lies above the cutoff")
    return SectorState(L, R, out)


def _levels_for(model: Model, cutoff: float) -> tuple:
    k = int(math.floor(cutoff + EPS))
    return k, k


def apply_vertex(model: Model, sym: VertexSymbol, z: complex, target: FockState, cutoff: float,
                 max_depth: int = MAX_DEPTH) -> FockState:
    """Y(a, z, zbar) target, truncated to output grading h + hbar <= cutoff."""
    for m in target:
        if weight(model, m).total > cutoff + EPS:
            raise CutoffTooSmall("target has components above the cutoff")
    kl, kr = _levels_for(model, cutoff)
    st = to_sectors(model, target, kl, kr)
    return from_sectors(apply_vertex_sectors(model, sym, z, st, cutoff, max_depth))


def apply_descendant_vertex(model: Model, state: FockState, z: complex, target: FockState, cutoff: float,
                            max_depth: int = MAX_DEPTH) -> FockState:
    return apply_vertex(model, descendant(model, state), z, target, cutoff, max_depth)


# ------------------------------------------------------------------ modes

def _mode_rs(model: Model, sym: VertexSymbol, bg: Grading, out_g: Grading) -> tuple:
    r = sym.grading.h + bg.h - 1 - out_g.h
    s = sym.grading.hbar + bg.hbar - 1 - out_g.hbar
    return round(r, 9) + 0.0, round(s, 9) + 0.0


def vertex_modes(model: Model, sym: VertexSymbol, b: FockState, cutoff: float) -> dict:
    """{(r, s): a(r, s) b} for homogeneous b, for all modes landing at h + hbar <= cutoff."""
    bg = state_grading(model, b)
    if bg is None:
        raise ValueError("b must be homogeneous")
    out = apply_vertex(model, sym, 1.0, b, max(cutoff, bg.total))
    modes: dict = {}
    for m, c in out.items():
        rs = _mode_rs(model, sym, bg, weight(model, m))
        modes.setdefault(rs, {})[m] = c
    return {rs: FockState(t) for rs, t in modes.items()}


def mode_norm_sample(model: Model, sym: VertexSymbol, rs: tuple, b: FockState, cutoff: float) -> float:
    """||a(r, s) b|| from the truncated vertex operator at z = 1."""
    from .fock import norm

    bg = state_grading(model, b)
    if bg is None:
        raise ValueError("b must be homogeneous")
    r, s = rs
    h_out = sym.grading.h + bg.h - 1 - r
    hb_out = sym.grading.hbar + bg.hbar - 1 - s
    if h_out + hb_out > cutoff + EPS:
        raise CutoffTooSmall("requested mode lands above the cutoff")
    modes = vertex_modes(model, sym, b, cutoff)
    key = (round(r, 9) + 0.0, round(s, 9) + 0.0)
    if key not in modes:
        return 0.0
    return norm(model, modes[key])


def mode_norm_table(model: Model, sym: VertexSymbol, b: PBWMonomial, grid: int) -> dict:
    """{(r, s): ||a(r, s) b||} over output levels 0 <= kl, kr < grid, for a basis monomial b.

    Uses the left/right factorization: per output charge the output is sum_t A_t (x) B_t, so
    block norms follow from small Gram matrices of the one-sided images.
    """
    bg = weight(model, b)
    kl = max(grid - 1, b.level[0])
    kr = max(grid - 1, b.level[1])
    L, R = spaces(model, kl, kr)
    lb = np.zeros((L.dim, 1), dtype=complex)
    lb[L.index[b.left], 0] = 1
    rb = np.zeros((R.dim, 1), dtype=complex)
    rb[R.index[b.right], 0] = 1
    per_charge: dict = {}
    for mon, coef in sym.state.items():
        gamma = mon.charge
        ch = tuple(g + x for g, x in zip(gamma, b.charge))
        s = coef * scalar_factor(model, gamma, b.charge, 1.0)
        A = side_operator(model, "l", gamma, mon.left, 1.0, b.charge, L)(lb)[:, 0] * s
        B = side_operator(model, "r", gamma, mon.right, 1.0, b.charge, R)(rb)[:, 0]
        per_charge.setdefault(ch, ([], []))
        per_charge[ch][0].append(A)
        per_charge[ch][1].append(B)
    table: dict = {}
    for ch, (As, Bs) in per_charge.items():
        A = np.array(As).T
        B = np.array(Bs).T
        h0, hb0 = model.sector_weight(ch)
        GA = {}
        for k in range(grid):
            sel = L.levels == k
            if sel.any():
                Ak = A[sel]
                GA[k] = (Ak.conj() * L.norm_sq[sel][:, None]).T @ Ak
        GB = {}
        for k in range(grid):
            sel = R.levels == k
            if sel.any():
                Bk = B[sel]
                GB[k] = (Bk.conj() * R.norm_sq[sel][:, None]).T @ Bk
        for a, ga in GA.items():
            for c, gb in GB.items():
                val = float(np.real(np.sum(ga * gb)))
                rs = _mode_rs(model, sym, bg, Grading(h0 + a, hb0 + c))
                table[rs] = table.get(rs, 0.0) + val
    return {rs: math.sqrt(max(v, 0.0)) for rs, v in table.items()}
