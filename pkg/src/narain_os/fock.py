"""The graded space F_{L,p}: PBW monomials, Heisenberg modes, phi, Virasoro modes, Hermitian form.

Oscillator directions refer to the model's pseudo-orthonormal frames: left mode (i, n)
stands for u_i(-n), right mode (j, m) for w_j(-m).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import CapExceeded
from .lattice import enumerate_lattice_points, majorant_points
from .model import Model

VIRASORO_CAP = 4


def _canon_modes(modes) -> tuple:
    out = []
    for d, n in modes:
        d, n = int(d), int(n)
        if n < 1 or d < 0:
            raise ValueError(f"invalid oscillator ({d}, {n})")
        out.append((d, n))
    return tuple(sorted(out))


@dataclass(frozen=True, order=True)
class PBWMonomial:
    charge: tuple
    left: tuple = ()
    right: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "charge", tuple(int(x) for x in self.charge))
        object.__setattr__(self, "left", _canon_modes(self.left))
        object.__setattr__(self, "right", _canon_modes(self.right))

    @property
    def level(self) -> tuple:
        return sum(n for _, n in self.left), sum(n for _, n in self.right)

    @property
    def n_osc(self) -> int:
        return len(self.left) + len(self.right)


@dataclass(frozen=True)
class Grading:
    h: float
    hbar: float

    @property
    def total(self) -> float:
        return self.h + self.hbar

    @property
    def spin(self) -> int:
        return int(round(self.h - self.hbar))

    def key(self) -> tuple:
        return round(self.h, 9), round(self.hbar, 9)


class FockState(Mapping):
    """Finite linear combination of PBW monomials (immutable)."""

    __slots__ = ("_terms",)
    __array_ufunc__ = None  # let numpy scalars defer to __rmul__

    def __init__(self, terms=None):
        acc: dict = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for m, c in items:
                if not isinstance(m, PBWMonomial):
                    m = PBWMonomial(*m)
                acc[m] = acc.get(m, 0) + complex(c)
        self._terms = {m: c for m, c in acc.items() if c != 0}

    @classmethod
    def basis(cls, charge, left=(), right=(), coeff=1.0) -> "FockState":
        return cls({PBWMonomial(charge, left, right): coeff})

    @classmethod
    def vacuum(cls, rank: int) -> "FockState":
        return cls.basis((0,) * rank)

    @classmethod
    def exponential(cls, alpha) -> "FockState":
        return cls.basis(alpha)

    def __getitem__(self, m):
        return self._terms.get(m, 0j)

    def __iter__(self):
        return iter(sorted(self._terms))

    def __len__(self):
        return len(self._terms)

    def __contains__(self, m):
        return m in self._terms

    def __add__(self, other):
        if not isinstance(other, FockState):
            return NotImplemented
        return FockState(list(self._terms.items()) + list(other._terms.items()))

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, c):
        if not isinstance(c, (int, float, complex, np.number)):
            return NotImplemented
        return FockState({m: c * v for m, v in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return (-1) * self

    def __eq__(self, other):
        return isinstance(other, FockState) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        inner = ", ".join(f"{c:.6g}*{m}" for m, c in self.items())
        return f"FockState({inner})"

    def chop(self, tol: float = 1e-14) -> "FockState":
        if not self._terms:
            return self
        scale = max(abs(c) for c in self._terms.values())
        return FockState({m: c for m, c in self._terms.items() if abs(c) > tol * scale})

    def charges(self) -> set:
        return {m.charge for m in self._terms}

    def max_diff(self, other: "FockState") -> float:
        keys = set(self._terms) | set(other._terms)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)


def weight(model: Model, m: PBWMonomial) -> Grading:
    h, hb = model.sector_weight(m.charge)
    kl, kr = m.level
    return Grading(h + kl, hb + kr)


def state_grading(model: Model, s: FockState) -> Grading | None:
    """Common grading of a homogeneous state (None if inhomogeneous or zero)."""
    gs = {}
    for m in s:
        g = weight(model, m)
        gs.setdefault(g.key(), g)
    if len(gs) != 1:
        return None
    return gs.popitem()[1]


def _add_mode(modes: tuple, d: int, n: int) -> tuple:
    return tuple(sorted(modes + ((d, n),)))


def _remove_mode(modes: tuple, d: int, n: int) -> tuple:
    lst = list(modes)
    lst.remove((d, n))
    return tuple(lst)


def _apply_side_mode(model: Model, side: str, d: int, n: int, s: FockState) -> FockState:
    """Mode u_d(n) (side 'l') or w_d(n) (side 'r') on a state."""
    signs = model.left_signs if side == "l" else model.right_signs
    basis = model.left_basis if side == "l" else model.right_basis
    out: dict = {}
    for m, c in s.items():
        modes = m.left if side == "l" else m.right
        if n < 0:
            new = _add_mode(modes, d, -n)
            key = PBWMonomial(m.charge, new, m.right) if side == "l" else PBWMonomial(m.charge, m.left, new)
            out[key] = out.get(key, 0) + c
        elif n == 0:
            val = model.pair_p(basis[d], m.charge)
            key = m
            out[key] = out.get(key, 0) + c * val
        else:
            k = modes.count((d, n))
            if k == 0:
                continue
            new = _remove_mode(modes, d, n)
            key = PBWMonomial(m.charge, new, m.right) if side == "l" else PBWMonomial(m.charge, m.left, new)
            out[key] = out.get(key, 0) + c * k * n * signs[d]
    return FockState(out)


def heisenberg_apply(model: Model, h, n: int, s: FockState) -> FockState:
    """h(n) on s for a real vector h in H (lattice coordinates)."""
    h = np.asarray(h, float)
    if n == 0:
        out = {m: c * model.pair_p(h, m.charge) for m, c in s.items()}
        return FockState(out)
    res = FockState()
    cl = model.left_signs * model.left_coords(h)
    cr = model.right_signs * model.right_coords(h)
    for side, coeffs in (("l", cl), ("r", cr)):
        for d, c in enumerate(coeffs):
            if abs(c) > 1e-15:
                res = res + c * _apply_side_mode(model, side, d, n, s)
    return res


def phi_involution(s: FockState) -> FockState:
    """Anti-linear involution: sign (-1)^{#oscillators}, charge negated, coefficients conjugated."""
    out = {}
    for m, c in s.items():
        key = PBWMonomial(tuple(-x for x in m.charge), m.left, m.right)
        out[key] = (-1) ** m.n_osc * np.conj(c)
    return FockState(out)


def monomial_norm_sq(model: Model, m: PBWMonomial) -> float:
    """<m, m> from the closed product formula prod (eta n)^k k! (used as a fast path)."""
    val = 1.0
    for modes, signs in ((m.left, model.left_signs), (m.right, model.right_signs)):
        for (d, n), k in Counter(modes).items():
            val *= (signs[d] * n) ** k * math.factorial(k)
    return float(val)


@lru_cache(maxsize=500_000)
def _monomial_pair(model: Model, a: PBWMonomial, b: PBWMonomial) -> float:
    """<a, b> by moving the creators of a to the right as annihilators (h(n)^dagger = h(-n))."""
    if a.charge != b.charge or a.level != b.level:
        return 0.0
    if a.n_osc == 0:
        return 1.0 if b.n_osc == 0 else 0.0
    if a.left:
        d, n = a.left[0]
        rest = PBWMonomial(a.charge, a.left[1:], a.right)
        side = "l"
    else:
        d, n = a.right[0]
        rest = PBWMonomial(a.charge, a.left, a.right[1:])
        side = "r"
    lowered = _apply_side_mode(model, side, d, n, FockState({b: 1.0}))
    return float(sum(c.real * _monomial_pair(model, rest, m) for m, c in lowered.items()))


def inner_product(model: Model, u: FockState, v: FockState) -> complex:
    """Sesquilinear form, anti-linear in u; <e_a, e_a> = 1, distinct charges orthogonal."""
    total = 0j
    by_charge: dict = {}
    for m, c in v.items():
        by_charge.setdefault(m.charge, []).append((m, c))
    for ma, ca in u.items():
        for mb, cb in by_charge.get(ma.charge, ()):
            g = _monomial_pair(model, ma, mb)
            if g:
                total += np.conj(ca) * cb * g
    return complex(total)


def norm(model: Model, s: FockState) -> float:
    return math.sqrt(max(inner_product(model, s, s).real, 0.0))


def _virasoro_side(model: Model, n: int, side: str, s: FockState) -> FockState:
    signs = model.left_signs if side == "l" else model.right_signs
    out = FockState()
    for m in s:
        single = FockState({m: s[m]})
        modes = m.left if side == "l" else m.right
        K = max((k for _, k in modes), default=0)
        for d in range(len(signs)):
            acc = FockState()
            for k in range(n - K - 1, K + 2):
                a, b = k, n - k
                if a > b:
                    a, b = b, a  # annihilator on the right
                acc = acc + _apply_side_mode(model, side, d, a, _apply_side_mode(model, side, d, b, single))
            out = out + (0.5 * signs[d]) * acc
    return out


def virasoro_mode(model: Model, n: int, side: str, s: FockState) -> FockState:
    """L(n) (side='left') or Lbar(n) (side='right') = 1/2 sum_i eta_i sum_k :h_i(k) h_i(n-k):."""
    if abs(n) > VIRASORO_CAP:
        raise CapExceeded(f"|n| <= {VIRASORO_CAP} supported")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    return _virasoro_side(model, n, side[0], s)


def conformal_vector(model: Model, side: str = "left") -> FockState:
    """nu = 1/2 sum_i eta_i u_i(-1)^2 e_0 (or its right-moving analogue)."""
    signs = model.left_signs if side == "left" else model.right_signs
    z = (0,) * model.rank
    terms = {}
    for d, e in enumerate(signs):
        modes = ((d, 1), (d, 1))
        m = PBWMonomial(z, modes, ()) if side == "left" else PBWMonomial(z, (), modes)
        terms[m] = 0.5 * e
    return FockState(terms)


def is_quasi_primary(model: Model, s: FockState, tol: float = 1e-12) -> bool:
    a = virasoro_mode(model, 1, "left", s).chop(tol)
    b = virasoro_mode(model, 1, "right", s).chop(tol)
    return all(abs(c) <= tol for c in a.values()) and all(abs(c) <= tol for c in b.values())


def hermite_pair(model: Model, a: FockState) -> tuple:
    """The two Hermite vectors built from a homogeneous a (parity of h - hbar decides the phases)."""
    g = state_grading(model, a)
    if g is None:
        raise ValueError("hermite_pair needs a homogeneous nonzero state")
    pa = phi_involution(a)
    if g.spin % 2 == 0:
        return (a + pa).chop(0), (1j * (a - pa)).chop(0)
    return (1j * (a + pa)).chop(0), (a - pa).chop(0)


def is_hermite(model: Model, a: FockState, tol: float = 1e-12) -> bool:
    g = state_grading(model, a)
    if g is None:
        return False
    return phi_involution(a).max_diff((-1) ** g.spin * a) <= tol


# ---------------------------------------------------------------- graded basis

@lru_cache(maxsize=None)
def partitions_colored(ncolors: int, level: int) -> tuple:
    """All multisets of (color, part) with parts summing to exactly `level`, sorted."""
    if ncolors == 0:
        return ((),) if level == 0 else ()
    parts = [(c, n) for n in range(1, level + 1) for c in range(ncolors)]
    parts.sort(key=lambda x: (x[1], x[0]))
    out = []

    def rec(start, remaining, acc):
        if remaining == 0:
            out.append(tuple(sorted(acc)))
            return
        for i in range(start, len(parts)):
            c, n = parts[i]
            if n > remaining:
                break
            acc.append((c, n))
            rec(i, remaining - n, acc)
            acc.pop()

    rec(0, level, [])
    return tuple(sorted(out))


@dataclass(frozen=True)
class Sector:
    charge: tuple
    grading: Grading
    monomials: tuple


def graded_basis(model: Model, cutoff: float) -> list:
    """Sectors F^alpha_{h,hbar} with h + hbar <= cutoff.

    For an indefinite polarization the lattice part is enumerated with the positive majorant
    and the oscillator levels are capped by the same cutoff.
    """
    if cutoff < 0:
        return []
    eps = 1e-9
    if model.positive:
        pts = enumerate_lattice_points(model.lattice, model.polarization, 2.0 * cutoff + eps)
    else:
        pts = majorant_points(model.polarization, 2.0 * cutoff + eps)
    sectors = []
    for a in pts:
        h, hb = model.sector_weight(a)
        base = h + hb if model.positive else 0.5 * abs(h) + 0.5 * abs(hb)
        budget = cutoff - base
        if budget < -eps:
            continue
        top = int(math.floor(budget + eps))
        for kl in range(top + 1):
            for kr in range(top - kl + 1):
                L = partitions_colored(model.n_left, kl)
                Rr = partitions_colored(model.n_right, kr)
                if not L or not Rr:
                    continue
                mons = tuple(PBWMonomial(a, l, r) for l in L for r in Rr)
                sectors.append(Sector(a, Grading(h + kl, hb + kr), mons))
    sectors.sort(key=lambda s: (round(s.grading.total, 9), s.charge, s.grading.key()))
    return sectors


def gram_matrix(model: Model, monomials) -> np.ndarray:
    mons = list(monomials.monomials if isinstance(monomials, Sector) else monomials)
    n = len(mons)
    G = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            v = inner_product(model, FockState({mons[i]: 1}), FockState({mons[j]: 1}))
            G[i, j] = v
            G[j, i] = np.conj(v)
    return G


def random_state(model: Model, sectors, rng: np.random.Generator, nterms: int = 4) -> FockState:
    mons = [m for s in sectors for m in s.monomials]
    pick = rng.choice(len(mons), size=min(nterms, len(mons)), replace=False)
    return FockState({mons[i]: complex(rng.normal(), rng.normal()) for i in pick})


def iter_monomials(sectors: Iterable[Sector]):
    for s in sectors:
        yield from s.monomials
