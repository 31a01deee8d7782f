"""Conformal geometry and analysis helpers: Moebius maps, Cayley transform, reflections,
good directions, translated radial domains and the one-dimensional bump functions."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import CapExceeded, NoDirectionFound, PoleHit, PreconditionViolated

BUMP_CAP = 8


# ------------------------------------------------------------------ PSL(2, C)

@dataclass(frozen=True)
class MoebiusMap:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular matrix")
        r = cmath.sqrt(det)
        object.__setattr__(self, "a", a / r)
        object.__setattr__(self, "b", b / r)
        object.__setattr__(self, "c", c / r)
        object.__setattr__(self, "d", d / r)

    @classmethod
    def from_matrix(cls, M) -> "MoebiusMap":
        M = np.asarray(M, dtype=complex)
        return cls(M[0, 0], M[0, 1], M[1, 0], M[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap.from_matrix(self.matrix @ other.matrix)

    def apply(self, z: complex) -> tuple:
        return moebius_apply(self, z)


def moebius_apply(g: MoebiusMap, z: complex) -> tuple:
    """(g(z), g'(z)) with g'(z) = (cz + d)^-2."""
    den = g.c * z + g.d
    if den == 0:
        raise PoleHit("c z + d = 0")
    return (g.a * z + g.b) / den, 1 / den ** 2


def translation(a: complex) -> MoebiusMap:
    return MoebiusMap(1, a, 0, 1)


def rotation(theta: float) -> MoebiusMap:
    return MoebiusMap(cmath.exp(0.5j * theta), 0, 0, cmath.exp(-0.5j * theta))


def dilation(lam: float) -> MoebiusMap:
    return MoebiusMap(math.exp(0.5 * lam), 0, 0, math.exp(-0.5 * lam))


def ns_dilation(lam: float) -> MoebiusMap:
    """Dilation fixing the north and south poles +-1."""
    ch, sh = math.cosh(0.5 * lam), math.sinh(0.5 * lam)
    return MoebiusMap(ch, -sh, -sh, ch)


ROTATION_CAYLEY = np.array([[1, -1], [1, 1]]) / math.sqrt(2)


def ns_dilation_factored(lam: float) -> np.ndarray:
    S = ROTATION_CAYLEY
    return np.linalg.inv(S) @ np.diag([math.exp(0.5 * lam), math.exp(-0.5 * lam)]) @ S


def inversion() -> MoebiusMap:
    """z -> -1/z."""
    return MoebiusMap(0, 1, -1, 0)


# ------------------------------------------------------------------ Cayley, reflections

def cayley(w: complex) -> complex:
    if w == 1:
        raise PoleHit("cayley transform is singular at 1")
    return (1 + w) / (1 - w)


def cayley_inv(z: complex) -> complex:
    if z == -1:
        raise PoleHit("inverse cayley transform is singular at -1")
    return (z - 1) / (z + 1)


def reflect_circle(z: complex) -> complex:
    """r(z) = 1 / conj(z)."""
    return 1 / np.conj(z)


def theta(w: complex) -> complex:
    """Time reflection w -> -conj(w)."""
    return -np.conj(w)


def jacobian_J(w: complex) -> complex:
    if w == 1 or w == -1:
        raise PoleHit("J is singular at +-1")
    return 2 / ((1 - w) * (1 + w))


def stereographic(z: complex) -> np.ndarray:
    t, x = z.real, z.imag
    r2 = t * t + x * x
    return np.array([2 * t, 2 * x, r2 - 1]) / (1 + r2)


# ------------------------------------------------------------------ good direction

def _arc_union(intervals):
    """Union of closed arcs on the circle [0, pi), arcs given as (start, end) with start < end."""
    pieces = []
    for s, e in intervals:
        length = e - s
        if length >= math.pi:
            return [(0.0, math.pi)]
        s %= math.pi
        e = s + length
        if e <= math.pi:
            pieces.append((s, e))
        else:
            pieces.append((s, math.pi))
            pieces.append((0.0, e - math.pi))
    pieces.sort()
    merged = []
    for s, e in pieces:
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def good_direction(points) -> np.ndarray:
    """Unit vector e with |e.(y_j - y_k)| >= pi/(4 n^2) |y_j - y_k| for all pairs.

    Directions are taken mod pi. Each pair forbids the arc of half-width arcsin(pi/(4n^2)) around
    the perpendicular of y_j - y_k; we return the midpoint of the largest admissible gap.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    c = math.pi / (4 * n * n)
    half = math.asin(c) + 1e-12
    bad = []
    for j in range(n):
        for k in range(j):
            v = pts[j] - pts[k]
            if not np.any(v):
                raise PreconditionViolated("points must be pairwise distinct")
            perp = (math.atan2(v[1], v[0]) + 0.5 * math.pi) % math.pi
            bad.append((perp - half, perp + half))
    if not bad:
        return np.array([1.0, 0.0])
    merged = _arc_union(bad)
    gaps = []
    for i, (s, e) in enumerate(merged):
        nxt = merged[(i + 1) % len(merged)][0] + (math.pi if i + 1 == len(merged) else 0.0)
        if nxt > e:
            gaps.append((nxt - e, e, nxt))
    if not gaps:
        raise NoDirectionFound("bad arcs cover the circle")
    length, s, e = max(gaps)
    ang = 0.5 * (s + e)
    out = np.array([math.cos(ang), math.sin(ang)])
    for j in range(n):
        for k in range(j):
            v = pts[j] - pts[k]
            if abs(out @ v) < c * np.linalg.norm(v):
                raise NoDirectionFound("internal: returned direction violates the bound")
    return out


def direction_margin(e, points) -> float:
    """min over pairs of |e.(y_j - y_k)| / |y_j - y_k|."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    vals = [abs(e @ (pts[j] - pts[k])) / np.linalg.norm(pts[j] - pts[k]) for j in range(n) for k in range(j)]
    return min(vals) if vals else math.inf


# ------------------------------------------------------------------ translated radial domain

def radial_shift(points, e, R: float, eta: float) -> tuple:
    """Shift by lam e with lam = 2 R^2 / eta so that consecutive moduli grow.

    Preconditions (in coordinates rotated so e is the real axis): sum |z_l|^2 <= R^2,
    Re(z_{l+1} - z_l) > eta, 0 < eta < 1 < R.
    Returns (lam, shifted points as complex numbers in the rotated frame).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1) > 1e-12:
        raise PreconditionViolated("e must be a unit vector")
    if not (0 < eta < 1 < R):
        raise PreconditionViolated("need 0 < eta < 1 < R")
    rot = complex(e[0], -e[1])
    z = np.array([complex(x, y) for x, y in pts]) * rot
    if np.sum(np.abs(z) ** 2) > R * R:
        raise PreconditionViolated("points exceed radius R")
    if np.any(np.diff(z.real) <= eta):
        raise PreconditionViolated("consecutive gaps along e must exceed eta")
    lam = 2 * R * R / eta
    return lam, z + lam


def radial_ratio_bound(R: float, eta: float) -> float:
    return 1 - eta * eta / (4 * R * R)


# ------------------------------------------------------------------ bump functions

def bump_phi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 / (s[inside] ** 2 - 1))
    return out


@lru_cache(maxsize=1)
def bump_norm() -> float:
    val, _ = integrate.quad(lambda t: math.exp(1.0 / (t * t - 1)), -1, 1, epsabs=1e-14, epsrel=1e-12)
    return val


def bump_psi(s) -> np.ndarray:
    """Normalized integral of the standard bump: 0 for s <= -1, 1 for s >= 1."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    Z = bump_norm()
    out = np.where(s >= 1, 1.0, 0.0)
    for i, t in enumerate(s):
        if -1 < t < 1:
            v, _ = integrate.quad(lambda u: math.exp(1.0 / (u * u - 1)), -1, t, epsabs=1e-14, epsrel=1e-12)
            out[i] = v / Z
    return out


def bump_psi_tilde(s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return bump_psi(s) - bump_psi(s - 3)


@lru_cache(maxsize=None)
def g_plus_derivative_terms(l: int) -> tuple:
    """l-th derivative of g_+(s) = exp(-1/(2(s+1))) as terms (coef, j) meaning coef h_j g_+,
    h_j = (s+1)^-j; terms are kept uncombined, following d(h_j g_+) = -j h_{j+1} g_+ + h_{j+2} g_+ / 2."""
    if l < 0:
        raise ValueError("l >= 0")
    if l > BUMP_CAP:
        raise CapExceeded(f"derivative order capped at {BUMP_CAP}")
    if l == 0:
        return ((1.0, 0),)
    out = []
    for c, j in g_plus_derivative_terms(l - 1):
        if j == 0:
            out.append((0.5 * c, 2))
        else:
            out.append((-j * c, j + 1))
            out.append((0.5 * c, j + 2))
    return tuple(out)


def _g_plus_deriv(l: int, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    ok = s > -1
    t = s[ok] + 1
    logt = np.log(t)
    acc = np.zeros_like(t)
    for c, j in g_plus_derivative_terms(l):
        acc += c * np.exp(-j * logt - 0.5 / t)
    out[ok] = acc
    return out


def _g_minus_deriv(l: int, s: np.ndarray) -> np.ndarray:
    return (-1) ** l * _g_plus_deriv(l, -np.asarray(s, dtype=float))


def bump_phi_derivative(l: int, s) -> np.ndarray:
    """phi^{(l)} on R via Leibniz on phi = g_+ g_- restricted to (-1, 1)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    t = s[inside]
    acc = np.zeros_like(t)
    for k in range(l + 1):
        acc += math.comb(l, k) * _g_plus_deriv(k, t) * _g_minus_deriv(l - k, t)
    out[inside] = acc
    return out


def bump_derivative(m: int, s) -> np.ndarray:
    """m-th derivative of psi_tilde, exact from the symbolic recursion (m >= 0)."""
    if m > BUMP_CAP:
        raise CapExceeded(f"derivative order capped at {BUMP_CAP}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if m == 0:
        return bump_psi_tilde(s)
    Z = bump_norm()
    return (bump_phi_derivative(m - 1, s) - bump_phi_derivative(m - 1, s - 3)) / Z


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def bump_bound(m: int) -> float:
    return 2.0 ** m * 2.0 ** m * double_factorial(2 * m) * float(2 * m) ** (2 * m)
