"""Even lattices, the sign cocycle, polarizations and lattice-point enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Degenerate,
    IndefiniteMetric,
    InvalidPolarization,
    NonPositiveR,
    NotEven,
    NotSymmetric,
    RankMismatch,
    WrongLattice,
)

II11_GRAM = ((0, 1), (1, 0))


def _as_int_matrix(gram) -> np.ndarray:
    g = np.asarray(gram)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
        raise NotSymmetric("gram must be a non-empty square matrix")
    gi = np.rint(g.astype(float)).astype(np.int64)
    if not np.array_equal(gi.astype(float), g.astype(float)):
        raise NotEven("gram entries must be integers")
    return gi


@dataclass(frozen=True)
class EvenLattice:
    """Integral lattice with an even symmetric nondegenerate Gram matrix."""

    gram: tuple
    rank: int = field(init=False)
    signature: tuple = field(init=False)

    def __post_init__(self):
        g = _as_int_matrix(self.gram)
        if not np.array_equal(g, g.T):
            raise NotSymmetric("gram is not symmetric")
        if np.any(np.diag(g) % 2 != 0):
            raise NotEven("diagonal entries must be even")
        if round(np.linalg.det(g.astype(float))) == 0:
            raise Degenerate("gram is degenerate")
        ev = np.linalg.eigvalsh(g.astype(float))
        object.__setattr__(self, "gram", tuple(tuple(int(x) for x in row) for row in g))
        object.__setattr__(self, "rank", g.shape[0])
        object.__setattr__(self, "signature", (int(np.sum(ev > 0)), int(np.sum(ev < 0))))

    @property
    def G(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    def pair(self, a, b) -> int:
        """Integer pairing (a, b)_lat."""
        a = self._check(a)
        b = self._check(b)
        return int(a @ self.G @ b)

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.rank,):
            raise RankMismatch(f"expected vector of length {self.rank}, got shape {v.shape}")
        return v

    def is_ii11(self) -> bool:
        return self.gram == II11_GRAM


def new_even_lattice(gram) -> EvenLattice:
    return EvenLattice(gram)


def ii11() -> EvenLattice:
    """The even unimodular lattice of signature (1,1)."""
    return EvenLattice(II11_GRAM)


@dataclass(frozen=True)
class Cocycle:
    """Sign cocycle stored as a mod-2 exponent table and extended bilinearly.

    eps(a, b) = (-1)^(a^T B b) where B_ii = G_ii/2, B_ij = G_ij (i > j), B_ij = 0 (i < j).
    """

    lattice: EvenLattice

    @property
    def table(self) -> np.ndarray:
        G = self.lattice.G
        B = np.tril(G, -1) + np.diag(np.diag(G) // 2)
        return B % 2

    @property
    def basis_signs(self) -> np.ndarray:
        return 1 - 2 * self.table

    def __call__(self, a, b) -> int:
        return cocycle_eps(self, a, b)


def cocycle_eps(c: Cocycle, a, b) -> int:
    a = c.lattice._check(a)
    b = c.lattice._check(b)
    return -1 if int(a @ c.table @ b) % 2 else 1


@dataclass(frozen=True)
class Polarization:
    """Projection p on H = L (x) R, stored in lattice coordinates (acts on column vectors)."""

    lattice: EvenLattice
    p: tuple
    tol: float = 1e-12
    require_positive: bool = True

    def __post_init__(self):
        lat = self.lattice
        p = np.asarray(self.p, dtype=float)
        if p.shape != (lat.rank, lat.rank):
            raise RankMismatch("polarization matrix has wrong shape")
        object.__setattr__(self, "p", tuple(tuple(float(x) for x in row) for row in p))
        res = self.residuals()
        scale = max(1.0, float(np.abs(p).max()))
        if res["P1"] > self.tol * scale ** 2:
            raise InvalidPolarization(f"p is not a projection (residual {res['P1']:.3g})")
        if res["P2"] > self.tol * scale ** 2 * max(1, np.abs(lat.G).max()):
            raise InvalidPolarization(f"ker(1-p) not orthogonal to ker(p) (residual {res['P2']:.3g})")
        if self.require_positive and not self.positive:
            raise IndefiniteMetric("lattice form is not positive on ker(1-p) and negative on ker(p)")

    @property
    def P(self) -> np.ndarray:
        return np.array(self.p)

    @property
    def Pbar(self) -> np.ndarray:
        return np.eye(self.lattice.rank) - self.P

    def residuals(self) -> dict:
        P = self.P
        G = self.lattice.G.astype(float)
        return {
            "P1": float(np.abs(P @ P - P).max()),
            "P2": float(np.abs(P.T @ G @ (np.eye(len(P)) - P)).max()),
        }

    @property
    def metric(self) -> np.ndarray:
        """Gram matrix of (.,.)_p in lattice coordinates."""
        P, Q = self.P, self.Pbar
        G = self.lattice.G.astype(float)
        M = P.T @ G @ P - Q.T @ G @ Q
        return 0.5 * (M + M.T)

    @property
    def dims(self) -> tuple:
        r = int(round(np.trace(self.P)))
        return r, self.lattice.rank - r

    @property
    def positive(self) -> bool:
        """P3: (.,.)_p positive definite and dimensions matching the signature."""
        ev = np.linalg.eigvalsh(self.metric)
        return bool(ev.min() > self.tol) and self.dims == self.lattice.signature


def metric_p(pol: Polarization, h, hp) -> float:
    h = np.asarray(h, dtype=float)
    hp = np.asarray(hp, dtype=float)
    if h.shape != (pol.lattice.rank,) or hp.shape != h.shape:
        raise RankMismatch("vector length does not match lattice rank")
    return float(h @ pol.metric @ hp)


def boost_polarization_rank2(lat: EvenLattice, R: float, tol: float = 1e-12) -> Polarization:
    """Polarization of II_{1,1} with H_l = span(R a1 + a2/R), H_r = span(R a1 - a2/R)."""
    if not lat.is_ii11():
        raise WrongLattice("boost chart is only defined for II_{1,1}")
    if not R > 0:
        raise NonPositiveR("R must be positive")
    vl = np.array([R, 1.0 / R])
    vr = np.array([R, -1.0 / R])
    # projection onto vl along vr: columns of V = [vl, vr]
    V = np.column_stack([vl, vr])
    P = V @ np.diag([1.0, 0.0]) @ np.linalg.inv(V)
    return Polarization(lat, P, tol)


def _fincke_pohst(Q: np.ndarray, bound: float) -> list:
    """All integer x with x^T Q x <= bound for positive definite Q."""
    n = Q.shape[0]
    if bound < 0:
        return []
    L = np.linalg.cholesky(Q)
    Rm = L.T  # Q = Rm^T Rm, Rm upper triangular
    slack = 1e-9 * max(1.0, bound)
    out = []
    x = np.zeros(n, dtype=np.int64)

    def rec(i, rem):
        # rem: remaining budget for rows 0..i
        c = -float(Rm[i, i + 1:] @ x[i + 1:]) / Rm[i, i]
        r = math.sqrt(max(rem, 0.0) + slack) / Rm[i, i]
        for xi in range(math.ceil(c - r), math.floor(c + r) + 1):
            x[i] = xi
            t = Rm[i, i] * (xi - c)
            left = rem - t * t
            if left < -slack:
                continue
            if i == 0:
                out.append(tuple(int(v) for v in x))
            else:
                rec(i - 1, left)
        x[i] = 0

    rec(n - 1, bound)
    exact = [v for v in out if float(np.array(v) @ Q @ np.array(v)) <= bound + slack]
    return sorted(set(exact))


def enumerate_lattice_points(lat: EvenLattice, pol: Polarization, max_norm: float) -> list:
    """Lattice vectors with (a, a)_p <= max_norm, lexicographically sorted."""
    if not pol.positive:
        raise IndefiniteMetric("enumeration needs a positive polarization")
    return _fincke_pohst(pol.metric, float(max_norm))


def majorant_points(pol: Polarization, max_norm: float) -> list:
    """Enumeration against |(.,.)_p| (the positive majorant), valid for any polarization."""
    w, V = np.linalg.eigh(pol.metric)
    return _fincke_pohst(V @ np.diag(np.abs(w)) @ V.T, float(max_norm))


def sector_weight(pol: Polarization, alpha) -> tuple:
    """(h, hbar) of e_alpha."""
    a = np.asarray(alpha, dtype=float)
    G = pol.lattice.G.astype(float)
    pa, qa = pol.P @ a, pol.Pbar @ a
    return 0.5 * float(pa @ G @ pa), -0.5 * float(qa @ G @ qa)


def spectral_density_histogram(lat: EvenLattice, pol: Polarization, nmax: int) -> np.ndarray:
    """counts[k] = number of distinct (h, hbar) with k <= h + hbar < k + 1, for k = 0..nmax."""
    nl, nr = pol.dims
    pts = enumerate_lattice_points(lat, pol, 2.0 * (nmax + 1))
    seen = set()
    for a in pts:
        h, hb = sector_weight(pol, a)
        if h + hb >= nmax + 1:
            continue
        top = int(math.floor(nmax + 1 - (h + hb))) + 1
        for n in range(top if nl else 1):
            for m in range(top - n if nr else 1):
                w = h + hb + n + m
                if w < nmax + 1:
                    seen.add((round(h + n, 9), round(hb + m, 9)))
    counts = np.zeros(nmax + 1, dtype=np.int64)
    for h, hb in seen:
        k = int(math.floor(h + hb + 1e-9))
        if k <= nmax:
            counts[k] += 1
    return counts
