"""Truncated one-sided oscillator Fock spaces with sparse mode matrices.

A chiral space with `ndirs` directions and level cap K has the basis of all oscillator
multisets of total level <= K. Creation operators drop anything above K, which is exact for
every output component of level <= K as long as lowering operators are applied first.
"""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fock import partitions_colored


class ChiralSpace:
    def __init__(self, ndirs: int, max_level: int, signs: tuple):
        self.ndirs = ndirs
        self.K = max_level
        self.signs = np.array(signs, dtype=float)
        self.basis = [m for lvl in range(max_level + 1) for m in partitions_colored(ndirs, lvl)]
        self.index = {m: i for i, m in enumerate(self.basis)}
        self.dim = len(self.basis)
        self.levels = np.array([sum(n for _, n in m) for m in self.basis], dtype=float)
        self.norm_sq = np.array([self._norm_sq(m) for m in self.basis])
        self._mats: dict = {}

    def _norm_sq(self, m) -> float:
        v = 1.0
        for (d, n), k in Counter(m).items():
            v *= (self.signs[d] * n) ** k * math.factorial(k)
        return v

    def mode(self, d: int, n: int) -> sp.csr_matrix:
        """Matrix of J_d(n): creation for n < 0, n*eta_d*d/dx for n > 0. Zero mode excluded."""
        key = (d, n)
        if key in self._mats:
            return self._mats[key]
        rows, cols, vals = [], [], []
        if n < 0:
            for j, m in enumerate(self.basis):
                new = tuple(sorted(m + ((d, -n),)))
                i = self.index.get(new)
                if i is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(1.0)
        elif n > 0:
            for j, m in enumerate(self.basis):
                k = m.count((d, n))
                if k:
                    lst = list(m)
                    lst.remove((d, n))
                    rows.append(self.index[tuple(lst)])
                    cols.append(j)
                    vals.append(k * n * self.signs[d])
        else:
            raise ValueError("zero mode is a scalar on a charge sector")
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)
        self._mats[key] = mat
        return mat

    def _stacked(self, sign: int) -> tuple:
        """COO data of all J_d(sign * n), n = 1..K, with their (d, n) labels."""
        key = ("stack", sign)
        if key not in self._mats:
            parts = []
            for d in range(self.ndirs):
                for n in range(1, self.K + 1):
                    m = self.mode(d, sign * n).tocoo()
                    parts.append((m.row, m.col, m.data.real, np.full(m.nnz, d), np.full(m.nnz, n)))
            if parts:
                self._mats[key] = tuple(np.concatenate(x) for x in zip(*parts))
            else:
                e = np.zeros(0, dtype=int)
                self._mats[key] = (e, e, np.zeros(0), e, e)
        return self._mats[key]

    def mode_sum(self, sign: int, coef: np.ndarray) -> sp.csr_matrix:
        """sum_{d, n >= 1} coef[d, n] J_d(sign * n) with coef of shape (ndirs, K + 1)."""
        rows, cols, vals, ds, ns = self._stacked(sign)
        data = vals * coef[ds, ns]
        return sp.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)

    def zero(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.dim, self.dim), dtype=complex)

    def exp_nilpotent(self, T, X: np.ndarray) -> np.ndarray:
        """exp(T) X for T strictly raising or strictly lowering the level."""
        acc = X.astype(complex, copy=True)
        term = acc
        for k in range(1, self.K + 1):
            term = (T @ term) / k
            if not np.any(term):
                break
            acc = acc + term
        return acc

    def e_minus(self, coeffs, z: complex, X: np.ndarray) -> np.ndarray:
        """exp(sum_{n>=1} sum_d coeffs_d J_d(-n) z^n / n) X."""
        n = np.arange(self.K + 1)
        w = np.zeros(self.K + 1, dtype=complex)
        w[1:] = complex(z) ** n[1:] / n[1:]
        T = self.mode_sum(-1, np.outer(np.asarray(coeffs, dtype=complex), w))
        return self.exp_nilpotent(T, X)

    def e_plus(self, coeffs, z: complex, X: np.ndarray) -> np.ndarray:
        """exp(-sum_{n>=1} sum_d coeffs_d J_d(n) z^-n / n) X."""
        n = np.arange(self.K + 1)
        w = np.zeros(self.K + 1, dtype=complex)
        w[1:] = -complex(z) ** (-n[1:]) / n[1:]
        T = self.mode_sum(1, np.outer(np.asarray(coeffs, dtype=complex), w))
        return self.exp_nilpotent(T, X)

    def to_vector(self, monomials_coeffs) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for m, c in monomials_coeffs:
            v[self.index[m]] += c
        return v


@lru_cache(maxsize=64)
def chiral_space(ndirs: int, max_level: int, signs: tuple) -> ChiralSpace:
    return ChiralSpace(ndirs, max_level, signs)
