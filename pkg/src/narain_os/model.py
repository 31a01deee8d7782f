"""A lattice model F_{L,p}: lattice + polarization + oscillator frames, and the model file format.

Model files are plain ``key = value`` text, ``#`` starts a comment::

    gram = 0 1; 1 0          # rows separated by ';' (or a flat row-major list)
    boost_R = 1.3            # II_{1,1} only, or:
    # polarization_matrix = 0.5 0.5; 0.5 0.5
    tolerance = 1e-12
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import BadModelFile, NarainError
from .lattice import (
    Cocycle,
    EvenLattice,
    Polarization,
    boost_polarization_rank2,
    sector_weight,
)

MODEL_KEYS = {"gram", "boost_R", "polarization_matrix", "tolerance", "name"}


def _frame(metric: np.ndarray, proj: np.ndarray, tol: float = 1e-9):
    """Pseudo-orthonormal basis (rows) of image(proj) w.r.t. metric, plus the signs."""
    U, s, _ = np.linalg.svd(proj)
    k = int(np.sum(s > tol))
    if k == 0:
        return np.zeros((0, len(proj))), np.zeros(0)
    Q = U[:, :k]
    B = Q.T @ metric @ Q
    lam, W = np.linalg.eigh(0.5 * (B + B.T))
    order = np.argsort(-lam, kind="stable")
    lam, W = lam[order], W[:, order]
    vecs = (Q @ W) / np.sqrt(np.abs(lam))
    for j in range(k):
        v = vecs[:, j]
        i = int(np.argmax(np.abs(v) > 1e-9))
        if v[i] < 0:
            vecs[:, j] = -v
    return vecs.T.copy(), np.sign(lam)


@dataclass(frozen=True)
class Model:
    lattice: EvenLattice
    polarization: Polarization
    name: str = ""
    source: dict = field(default_factory=dict, compare=False)

    @property
    def rank(self) -> int:
        return self.lattice.rank

    @cached_property
    def metric(self) -> np.ndarray:
        return self.polarization.metric

    @cached_property
    def cocycle(self) -> Cocycle:
        return Cocycle(self.lattice)

    @cached_property
    def _left(self):
        return _frame(self.metric, self.polarization.P)

    @cached_property
    def _right(self):
        return _frame(self.metric, self.polarization.Pbar)

    @property
    def left_basis(self) -> np.ndarray:
        """Rows u_i spanning H_l with (u_i, u_j)_p = eta_i delta_ij."""
        return self._left[0]

    @property
    def left_signs(self) -> np.ndarray:
        return self._left[1]

    @property
    def right_basis(self) -> np.ndarray:
        return self._right[0]

    @property
    def right_signs(self) -> np.ndarray:
        return self._right[1]

    @property
    def n_left(self) -> int:
        return len(self.left_signs)

    @property
    def n_right(self) -> int:
        return len(self.right_signs)

    @property
    def central_charge(self) -> int:
        return self.n_left

    @property
    def positive(self) -> bool:
        return self.polarization.positive

    def pair_p(self, h, hp) -> float:
        return float(np.asarray(h, float) @ self.metric @ np.asarray(hp, float))

    def left_coords(self, v) -> np.ndarray:
        """(v, u_i)_p for each left frame vector."""
        return self.left_basis @ self.metric @ np.asarray(v, float)

    def right_coords(self, v) -> np.ndarray:
        return self.right_basis @ self.metric @ np.asarray(v, float)

    def sector_weight(self, alpha) -> tuple:
        return sector_weight(self.polarization, alpha)

    def eps(self, a, b) -> int:
        return self.cocycle(a, b)

    def lat_pair(self, a, b) -> int:
        return self.lattice.pair(a, b)

    def describe(self) -> dict:
        d = {"name": self.name, "gram": [list(r) for r in self.lattice.gram]}
        if "boost_R" in self.source:
            d["boost_R"] = self.source["boost_R"]
        else:
            d["polarization_matrix"] = [list(r) for r in self.polarization.p]
        d["tolerance"] = self.polarization.tol
        return d


def ii11_model(R: float, tol: float = 1e-12) -> Model:
    lat = EvenLattice(((0, 1), (1, 0)))
    return Model(lat, boost_polarization_rank2(lat, R, tol), name=f"II11_R{R:g}", source={"boost_R": R})


def model_from_matrices(gram, p, tol: float = 1e-12, require_positive: bool = True, name: str = "") -> Model:
    lat = EvenLattice(gram)
    return Model(lat, Polarization(lat, p, tol, require_positive), name=name)


def _parse_matrix(text: str, kind):
    rows = [r.split() for r in text.replace(",", " ").split(";") if r.strip()]
    try:
        vals = [[kind(x) for x in r] for r in rows]
    except ValueError as exc:
        raise BadModelFile(f"cannot parse matrix entry: {exc}") from None
    if len(vals) == 1:
        flat = vals[0]
        n = math.isqrt(len(flat))
        if n * n != len(flat):
            raise BadModelFile("flat matrix length is not a perfect square")
        vals = [flat[i * n:(i + 1) * n] for i in range(n)]
    if any(len(r) != len(vals) for r in vals):
        raise BadModelFile("matrix is not square")
    return vals


def _int_entry(x: str) -> int:
    f = float(x)
    if f != int(f):
        raise ValueError(f"non-integer gram entry {x!r}")
    return int(f)


def parse_model_text(text: str, require_positive: bool = False) -> Model:
    """Parse model-file text. Any structural or validation problem raises BadModelFile.

    The polarization is validated for P1/P2 always; P3 only if require_positive.
    """
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadModelFile(f"line {lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in MODEL_KEYS:
            raise BadModelFile(f"line {lineno}: unknown key {k!r}")
        if k in kv:
            raise BadModelFile(f"line {lineno}: duplicate key {k!r}")
        kv[k] = v
    if "gram" not in kv:
        raise BadModelFile("missing 'gram'")
    if ("boost_R" in kv) == ("polarization_matrix" in kv):
        raise BadModelFile("give exactly one of 'boost_R' or 'polarization_matrix'")
    try:
        tol = float(kv.get("tolerance", "1e-12"))
        lat = EvenLattice(_parse_matrix(kv["gram"], _int_entry))
        if "boost_R" in kv:
            R = float(kv["boost_R"])
            pol = boost_polarization_rank2(lat, R, tol)
            source = {"boost_R": R}
        else:
            pol = Polarization(lat, _parse_matrix(kv["polarization_matrix"], float), tol, require_positive)
            source = {}
    except BadModelFile:
        raise
    except NarainError as exc:
        raise BadModelFile(f"{type(exc).__name__}: {exc}") from exc
    except ValueError as exc:
        raise BadModelFile(str(exc)) from exc
    return Model(lat, pol, name=kv.get("name", ""), source=source)


def load_model(path, require_positive: bool = False) -> Model:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BadModelFile(f"cannot read model file: {exc}") from exc
    model = parse_model_text(text, require_positive)
    if not model.name:
        model = Model(model.lattice, model.polarization, Path(path).stem, model.source)
    return model
