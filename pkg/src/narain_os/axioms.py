"""Numerical checks of the OS ingredients at sampled configurations.

Every check returns a CheckReport. Distributional statements are tested by point evaluation
(the report label says so): points stand in for delta-like test functions.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .correlators import (
    inversion_transform,
    moebius_pushforward,
    schwinger_closed_form,
    schwinger_truncated,
)
from .errors import (
    CutoffTooSmall,
    DegenerateFit,
    InternalAssertion,
    PointSentToInfinity,
    SupportViolation,
)
from .fock import (
    FockState,
    graded_basis,
    gram_matrix,
    hermite_pair,
    monomial_norm_sq,
    weight,
)
from .geometry import (
    MoebiusMap,
    dilation,
    inversion,
    ns_dilation,
    rotation,
    theta,
    translation,
)
from .lattice import enumerate_lattice_points, spectral_density_histogram
from .model import Model
from .vertex import (
    VertexSymbol,
    current_left,
    current_right,
    exponential,
    make_symbol,
    mode_norm_table,
    vacuum_symbol,
    vertex_modes,
)

PROXY = "pointwise proxy"

DEFAULT_TOLERANCES = {
    "unitarity": 1e-9,
    "symmetry": 1e-10,
    "vacuum": 1e-12,
    "covariance": 1e-8,
    "covariance_truncated": 1e-3,
    "ward": 1e-6,
    "reflection_positivity": 1e-8,
    "clustering": 0.15,
    "spectral_density": 0.5,
    "inversion": 1e-10,
    "peb_estimate": 0.0,
}


# ------------------------------------------------------------------ reports

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    return x


@dataclass
class CheckReport:
    check: str
    params: dict
    metrics: dict
    tolerance: float
    verdict: bool
    label: str = PROXY
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(**d)


def _model_params(model: Model) -> dict:
    return {"name": model.name, **model.describe()}


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


# ------------------------------------------------------------------ default batteries

def short_vectors(model: Model, count: int = 4) -> list:
    """Nonzero lattice vectors by increasing (a, a)_p, one representative per +- pair."""
    bound = 1.0
    while True:
        pts = enumerate_lattice_points(model.lattice, model.polarization, bound)
        reps = []
        for v in pts:
            nz = [x for x in v if x]
            if nz and nz[0] > 0:
                reps.append(v)
        if len(reps) >= count or bound > 64:
            break
        bound *= 2
    metric = model.metric
    reps.sort(key=lambda v: (round(float(np.array(v) @ metric @ np.array(v)), 9), v))
    return reps[:count]


def random_points(rng: np.random.Generator, n: int, radius: float = 1.5, min_dist: float = 0.3) -> list:
    while True:
        r = radius * np.sqrt(rng.uniform(0, 1, n))
        t = rng.uniform(0, 2 * math.pi, n)
        z = list(r * np.exp(1j * t))
        if all(abs(z[i] - z[j]) >= min_dist for i in range(n) for j in range(i)):
            return [complex(w) for w in z]


def exponential_battery(model: Model) -> list:
    """Charge-neutral insertion lists of exponentials and currents used by the default checks."""
    a1, a2 = short_vectors(model, 2)
    neg = lambda v: tuple(-x for x in v)
    s12 = tuple(x + y for x, y in zip(a1, a2))
    jl = current_left(model, _left_vector(model))
    jr = current_right(model, _right_vector(model))
    return [
        [exponential(model, a1), exponential(model, neg(a1))],
        [exponential(model, a1), exponential(model, a2), exponential(model, neg(s12))],
        [exponential(model, a1), exponential(model, neg(a1)), exponential(model, a2), exponential(model, neg(a2))],
        [jl, exponential(model, a1), jr, exponential(model, neg(a1))],
    ]


def _left_vector(model: Model) -> np.ndarray:
    return model.left_basis[0]


def _right_vector(model: Model) -> np.ndarray:
    return model.right_basis[0]


# ------------------------------------------------------------------ unitarity

def check_unitarity(model: Model, cutoff: float = 6.0, tol: float = DEFAULT_TOLERANCES["unitarity"]) -> CheckReport:
    worst = math.inf
    worst_sector = None
    nsec = 0
    for sec in graded_basis(model, cutoff):
        G = gram_matrix(model, sec)
        ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
        scale = max(np.linalg.norm(G, 2), 1e-300)
        nsec += 1
        if ev[0] / scale < worst:
            worst = ev[0] / scale
            worst_sector = {"charge": sec.charge, "h": sec.grading.h, "hbar": sec.grading.hbar,
                            "min_eigenvalue": ev[0]}
    return CheckReport(
        "unitarity",
        {"model": _model_params(model), "cutoff": cutoff},
        {"sectors": nsec, "min_relative_eigenvalue": worst if nsec else 1.0, "worst_sector": worst_sector},
        tol,
        bool(nsec == 0 or worst > -tol),
        label="exact sector Gram matrices",
    )


# ------------------------------------------------------------------ symmetry

def permutation_deviation(model: Model, insertions, points, perm) -> float:
    s = schwinger_closed_form(model, insertions, points)
    sp = schwinger_closed_form(model, [insertions[i] for i in perm], [points[i] for i in perm])
    return _rel(sp, s)


def check_symmetry(model: Model, battery=None, seed: int = 0, n_configs: int = 5, n_random_perms: int = 10,
                   tol: float = DEFAULT_TOLERANCES["symmetry"],
                   vacuum_tol: float = DEFAULT_TOLERANCES["vacuum"]) -> CheckReport:
    rng = np.random.default_rng(seed)
    battery = battery if battery is not None else exponential_battery(model)
    worst_perm = 0.0
    worst_vac = 0.0
    count = 0
    vac = vacuum_symbol(model)
    for ins in battery:
        n = len(ins)
        perms = [p for p in itertools.permutations(range(n)) if sum(a != b for a, b in zip(p, range(n))) == 2]
        for _ in range(n_random_perms):
            perms.append(tuple(rng.permutation(n)))
        for _ in range(n_configs):
            pts = random_points(rng, n + 1)
            for p in perms:
                worst_perm = max(worst_perm, permutation_deviation(model, ins, pts[:n], p))
                count += 1
            k = int(rng.integers(0, n + 1))
            s = schwinger_closed_form(model, ins, pts[:n])
            sv = schwinger_closed_form(model, ins[:k] + [vac] + ins[k:], pts[:k] + [pts[n]] + pts[k:n])
            worst_vac = max(worst_vac, abs(sv - s) / max(abs(s), 1e-300))
    return CheckReport(
        "symmetry",
        {"model": _model_params(model), "seed": seed, "battery": [[s.label for s in b] for b in battery],
         "n_configs": n_configs, "vacuum_tolerance": vacuum_tol},
        {"max_permutation_deviation": worst_perm, "max_vacuum_deviation": worst_vac, "evaluations": count},
        tol,
        bool(worst_perm <= tol and worst_vac <= vacuum_tol),
    )


# ------------------------------------------------------------------ Moebius covariance

COVARIANCE_CLASSES = ("translation", "rotation", "dilation", "ns_dilation", "inversion")


def sample_moebius(kind: str, rng: np.random.Generator) -> MoebiusMap:
    if kind == "translation":
        return translation(complex(*rng.normal(0, 0.5, 2)))
    if kind == "rotation":
        return rotation(rng.uniform(-math.pi, math.pi))
    if kind == "dilation":
        return dilation(rng.uniform(-0.5, 0.5))
    if kind == "ns_dilation":
        return ns_dilation(rng.uniform(-0.5, 0.5))
    if kind == "inversion":
        b = complex(*rng.normal(0, 1, 2))
        c = complex(*rng.normal(0, 1, 2))
        return translation(c) @ inversion() @ translation(b)
    raise ValueError(f"unknown class {kind}")


def _safe_pushforward(fn, gamma, ins, pts, min_den: float = 0.2):
    for z in pts:
        if abs(gamma.c * z + gamma.d) < min_den:
            raise PointSentToInfinity("point too close to the pole")
    return moebius_pushforward(fn, gamma, ins, pts)


def covariance_deviation(model: Model, gamma: MoebiusMap, insertions, points) -> float:
    fn = lambda ins, pts: schwinger_closed_form(model, ins, pts)
    lhs = _safe_pushforward(fn, gamma, insertions, points)
    return _rel(lhs, fn(insertions, points))


def _require_quasi_primary(insertions):
    for s in insertions:
        if not s.quasi_primary:
            raise ValueError(f"insertion {s.label or s.kind} is not quasi-primary")


def check_conformal_covariance(model: Model, battery=None, seed: int = 0, per_class: int = 50,
                               tol: float = DEFAULT_TOLERANCES["covariance"],
                               truncated_cutoff: float | None = None, n_truncated: int = 5,
                               tol_truncated: float = DEFAULT_TOLERANCES["covariance_truncated"]) -> CheckReport:
    """S(gamma z) prod gamma'(z_j)^h conj(gamma'(z_j))^hbar = S(z) for random gamma per class."""
    rng = np.random.default_rng(seed)
    battery = battery if battery is not None else exponential_battery(model)
    worst = {k: 0.0 for k in COVARIANCE_CLASSES}
    resampled = 0
    for ins in battery:
        _require_quasi_primary(ins)
        for kind in COVARIANCE_CLASSES:
            done = 0
            while done < per_class:
                pts = random_points(rng, len(ins))
                g = sample_moebius(kind, rng)
                try:
                    d = covariance_deviation(model, g, ins, pts)
                except PointSentToInfinity:
                    resampled += 1
                    continue
                worst[kind] = max(worst[kind], d)
                done += 1
    metrics = {"max_deviation": max(worst.values()), "per_class": worst, "resampled": resampled}
    verdict = metrics["max_deviation"] <= tol
    if truncated_cutoff is not None:
        tw = 0.0
        for ins in battery:
            for _ in range(n_truncated):
                tw = max(tw, _truncated_covariance_sample(model, ins, rng, truncated_cutoff))
        metrics["max_truncated_deviation"] = tw
        verdict = verdict and tw <= tol_truncated
    return CheckReport(
        "conformal_covariance",
        {"model": _model_params(model), "seed": seed, "per_class": per_class,
         "battery": [[s.label for s in b] for b in battery], "truncated_cutoff": truncated_cutoff,
         "truncated_tolerance": tol_truncated},
        metrics, tol, bool(verdict),
    )


def radial_points(rng: np.random.Generator, n: int, ratio: float = 3.0, r0: float = 0.4) -> list:
    """Radially ordered points |z_1| > ... > |z_n| with consecutive modulus ratio >= ratio."""
    r = r0 * ratio ** np.arange(n)[::-1] * rng.uniform(1.0, 1.2, n) ** np.arange(n)[::-1]
    t = rng.uniform(0, 2 * math.pi, n)
    return [complex(x) for x in r * np.exp(1j * t)]


def _min_ratio(pts) -> float:
    r = [abs(z) for z in pts]
    return min((r[i] / r[i + 1] for i in range(len(r) - 1)), default=math.inf)


def _truncated_covariance_sample(model, ins, rng, cutoff) -> float:
    fn = lambda i, p: schwinger_truncated(model, i, p, cutoff).value
    while True:
        pts = radial_points(rng, len(ins))
        kind = ("rotation", "dilation")[int(rng.integers(0, 2))]
        g = sample_moebius(kind, rng)
        new = [g.apply(z)[0] for z in pts]
        if _min_ratio(new) >= 2.5:
            return _rel(moebius_pushforward(fn, g, ins, pts), fn(ins, pts))


# ------------------------------------------------------------------ Ward identities

def _wirtinger(f, pts, i, step):
    def at(dz):
        p = list(pts)
        p[i] = p[i] + dz
        return f(p)

    dx = (at(step) - at(-step)) / (2 * step)
    dy = (at(1j * step) - at(-1j * step)) / (2 * step)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def ward_residuals(model: Model, insertions, points, step: float = 1e-5) -> dict:
    """Relative residuals of the six global Ward identities (plus the variant with h_i zeta_i
    in the special conformal identity, reported for reference)."""
    f = lambda p: schwinger_closed_form(model, insertions, p)
    S = f(points)
    grads = [_wirtinger(f, points, i, step) for i in range(len(points))]
    h = [s.grading.h for s in insertions]
    hb = [s.grading.hbar for s in insertions]
    z = list(points)
    zb = [np.conj(w) for w in z]
    terms = {
        "translation": [d for d, _ in grads],
        "translation_bar": [db for _, db in grads],
        "scaling": [z[i] * grads[i][0] + h[i] * S for i in range(len(z))],
        "scaling_bar": [zb[i] * grads[i][1] + hb[i] * S for i in range(len(z))],
        "special": [z[i] ** 2 * grads[i][0] + 2 * h[i] * z[i] * S for i in range(len(z))],
        "special_bar": [zb[i] ** 2 * grads[i][1] + 2 * hb[i] * zb[i] * S for i in range(len(z))],
        "special_single_h": [z[i] ** 2 * grads[i][0] + h[i] * z[i] * S for i in range(len(z))],
    }
    out = {}
    for k, t in terms.items():
        scale = max(sum(abs(x) for x in t), abs(S), 1e-300)
        out[k] = abs(sum(t)) / scale
    return out


WARD_IDENTITIES = ("translation", "translation_bar", "scaling", "scaling_bar", "special", "special_bar")


def check_ward(model: Model, battery=None, seed: int = 0, n_configs: int = 20, step: float = 1e-5,
               tol: float = DEFAULT_TOLERANCES["ward"]) -> CheckReport:
    rng = np.random.default_rng(seed)
    battery = battery if battery is not None else exponential_battery(model)
    worst = {k: 0.0 for k in WARD_IDENTITIES}
    single_h = 0.0
    for c in range(n_configs):
        ins = battery[c % len(battery)]
        _require_quasi_primary(ins)
        res = ward_residuals(model, ins, random_points(rng, len(ins), min_dist=0.5), step)
        for k in WARD_IDENTITIES:
            worst[k] = max(worst[k], res[k])
        single_h = max(single_h, res["special_single_h"])
    return CheckReport(
        "ward",
        {"model": _model_params(model), "seed": seed, "n_configs": n_configs, "step": step,
         "battery": [[s.label for s in b] for b in battery]},
        {"max_residual": max(worst.values()), "per_identity": worst,
         "special_with_single_h_residual": single_h},
        tol,
        bool(max(worst.values()) <= tol),
        label="central finite differences",
    )


# ------------------------------------------------------------------ reflection positivity

def hermite_exponential(model: Model, alpha, which: int = 0) -> VertexSymbol:
    """One of the two Hermite combinations built from e_alpha and phi(e_alpha)."""
    a = FockState.basis(tuple(int(x) for x in alpha))
    s = hermite_pair(model, a)[which]
    return make_symbol(model, s, "Hermite", tuple(alpha), f"herm{tuple(alpha)}")


def _validate_family(fam):
    taus = [complex(w).real for _, w in fam]
    if any(t <= 0 for t in taus):
        raise SupportViolation("family points must have tau > 0")
    if any(taus[i + 1] <= taus[i] for i in range(len(taus) - 1)):
        raise SupportViolation("family points must have strictly increasing tau")


def rp_matrix(model: Model, families) -> np.ndarray:
    """M_IJ = S(theta-reflected reversed family I, family J) on the closed form."""
    for fam in families:
        _validate_family(fam)
    n = len(families)
    M = np.zeros((n, n), dtype=complex)
    for i, fi in enumerate(families):
        refl = [(s, theta(complex(w))) for s, w in reversed(fi)]
        for j, fj in enumerate(families):
            allp = [p for _, p in refl] + [complex(w) for _, w in fj]
            if len(set(allp)) != len(allp):
                raise SupportViolation("reflected and unreflected points coincide")
            ins = [s for s, _ in refl] + [s for s, _ in fj]
            M[i, j] = schwinger_closed_form(model, ins, allp) if ins else 1.0
    return M


def random_rp_families(model: Model, rng: np.random.Generator, size: int = 6, max_points: int = 2,
                       nvec: int = 3) -> list:
    """Random families of Hermite exponentials at tau > 0; the first family is the vacuum."""
    vecs = short_vectors(model, nvec)
    fams = [[]]
    while len(fams) < size:
        k = int(rng.integers(1, max_points + 1))
        taus = np.sort(rng.uniform(0.2, 1.5, k))
        if k > 1 and np.min(np.diff(taus)) < 0.1:
            continue
        xs = rng.uniform(-1, 1, k)
        fam = []
        for t, x in zip(taus, xs):
            v = vecs[int(rng.integers(0, len(vecs)))]
            fam.append((hermite_exponential(model, v, int(rng.integers(0, 2))), complex(t, x)))
        fams.append(fam)
    return fams


def check_reflection_positivity(model: Model, families=None, seed: int = 0, n_seeds: int = 20, size: int = 6,
                                tol: float = DEFAULT_TOLERANCES["reflection_positivity"]) -> CheckReport:
    """Min eigenvalue of the reflection Gram matrix relative to its norm, over random seeds."""
    fam_sets = [families] if families is not None else [
        random_rp_families(model, np.random.default_rng([seed, k]), size) for k in range(n_seeds)]
    worst = math.inf
    herm_dev = 0.0
    info = []
    for fams in fam_sets:
        M = rp_matrix(model, fams)
        scale = max(np.linalg.norm(M, 2), 1e-300)
        hd = float(np.max(np.abs(M - M.conj().T))) / scale
        herm_dev = max(herm_dev, hd)
        if hd > 1e-12:
            raise InternalAssertion(f"reflection Gram matrix not Hermitian (deviation {hd:.3g})")
        ev = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
        rel = ev[0] / scale
        worst = min(worst, rel)
        info.append({"size": len(fams), "min_eigenvalue": ev[0], "norm": scale})
    return CheckReport(
        "reflection_positivity",
        {"model": _model_params(model), "seed": seed, "n_sets": len(fam_sets), "size": size},
        {"min_relative_eigenvalue": worst, "hermiticity_deviation": herm_dev},
        tol,
        bool(worst >= -tol),
        details=info,
    )


# ------------------------------------------------------------------ clustering

def _charges(model, sym: VertexSymbol) -> set:
    return {m.charge for m in sym.state}


def exchange_gap(model: Model, g_family) -> float:
    """Lowest weight that can be exchanged between the clusters: min over the total charges q of
    the family terms of (q, q)_p / 2 for q != 0, and 1 (a single oscillator) for q = 0."""
    gaps = []
    for combo in itertools.product(*[_charges(model, s) for s, _ in g_family]):
        q = np.sum(np.array(combo, dtype=np.int64).reshape(len(combo), model.rank), axis=0)
        if np.any(q):
            gaps.append(0.5 * float(q @ model.metric @ q))
        elif model.rank:
            gaps.append(1.0)
    return min(gaps) if gaps else math.inf


def spectral_gap(model: Model, nmax: int = 4) -> float:
    """Minimal nonzero h + hbar of the spectrum."""
    best = 1.0 if model.rank else math.inf
    for v in enumerate_lattice_points(model.lattice, model.polarization, 2.0 * nmax):
        if any(v):
            h, hb = model.sector_weight(v)
            best = min(best, h + hb)
    return best


def clustering_values(model: Model, f, g, lambdas, direction: complex = 1.0) -> np.ndarray:
    sf = schwinger_closed_form(model, [s for s, _ in f], [z for _, z in f])
    sg = schwinger_closed_form(model, [s for s, _ in g], [z for _, z in g])
    out = []
    for lam in lambdas:
        shifted = [z + lam * direction for _, z in f]
        s = schwinger_closed_form(model, [s for s, _ in f] + [s for s, _ in g], shifted + [z for _, z in g])
        out.append(abs(s - sf * sg))
    return np.array(out)


def fit_power(lambdas, values, floor: float = 1e-280) -> tuple:
    """Least-squares slope of log values vs log lambda over the last three points."""
    lam = np.asarray(lambdas, float)[-3:]
    val = np.asarray(values, float)[-3:]
    if np.any(val <= floor):
        raise DegenerateFit("clustering difference below the numerical floor")
    A = np.vstack([np.log(lam), np.ones_like(lam)]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(val), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(val)) ** 2)))
    return float(coef[0]), resid


def default_cluster_family(model: Model) -> list:
    a = short_vectors(model, 1)[0]
    return [(hermite_exponential(model, a, 0), 0.3 + 0.2j)]


def check_clustering(model: Model, f=None, g=None, lambdas=(16, 32, 64, 128), direction: complex = 1.0,
                     tol: float = DEFAULT_TOLERANCES["clustering"]) -> CheckReport:
    f = f if f is not None else default_cluster_family(model)
    g = g if g is not None else [(s, -z) for s, z in default_cluster_family(model)]
    lambdas = tuple(float(x) for x in lambdas)
    D = clustering_values(model, f, g, lambdas, direction)
    d_exch = exchange_gap(model, g)
    d_min = spectral_gap(model)
    params = {"model": _model_params(model), "lambdas": lambdas, "direction": complex(direction),
              "f": [[s.label, z] for s, z in f], "g": [[s.label, z] for s, z in g]}
    metrics = {"D": D, "delta_exchange": d_exch, "delta_min": d_min, "expected_exponent": -2 * d_exch}
    try:
        slope, resid = fit_power(lambdas, D)
    except DegenerateFit as exc:
        metrics.update({"degenerate": True, "reason": str(exc)})
        return CheckReport("clustering", params, metrics, tol, True)
    metrics.update({"degenerate": False, "exponent": slope, "fit_residual": resid,
                    "relative_error": abs(slope + 2 * d_exch) / (2 * d_exch)})
    return CheckReport("clustering", params, metrics, tol, bool(metrics["relative_error"] <= tol))


# ------------------------------------------------------------------ energy bounds

def default_upsilon(model: Model, max_norm: float = 2.0) -> list:
    """The vacuum, a left and a right current, and e_alpha with 0 < (alpha, alpha)_p <= max_norm."""
    out = [vacuum_symbol(model)]
    if model.n_left:
        out.append(current_left(model, _left_vector(model)))
    if model.n_right:
        out.append(current_right(model, _right_vector(model)))
    for v in enumerate_lattice_points(model.lattice, model.polarization, max_norm):
        if any(v):
            out.append(exponential(model, v))
    return out


@dataclass(frozen=True)
class PEBFit:
    label: str
    M: float
    p: int
    q: int
    samples: int


def _peb_samples(model: Model, sym: VertexSymbol, basis, grid: int):
    rows = []
    for b in basis:
        wb = weight(model, b).total
        nb = math.sqrt(monomial_norm_sq(model, b))
        for (r, s), v in mode_norm_table(model, sym, b, grid).items():
            if v > 0:
                rows.append((abs(r) + abs(s) + 1.0, wb + 1.0, v / nb))
    return np.array(rows) if rows else np.zeros((0, 3))


def fit_peb(data: np.ndarray, max_pq: int = 6) -> tuple | None:
    """Smallest (p, q) (by p + q, then p) whose ratio envelope does not grow towards the grid
    edge, in the mode size and in the weight of b; returns (M, p, q) or None."""
    if len(data) == 0:
        return 0.0, 0, 0
    size, wb, val = data.T
    outer_s = size > 0.5 * size.max()
    outer_w = wb > 0.5 * (wb.max() + 1)
    for tot in range(2 * max_pq + 1):
        for p in range(max(0, tot - max_pq), min(tot, max_pq) + 1):
            q = tot - p
            ratio = val / (size ** p * wb ** q)
            M = float(ratio.max())
            ok = True
            for outer in (outer_s, outer_w):
                if outer.any() and (~outer).any():
                    if ratio[outer].max() > ratio[~outer].max() * (1 + 1e-9):
                        ok = False
            if ok:
                return M, p, q
    return None


def check_energy_bounds(model: Model, upsilon=None, cutoff: float = 4.0, grid: int = 20,
                        max_pq: int = 6) -> CheckReport:
    upsilon = upsilon if upsilon is not None else default_upsilon(model)
    basis = [m for sec in graded_basis(model, cutoff) for m in sec.monomials]
    fits = []
    failed = []
    for sym in upsilon:
        data = _peb_samples(model, sym, basis, grid)
        res = fit_peb(data, max_pq)
        if res is None:
            failed.append(sym.label)
            continue
        fits.append(PEBFit(sym.label, res[0], res[1], res[2], len(data)))
    metrics = {"fits": [asdict(f) for f in fits], "unfitted": failed, "basis_size": len(basis)}
    if fits:
        metrics.update({"M": max(f.M for f in fits), "p": max(f.p for f in fits), "q": max(f.q for f in fits)})
    return CheckReport(
        "energy_bounds",
        {"model": _model_params(model), "cutoff": cutoff, "grid": grid, "max_pq": max_pq,
         "upsilon": [s.label for s in upsilon]},
        metrics, float(max_pq), bool(not failed),
        label="finite mode grid",
    )


def peb_constants(M: float, p: int, q: int, h_upsilon: float) -> tuple:
    """Constants (M_Y, Q_Y) for the n-point mode estimate derived from the energy-bound fit."""
    c = h_upsilon + 3.0
    return M * c ** q * 2.0 ** (p + q), p + q


def mode_expectation(model: Model, syms, modes) -> complex:
    """<1, a_1(r_1, s_1) ... a_n(r_n, s_n) 1> from truncated vertex modes."""
    b = FockState.vacuum(model.rank)
    for sym, rs in reversed(list(zip(syms, modes))):
        table = vertex_modes(model, sym, b, 8.0)
        b = table.get(rs)
        if b is None:
            return 0j
    return complex(b.get(next(iter(FockState.vacuum(model.rank))), 0.0))


def sample_mode_tuples(model: Model, upsilon, rng: np.random.Generator, n_samples: int, max_n: int = 4,
                       max_weight: float = 4.0):
    """Random (syms, modes, value) with every intermediate state of weight <= max_weight and the
    last mode chosen to land on the vacuum when possible."""
    vac = FockState.vacuum(model.rank)
    vkey = next(iter(vac))
    out = []
    while len(out) < n_samples:
        n = int(rng.integers(1, max_n + 1))
        syms = [upsilon[int(i)] for i in rng.integers(0, len(upsilon), n)]
        b = vac
        modes = []
        ok = True
        for j in range(n - 1, -1, -1):
            try:
                table = vertex_modes(model, syms[j], b, max_weight)
            except CutoffTooSmall:
                table = {}
            if j == 0:
                keys = [rs for rs, st in table.items() if vkey in st]
            else:
                keys = [rs for rs, st in table.items() if len(st)]
            if not keys:
                ok = False
                break
            rs = sorted(keys)[int(rng.integers(0, len(keys)))]
            modes.append(rs)
            b = table[rs]
        if not ok:
            continue
        modes = modes[::-1]
        out.append((syms, modes, complex(b.get(vkey, 0.0))))
    return out


def check_peb_estimate(model: Model, fit: CheckReport | None = None, seed: int = 0, n_samples: int = 200,
                       upsilon=None) -> CheckReport:
    """Samples the n-point mode estimate with constants derived from the energy-bound fit."""
    upsilon = upsilon if upsilon is not None else default_upsilon(model)
    fit = fit if fit is not None else check_energy_bounds(model, upsilon)
    if not fit.verdict:
        return CheckReport("peb_estimate", {"model": _model_params(model)}, {"reason": "no energy-bound fit"},
                           0.0, False)
    h_up = max(s.grading.total for s in upsilon)
    MY, QY = peb_constants(fit.metrics["M"], fit.metrics["p"], fit.metrics["q"], h_up)
    rng = np.random.default_rng(seed)
    samples = sample_mode_tuples(model, upsilon, rng, n_samples)
    worst = 0.0
    violations = 0
    for syms, modes, val in samples:
        n = len(syms)
        A = sum(abs(r + s) + 1 for r, s in modes)
        B = sum(abs(r - s) + 1 for r, s in modes)
        bound = MY ** n * A ** (n * QY) * B ** (n * QY)
        worst = max(worst, abs(val) / bound)
        violations += abs(val) > bound
    return CheckReport(
        "peb_estimate",
        {"model": _model_params(model), "seed": seed, "n_samples": n_samples, "M_upsilon": MY, "Q_upsilon": QY},
        {"max_ratio": worst, "violations": violations,
         "nonzero_samples": sum(abs(v) > 0 for *_, v in samples)},
        0.0, bool(violations == 0),
        label="sampled mode tuples",
    )


# ------------------------------------------------------------------ spectral density

def check_spectral_density(model: Model, nmax: int = 20,
                           slack: float = DEFAULT_TOLERANCES["spectral_density"],
                           max_residual: float = 1.0) -> CheckReport:
    counts = spectral_density_histogram(model.lattice, model.polarization, nmax)
    N = np.arange(nmax + 1)
    keep = counts > 0
    params = {"model": _model_params(model), "nmax": nmax, "max_residual": max_residual}
    metrics = {"counts": counts, "rank": model.rank}
    if keep.sum() < 3:
        metrics.update({"degenerate": True, "reason": "fewer than three nonempty buckets"})
        return CheckReport("spectral_density", params, metrics, slack, True, label="lattice enumeration")
    x = np.log(N[keep] + 2.0)
    y = np.log(counts[keep].astype(float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    L = float(coef[0])
    C = float(np.max(counts[keep] / (N[keep] + 2.0) ** L))
    metrics.update({"degenerate": False, "L": L, "C": C, "fit_residual": resid})
    return CheckReport("spectral_density", params, metrics, slack,
                       bool(L <= model.rank + slack and resid <= max_residual), label="lattice enumeration")


# ------------------------------------------------------------------ inversion

def inversion_deviation(model: Model, insertions, points) -> float:
    fn = lambda ins, pts: schwinger_closed_form(model, ins, pts)
    return _rel(inversion_transform(fn, insertions, points), fn(insertions, points))


def check_inversion_identity(model: Model, battery=None, seed: int = 0, n_configs: int = 10,
                             tol: float = DEFAULT_TOLERANCES["inversion"]) -> CheckReport:
    rng = np.random.default_rng(seed)
    battery = battery if battery is not None else exponential_battery(model)
    worst = 0.0
    for ins in battery:
        _require_quasi_primary(ins)
        for _ in range(n_configs):
            pts = random_points(rng, len(ins))
            while any(abs(z) < 0.2 for z in pts):
                pts = random_points(rng, len(ins))
            worst = max(worst, inversion_deviation(model, ins, pts))
    return CheckReport(
        "inversion_identity",
        {"model": _model_params(model), "seed": seed, "n_configs": n_configs,
         "battery": [[s.label for s in b] for b in battery]},
        {"max_deviation": worst},
        tol, bool(worst <= tol),
    )


# ------------------------------------------------------------------ runner

CHECKS = ("unitarity", "symmetry", "conformal_covariance", "ward", "reflection_positivity", "clustering",
          "energy_bounds", "peb_estimate", "spectral_density", "inversion_identity")


def run_check(name: str, model: Model, cutoff: float | None = None, seed: int = 0, tols: dict | None = None) -> CheckReport:
    tols = {**DEFAULT_TOLERANCES, **(tols or {})}
    if name == "unitarity":
        return check_unitarity(model, 6.0 if cutoff is None else cutoff, tols["unitarity"])
    if name == "symmetry":
        return check_symmetry(model, seed=seed, tol=tols["symmetry"], vacuum_tol=tols["vacuum"])
    if name == "conformal_covariance":
        return check_conformal_covariance(model, seed=seed, tol=tols["covariance"],
                                          truncated_cutoff=10.0 if cutoff is None else cutoff,
                                          tol_truncated=tols["covariance_truncated"])
    if name == "ward":
        return check_ward(model, seed=seed, tol=tols["ward"])
    if name == "reflection_positivity":
        return check_reflection_positivity(model, seed=seed, tol=tols["reflection_positivity"])
    if name == "clustering":
        return check_clustering(model, tol=tols["clustering"])
    if name == "energy_bounds":
        return check_energy_bounds(model, cutoff=4.0 if cutoff is None else min(cutoff, 4.0))
    if name == "peb_estimate":
        return check_peb_estimate(model, seed=seed)
    if name == "spectral_density":
        return check_spectral_density(model, slack=tols["spectral_density"])
    if name == "inversion_identity":
        return check_inversion_identity(model, seed=seed, tol=tols["inversion"])
    raise ValueError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
