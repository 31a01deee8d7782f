"""Acceptance criteria 1-11 at their stated tolerances.

Each test records one line 'criterion N: PASS|FAIL ...'; the lines are collected into an
'acceptance criteria' section at the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from narain_os.axioms import (
    check_clustering,
    check_conformal_covariance,
    check_energy_bounds,
    check_inversion_identity,
    check_peb_estimate,
    check_reflection_positivity,
    check_spectral_density,
    check_symmetry,
    check_unitarity,
    check_ward,
    exponential_battery,
)
from narain_os.correlators import schwinger_closed_form, schwinger_truncated
from narain_os.geometry import (
    bump_bound,
    bump_derivative,
    cayley,
    cayley_inv,
    direction_margin,
    double_factorial,
    g_plus_derivative_terms,
    good_direction,
    radial_ratio_bound,
    radial_shift,
    reflect_circle,
    theta,
)
from narain_os.model import ii11_model

RADII = (1.0, 1.3, math.sqrt(2))


@pytest.fixture
def record(record_property):
    def _record(n: int, ok: bool, detail: str):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        record_property("criterion", line)
        return ok

    return _record


@pytest.fixture(scope="module")
def energy_fit():
    return check_energy_bounds(ii11_model(1.3), cutoff=4.0, grid=20, max_pq=6)


def test_criterion_01_unitarity(record):
    parts, ok = [], True
    for R in RADII:
        t0 = time.perf_counter()
        rep = check_unitarity(ii11_model(R), cutoff=6.0, tol=1e-9)
        dt = time.perf_counter() - t0
        ok &= rep.verdict and dt < 60
        parts.append(f"R={R:.4g} min={rep.metrics['min_relative_eigenvalue']:.3g} t={dt:.1f}s")
    assert record(1, ok, "; ".join(parts))


def _battery_points(n: int, ratio: float) -> list:
    return [0.7 * ratio ** (n - 1 - k) * np.exp(1j * (0.3 + 1.1 * k)) for k in range(n)]


def test_criterion_02_oracle_equivalence(record):
    model = ii11_model(1.3)
    battery = exponential_battery(model)[:3]
    t0 = time.perf_counter()
    worst12, monotone, rows = 0.0, True, []
    for ins in battery:
        for ratio in (1.5, 2.0, 3.0):
            pts = _battery_points(len(ins), ratio)
            exact = schwinger_closed_form(model, ins, pts)
            devs = [abs(schwinger_truncated(model, ins, pts, H).value - exact) / abs(exact) for H in (4, 8, 12)]
            worst12 = max(worst12, devs[-1])
            monotone &= devs[0] > devs[1] > devs[2]
            rows.append(f"n={len(ins)} r={ratio:g} " + "/".join(f"{d:.2g}" for d in devs))
    dt = time.perf_counter() - t0
    ok = worst12 <= 1e-6 and monotone and dt < 120
    detail = f"max rel dev at H=12 {worst12:.3g} (tol 1e-6), monotone={monotone}, t={dt:.1f}s"
    print("\n".join(rows))
    assert record(2, ok, detail), "\n".join(rows)


def test_criterion_03_symmetry_vacuum(record):
    rep = check_symmetry(ii11_model(1.3), tol=1e-10, vacuum_tol=1e-12)
    m = rep.metrics
    assert record(3, rep.verdict, f"perm {m['max_permutation_deviation']:.3g} (1e-10), "
                                  f"vacuum {m['max_vacuum_deviation']:.3g} (1e-12)")


def test_criterion_04_covariance(record):
    model = ii11_model(1.3)
    cov = check_conformal_covariance(model, per_class=50, tol=1e-8)
    inv = check_inversion_identity(model, tol=1e-10)
    ok = cov.verdict and inv.verdict
    assert record(4, ok, f"moebius {cov.metrics['max_deviation']:.3g} (1e-8), "
                         f"inversion {inv.metrics['max_deviation']:.3g} (1e-10)")


def test_criterion_05_ward(record):
    rep = check_ward(ii11_model(1.3), n_configs=20, step=1e-5, tol=1e-6)
    assert record(5, rep.verdict, f"max residual {rep.metrics['max_residual']:.3g} (1e-6)")


def test_criterion_06_reflection_positivity(record):
    parts, ok = [], True
    for R in (1.0, 1.3):
        rep = check_reflection_positivity(ii11_model(R), n_seeds=20, size=6, tol=1e-8)
        ok &= rep.verdict
        parts.append(f"R={R:g} min rel eig {rep.metrics['min_relative_eigenvalue']:.3g}")
    assert record(6, ok, "; ".join(parts) + " (>= -1e-8)")


def test_criterion_07_clustering(record):
    rep = check_clustering(ii11_model(1.0), lambdas=(16, 32, 64, 128), tol=0.15)
    m = rep.metrics
    expected = -2 * m["delta_min"]
    rel = abs(m["exponent"] - expected) / abs(expected)
    ok = rep.verdict and abs(m["delta_min"] - 0.5) < 1e-12 and rel <= 0.15
    assert record(7, ok, f"exponent {m['exponent']:.4g} vs {expected:.4g}, rel {rel:.3g} (0.15)")


def test_criterion_08_spectral_density(record):
    parts, ok = [], True
    for R in RADII:
        rep = check_spectral_density(ii11_model(R), nmax=20, slack=0.5)
        ok &= rep.verdict and not rep.metrics["degenerate"]
        parts.append(f"R={R:.4g} L={rep.metrics['L']:.3g}")
    assert record(8, ok, "; ".join(parts) + " (<= 2.5)")


def test_criterion_09_energy_bounds(record, energy_fit):
    m = energy_fit.metrics
    ok = energy_fit.verdict and m["p"] <= 6 and m["q"] <= 6
    assert record(9, ok, f"M={m.get('M', float('nan')):.4g} p={m.get('p')} q={m.get('q')} "
                         f"over {m['basis_size']} basis states, unfitted={m['unfitted']}")


def _preconditioned(rng, n):
    while True:
        ang = rng.uniform(0, 2 * math.pi)
        e = np.array([math.cos(ang), math.sin(ang)])
        eta = rng.uniform(0.05, 0.9)
        s = np.concatenate([[rng.uniform(-1, 1)], eta + rng.uniform(1e-9, 0.5, n - 1)]).cumsum()
        t = rng.uniform(-1, 1, n)
        pts = s[:, None] * e + t[:, None] * np.array([-e[1], e[0]])
        R = math.sqrt(float(np.sum(pts ** 2))) * rng.uniform(1.0, 1.5)
        if R > 1:
            return pts, e, R, eta


def test_criterion_10_geometry(record):
    rng = np.random.default_rng(10)
    gd = True
    for _ in range(500):
        n = int(rng.integers(2, 21))
        pts = rng.normal(size=(n, 2))
        e = good_direction(pts)
        gd &= direction_margin(e, pts) >= math.pi / (4 * n * n)
    w = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-3, 3, 100)
    cay = max(abs(cayley_inv(reflect_circle(cayley(x))) - theta(x)) / max(1, abs(x)) for x in w)
    rs = True
    for _ in range(100):
        pts, e, R, eta = _preconditioned(rng, int(rng.integers(2, 6)))
        _, z = radial_shift(pts, e, R, eta)
        rs &= all(abs(a) / abs(b) < radial_ratio_bound(R, eta) for a, b in zip(z[:-1], z[1:]))
    grid = np.linspace(-1.5, 4.5, 10_000)
    bump = all(np.max(np.abs(bump_derivative(m, grid))) <= bump_bound(m) for m in range(1, 7))
    struct = True
    for l in range(1, 9):
        terms = g_plus_derivative_terms(l)
        struct &= len(terms) <= 2 ** (l - 1)
        struct &= max(j for _, j in terms) <= 2 * l
        struct &= max(abs(c) for c, _ in terms) <= double_factorial(2 * l)
    ok = gd and cay <= 1e-12 and rs and bump and struct
    assert record(10, ok, f"good_direction={gd} cayley={cay:.2g} radial_shift={rs} bump={bump} structure={struct}")


def test_criterion_11_peb_estimate(record, energy_fit):
    rep = check_peb_estimate(ii11_model(1.3), fit=energy_fit, n_samples=200)
    m, p = rep.metrics, rep.params
    ok = rep.verdict and m["violations"] == 0
    assert record(11, ok, f"M_Y={p.get('M_upsilon')} Q={p.get('Q_upsilon')} violations={m.get('violations')} "
                          f"max ratio {m.get('max_ratio', float('nan')):.3g}")
