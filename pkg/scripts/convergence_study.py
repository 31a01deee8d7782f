"""Truncated mode sums against the closed form: relative deviation by cutoff and radial ratio.

    python3 scripts/convergence_study.py --R 1.3 --cutoffs 4 8 12 --out convergence.csv
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from narain_os.axioms import exponential_battery
from narain_os.correlators import schwinger_closed_form, schwinger_truncated
from narain_os.model import ii11_model


@dataclass
class ConvergenceConfig:
    R: float = 1.3
    cutoffs: list = field(default_factory=lambda: [4, 8, 12])
    ratios: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
    r_inner: float = 0.7


def battery_points(n: int, ratio: float, r_inner: float) -> list:
    return [r_inner * ratio ** (n - 1 - k) * np.exp(1j * (0.3 + 1.1 * k)) for k in range(n)]


def run(cfg: ConvergenceConfig) -> list:
    model = ii11_model(cfg.R)
    rows = []
    for ins in exponential_battery(model)[:3]:
        for ratio in cfg.ratios:
            pts = battery_points(len(ins), ratio, cfg.r_inner)
            exact = schwinger_closed_form(model, ins, pts)
            for H in cfg.cutoffs:
                t0 = time.perf_counter()
                sv = schwinger_truncated(model, ins, pts, H)
                rows.append({"n": len(ins), "ratio": ratio, "cutoff": H,
                             "rel_dev": abs(sv.value - exact) / abs(exact),
                             "err_estimate": sv.truncation_error / abs(exact),
                             "seconds": time.perf_counter() - t0})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R", type=float, default=1.3)
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[4, 8, 12])
    ap.add_argument("--ratios", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    a = ap.parse_args(argv)
    rows = run(ConvergenceConfig(a.R, a.cutoffs, a.ratios))
    fh = open(a.out, "w", newline="") if a.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if a.out:
        fh.close()


if __name__ == "__main__":
    main()
