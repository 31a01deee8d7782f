"""Reflection-positivity Gram spectra across the II_{1,1} modulus R.

    python3 scripts/rp_scan.py --R 0.8 1.0 1.3 1.6 --seeds 20 --size 6
"""

import argparse
from dataclasses import dataclass, field

import numpy as np

from narain_os.axioms import check_reflection_positivity
from narain_os.model import ii11_model


@dataclass
class RPScanConfig:
    radii: list = field(default_factory=lambda: [0.8, 1.0, 1.3, 1.6])
    seeds: int = 20
    size: int = 6


def run(cfg: RPScanConfig) -> list:
    rows = []
    for R in cfg.radii:
        rep = check_reflection_positivity(ii11_model(R), n_seeds=cfg.seeds, size=cfg.size)
        eigs = np.array([d["min_eigenvalue"] / d["norm"] for d in rep.details])
        rows.append((R, float(eigs.min()), float(np.median(eigs)), rep.verdict))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R", type=float, nargs="+", default=[0.8, 1.0, 1.3, 1.6])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--size", type=int, default=6)
    a = ap.parse_args(argv)
    print("R        min_rel_eig   median_rel_eig  verdict")
    for R, lo, med, ok in run(RPScanConfig(a.R, a.seeds, a.size)):
        print(f"{R:<8g} {lo:<13.3e} {med:<15.3e} {'PASS' if ok else 'FAIL'}")


if __name__ == "__main__":
    main()
