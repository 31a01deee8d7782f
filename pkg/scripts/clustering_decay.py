"""Clustering defect D(lambda) for separated groups and its fitted power-law exponent.

    python3 scripts/clustering_decay.py --R 1.0 1.3 --lambdas 8 16 32 64 128
"""

import argparse
from dataclasses import dataclass, field

from narain_os.axioms import check_clustering
from narain_os.model import ii11_model


@dataclass
class ClusteringConfig:
    radii: list = field(default_factory=lambda: [1.0, 1.3])
    lambdas: list = field(default_factory=lambda: [16, 32, 64, 128])


def run(cfg: ClusteringConfig) -> list:
    out = []
    for R in cfg.radii:
        rep = check_clustering(ii11_model(R), lambdas=cfg.lambdas)
        out.append((R, rep))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--R", type=float, nargs="+", default=[1.0, 1.3])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[16, 32, 64, 128])
    a = ap.parse_args(argv)
    for R, rep in run(ClusteringConfig(a.R, a.lambdas)):
        m = rep.metrics
        print(f"R={R:g}  delta_exchange={m['delta_exchange']:.4g}  delta_min={m['delta_min']:.4g}")
        for lam, d in zip(a.lambdas, m["D"]):
            print(f"  lambda={lam:<6g} D={d:.4e}")
        if not m.get("degenerate"):
            print(f"  exponent={m['exponent']:.4f}  expected={m['expected_exponent']:.4f}  "
                  f"{'PASS' if rep.verdict else 'FAIL'}")


if __name__ == "__main__":
    main()
