"""R-independence probe: localized operator norms at R*, R*/2, R*/4 on several grids.

R* = R0 / c with the default c = 4 B_(n+1), the largest radius the localization admits.
"""

import argparse
import csv
import os
from dataclasses import dataclass

import numpy as np

from locahal.analysis import order_alpha_distance
from locahal.operators import KernelSpec, estimate_operator_norm, localize
from locahal.report import spread
from locahal.space import level_constants
from locahal.suite import builtin_space, central_point


@dataclass
class Config:
    out_dir: str = "results/norms"
    spaces: tuple = ("wide1d", "wide2d")
    trials: int = 200
    seed: int = 0


CASES = (("antisymmetric nu=0, p=q=2", KernelSpec("antisymmetric-model"), 2.0, 2.0),
         ("riesz nu=0, p=q=2", KernelSpec("riesz-model"), 2.0, 2.0),
         ("riesz nu=1/4, p=2 q=4", KernelSpec("riesz-model", nu=0.25), 2.0, 4.0))


def main(cfg: Config):
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    for name in cfg.spaces:
        sp = builtin_space(name)
        x = central_point(sp, 1)
        R = float(np.nextafter(2 * level_constants(sp, 1).eps, 0)) / (4 * level_constants(sp, 2).B)
        od = order_alpha_distance(sp, 2)
        for label, spec, p, q in CASES:
            vals = []
            for i, r in enumerate((R, R / 2, R / 4)):
                L = localize(spec, sp, 1, x, r, od=od)
                S = np.flatnonzero(sp.row(x) < r)
                est = estimate_operator_norm(L.Kt, sp, S, p, q, trials=cfg.trials, seed=cfg.seed + i)
                v = est.get("exact_p2_norm", est["monte_carlo_lower_bound"])
                vals.append(v)
                rows.append([name, label, r, S.size, v])
            print(f"{name:8s} {label:26s} {np.round(vals, 3).tolist()} spread={spread(vals):.2f}")
    with open(os.path.join(cfg.out_dir, "norms.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["space", "case", "R", "ball_size", "norm"])
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=Config.out_dir)
    ap.add_argument("--trials", type=int, default=Config.trials)
    a = ap.parse_args()
    main(Config(out_dir=a.out_dir, trials=a.trials))
