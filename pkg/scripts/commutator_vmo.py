"""Commutator norms against the local BMO modulus of the symbol over shrinking balls."""

import argparse
import csv
import os
from dataclasses import dataclass

import numpy as np

from locahal.analysis import order_alpha_distance
from locahal.bmo import vmo_smallness_experiment
from locahal.operators import KernelSpec
from locahal.space import level_constants
from locahal.suite import builtin_space, central_point


@dataclass
class Config:
    out_dir: str = "results/vmo"
    space: str = "wide1d"
    steps: int = 5
    trials: int = 32
    seed: int = 0
    exponent: float = 0.5  # symbol a(x) = rho(x, x0)^exponent


def main(cfg: Config):
    os.makedirs(cfg.out_dir, exist_ok=True)
    sp = builtin_space(cfg.space)
    x = central_point(sp, 1)
    R = float(np.nextafter(2 * level_constants(sp, 1).eps, 0)) / (4 * level_constants(sp, 2).B)
    radii = [R / 2**i for i in range(cfg.steps)]
    a = sp.row(x) ** cfg.exponent
    od = order_alpha_distance(sp, 2)
    rows = []
    for variant, spec in (("linear", KernelSpec("antisymmetric-model")),
                          ("positive", KernelSpec("riesz-model", nu=0.25))):
        rep, norms, etas = vmo_smallness_experiment(sp, 1, x, spec, a, radii, variant=variant, trials=cfg.trials,
                                                    seed=cfg.seed, od=od)
        c = rep.get("norm(r) <= c eta*(c_n r)").measured["c"]
        for r, nr, e in zip(radii, norms, etas):
            rows.append([variant, r, nr, e, nr / e if e else float("nan")])
        print(f"{variant}: c={c:.3f} norms={np.round(norms, 3).tolist()} eta={np.round(etas, 3).tolist()}")
    with open(os.path.join(cfg.out_dir, "vmo.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "r", "norm", "eta", "ratio"])
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=Config.out_dir)
    ap.add_argument("--space", default=Config.space)
    ap.add_argument("--steps", type=int, default=Config.steps)
    ap.add_argument("--exponent", type=float, default=Config.exponent)
    a = ap.parse_args()
    main(Config(out_dir=a.out_dir, space=a.space, steps=a.steps, exponent=a.exponent))
