"""Envelope ratios (doubling of F, diam F / R, mu(F) / mu(B)) over a dyadic R grid."""

import argparse
import csv
import os
from dataclasses import dataclass

from locahal.dyadic import envelope_context, envelope_stability
from locahal.space import generate
from locahal.suite import builtin_space, central_point


@dataclass
class Config:
    out_dir: str = "results/envelope"
    spaces: tuple = ("grid1d", "grid2d", "asym", "multiscale", "multiscale-4")
    steps: int = 5  # R_n, R_n/2, ..., R_n/2^(steps-1)


def _space(name):
    if name == "multiscale-4":
        return generate("multiscale", depth=4, branching=3)
    return builtin_space(name)


def main(cfg: Config):
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    for name in cfg.spaces:
        sp = _space(name)
        ctx = envelope_context(sp, 1)
        x = central_point(sp, 1)
        radii = [ctx.R_n / 2**i for i in range(cfg.steps)]
        rep, envs = envelope_stability(sp, 1, x, radii=radii, ctx=ctx)
        for e in envs:
            rows.append([name, x, e.R, e.k, len(e.F), e.measured["doubling"], e.measured["diam_over_R"],
                         e.measured["mu_ratio"], e.measured["j"]])
        print(f"{name}: R_n={ctx.R_n:.3g} k0={ctx.k0} |F|={[len(e.F) for e in envs]} "
              f"diam/R={[round(e.measured['diam_over_R'], 3) for e in envs]} ok={rep.ok}")
    with open(os.path.join(cfg.out_dir, "envelope.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["space", "center", "R", "k", "F_size", "doubling", "diam_over_R", "mu_ratio", "j"])
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=Config.out_dir)
    ap.add_argument("--steps", type=int, default=Config.steps)
    a = ap.parse_args()
    main(Config(out_dir=a.out_dir, steps=a.steps))
