"""Run the acceptance battery and write a JSON report plus a per-criterion CSV."""

import argparse
import csv
import os
from dataclasses import asdict, dataclass

from locahal.suite import SuiteConfig, run_suite, summary_lines


@dataclass
class Config:
    out_dir: str = "results/suite"
    seed: int = 0
    quick: bool = False
    jobs: int = 1


def main(cfg: Config):
    os.makedirs(cfg.out_dir, exist_ok=True)
    kw = dict(seed=cfg.seed, jobs=cfg.jobs)
    scfg = SuiteConfig.quick_mode(**kw) if cfg.quick else SuiteConfig(**kw)
    rep, parts = run_suite(scfg)
    rep.inputs["config"] = asdict(cfg)
    rep.write(os.path.join(cfg.out_dir, "report.json"))
    with open(os.path.join(cfg.out_dir, "criteria.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["criterion", "ok", "checks", "failures", "seconds"])
        for k, r in parts.items():
            w.writerow([k, r.ok, len(r.checks), len(r.failures()), f"{r.wall_time:.3f}"])
    print("\n".join(summary_lines(parts)))
    return 0 if rep.ok else 2


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=Config.out_dir)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    a = ap.parse_args()
    raise SystemExit(main(Config(a.out_dir, a.seed, a.quick, a.jobs)))
