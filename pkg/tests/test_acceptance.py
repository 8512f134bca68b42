"""Acceptance criteria 1-11 at their stated tolerances, one line per criterion."""

import pytest

from locahal.suite import CRITERIA, SuiteConfig, space_plan

TITLES = {
    1: "dyadic structure exactness",
    2: "tree axioms",
    3: "envelope stability",
    4: "order-alpha distance",
    5: "cutoff functions",
    6: "operator suite",
    7: "fractional L^p -> L^q",
    8: "commutators",
    9: "maximal operator",
    10: "quasisymmetric transfer",
    11: "oracle equivalence",
}


@pytest.fixture(scope="module")
def cfg():
    return SuiteConfig(seed=0)


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, cfg, capsys):
    rep = CRITERIA[k](cfg, space_plan(cfg))
    status = "PASS" if rep.ok else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {k} ({TITLES[k]}): {status} [{len(rep.checks)} checks, {rep.wall_time:.1f} s]")
    assert rep.ok, [(c.name, c.witness) for c in rep.failures()]
