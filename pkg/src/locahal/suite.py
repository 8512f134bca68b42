"""The acceptance battery on built-in spaces."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import oracles
from .analysis import cutoff, cutoff_checks, holder_seminorm, order_alpha_distance
from .bmo import (commutator_apply, commutator_apply_direct, positive_commutator_apply,
                  verify_bmo_bridge, vmo_smallness_experiment)
from .dyadic import (build_system, envelope_context, envelope_stability, maximal_net, net_checks,
                     tree_checks, verify_properties)
from .maximal import local_maximal, maximal_checks, maximal_radius, vitali_select
from .operators import (KernelSpec, apply_fractional, apply_full, apply_truncated, check_cancellation,
                        check_standard_estimates, convergence_check, estimate_operator_norm,
                        exact_p2_norm, localize, weak11_constant)
from .report import VerificationReport, exact, measured, spread, timed, within_factor
from .space import FiniteSpace, check_sandwich, generate, level_constants, symmetrize


@dataclass
class SuiteConfig:
    seed: int = 0
    quick: bool = False
    jobs: int = 1
    factor: float = 4.0
    trials_norm: int = 64
    trials_frac: int = 200
    battery_size: int = 50
    weak_samples: int = 100
    vitali_families: int = 20
    tree_seeds: int = 10
    oracle_instances: int = 20
    criteria: tuple = tuple(range(1, 12))
    budgets: dict = field(default_factory=lambda: {1: 60.0, 2: 30.0, 6: 120.0})

    @classmethod
    def quick_mode(cls, **kw):
        base = dict(quick=True, trials_norm=16, trials_frac=48, battery_size=20, weak_samples=20,
                    vitali_families=10, tree_seeds=3, oracle_instances=10)
        base.update(kw)
        return cls(**base)


@lru_cache(maxsize=None)
def builtin_space(name):
    """Named example spaces; ``-sym`` variants come from the asymmetric grids."""
    table = {
        "grid1d": ("euclidean-grid", dict(dim=1, side=20, levels=3)),
        "grid2d": ("euclidean-grid", dict(dim=2, side=15, levels=3)),
        "asym-raw": ("asymmetric-grid", dict(side=20, skew=3, levels=3)),
        "multiscale": ("multiscale", dict(depth=3, branching=3)),
        "wide1d": ("euclidean-grid", dict(dim=1, side=201, levels=2)),
        "wide1d-quick": ("euclidean-grid", dict(dim=1, side=101, levels=2)),
        "wide2d": ("euclidean-grid", dict(dim=2, side=31, levels=2)),
        "wide-asym-raw": ("asymmetric-grid", dict(side=201, skew=3, levels=2)),
        "wide-asym-raw-quick": ("asymmetric-grid", dict(side=101, skew=3, levels=2)),
    }
    if name == "asym":
        return symmetrize(builtin_space("asym-raw"))
    if name.startswith("wide-asym") and not name.startswith("wide-asym-raw"):
        return symmetrize(builtin_space(name.replace("wide-asym", "wide-asym-raw")))
    kind, params = table[name]
    return generate(kind, **params)


def space_plan(cfg, symmetrized=False):
    """Which spaces feed which criteria."""
    q = "-quick" if cfg.quick else ""
    if symmetrized:
        return {"structural": ["asym"], "orders": ["asym"], "singular": f"wide-asym{q}",
                "fractional": f"wide-asym{q}"}
    structural = ["grid1d"] if cfg.quick else ["grid1d", "grid2d", "asym", "multiscale"]
    # coarser 2D grids leave a single point in the smallest ball
    return {"structural": structural, "orders": ["grid1d"] if cfg.quick else ["grid1d", "grid2d"],
            "singular": f"wide1d{q}", "fractional": "wide2d"}


def central_point(space, n):
    """Point of Omega_n minimising its largest distance to Omega_n (lowest id on ties)."""
    om = space.omega(n)
    D = space.dist[np.ix_(om, om)]
    return int(om[int(np.argmin(D.max(axis=1)))])


def _budget(rep, cfg, k, label, seconds):
    lim = cfg.budgets.get(k)
    if lim is not None:
        rep.add(exact(f"{label}runtime within {lim:g} s", "runtime budget", seconds <= lim,
                      {"seconds": seconds}, wall_time=seconds))


# -- criteria ------------------------------------------------------------------------


def criterion_1(cfg, plan):
    rep = VerificationReport("criterion 1: dyadic structure exactness")
    with timed(rep):
        for name in plan["structural"]:
            sp = builtin_space(name)
            t0 = time.perf_counter()
            system = build_system(sp, 1)
            sub = verify_properties(system)
            rep.merge(sub, prefix=f"{name}: ")
            _budget(rep, cfg, 1, f"{name}: ", time.perf_counter() - t0)
    return rep


def criterion_2(cfg, plan):
    rep = VerificationReport("criterion 2: tree axioms")
    t0 = time.perf_counter()
    with timed(rep):
        for name in plan["structural"]:
            sp = builtin_space(name)
            for s in [None] + [cfg.seed + i for i in range(cfg.tree_seeds)]:
                system = build_system(sp, 1, seed=s)
                p = system.params
                tag = f"{name} seed={s}: " if s is not None else f"{name}: "
                for c in tree_checks(sp, system.layers, system.parents, p.delta, p.B_n):
                    c.name = tag + c.name
                    rep.add(c)
                for c in net_checks(sp, system.layers, p.delta, 1):
                    c.name = tag + c.name
                    rep.add(c)
    _budget(rep, cfg, 2, "", time.perf_counter() - t0)
    return rep


def criterion_3(cfg, plan):
    rep = VerificationReport("criterion 3: envelope stability")
    with timed(rep):
        for name in plan["structural"]:
            sp = builtin_space(name)
            ctx = envelope_context(sp, 1)
            sub, _ = envelope_stability(sp, 1, central_point(sp, 1), factor=cfg.factor, ctx=ctx)
            rep.merge(sub, prefix=f"{name}: ")
    return rep


def _top(sp):
    return sp.max_level


def criterion_4(cfg, plan):
    rep = VerificationReport("criterion 4: order-alpha distance")
    with timed(rep):
        for name in plan["orders"]:
            sp = builtin_space(name)
            n = _top(sp)
            od = order_alpha_distance(sp, n)
            m = od.m
            bad = None
            for k in range(m.shape[0]):
                viol = m > m[:, k, None] + m[None, k, :]
                if viol.any():
                    i, j = map(int, np.argwhere(viol)[0])
                    bad = {"x": i, "y": j, "z": k}
                    break
            rep.add(exact(f"{name}: triangle inequality for m", "d is of order alpha", bad is None, bad))
            rep.add(exact(f"{name}: equivalence within [1/8, 8]", "d is of order alpha",
                          1 / 8 <= od.c_low and od.c_high <= 8, {"c_low": od.c_low, "c_high": od.c_high},
                          c_low=od.c_low, c_high=od.c_high, alpha=od.alpha))
            oc = od.order_constant
            rep.add(exact(f"{name}: order constant finite", "MS", np.isfinite(oc), None, c=oc))
            if sp.metric in ("euclidean", "matrix") and name != "asym":
                one = order_alpha_distance(sp, n, alpha_one=True)
                # sqrt rounding lets a chain undercut the direct edge by an ulp
                same = bool(np.allclose(one.d, one.rho, rtol=1e-12, atol=0.0))
                rep.add(exact(f"{name}: alpha=1 gives d = rho", "d is of order alpha",
                              same and abs(one.c_low - 1) <= 1e-12 and abs(one.c_high - 1) <= 1e-12,
                              {"c_low": one.c_low, "c_high": one.c_high}))
    return rep


def criterion_5(cfg, plan):
    rep = VerificationReport("criterion 5: cutoff functions")
    with timed(rep):
        for name in plan["orders"]:
            sp = builtin_space(name)
            n = _top(sp)
            od = order_alpha_distance(sp, n)
            x0 = central_point(sp, 1)
            # r0 keeps the support ball well inside the space
            reach = float(sp.row(x0)[sp.omega(n)].max())
            r0 = float(sp.min_distance()) * 2 ** int(np.floor(np.log2(reach * od.c_low / 4 / sp.min_distance())))
            consts = []
            for r in (r0, r0 / 2, r0 / 4):
                cf = cutoff(sp, od, x0, r)
                inner_ok, outer_ok, range_ok = cutoff_checks(sp, cf)
                rep.add(exact(f"{name} r={r:g}: plateaus", "Prop cutoff", inner_ok and outer_ok and range_ok,
                              {"inner": inner_ok, "outer": outer_ok, "range": range_ok},
                              inner=cf.inner, outer=cf.outer))
                consts.append(cf.holder_constant)
            rep.add(exact(f"{name}: Hoelder constant stable within factor {cfg.factor:g}", "Prop cutoff",
                          within_factor(consts, cfg.factor), {"values": consts}, values=consts))
    return rep


def _star_radius(sp, n, c=None):
    cn = level_constants(sp, n)
    B1 = level_constants(sp, n + 1).B
    c = 4.0 * B1 if c is None else c
    return float(np.nextafter(2 * cn.eps, 0)) / c


def criterion_6(cfg, plan):
    rep = VerificationReport("criterion 6: singular integral suite")
    t0 = time.perf_counter()
    with timed(rep):
        sp = builtin_space(plan["singular"])
        n = 1
        xb = central_point(sp, n)
        od = order_alpha_distance(sp, n + 1)
        spec = KernelSpec("antisymmetric-model", nu=0.0)
        Rs = _star_radius(sp, n)
        norms = []
        rng = np.random.default_rng(cfg.seed)
        for i, R in enumerate((Rs, Rs / 2, Rs / 4)):
            L = localize(spec, sp, n, xb, R, od=od)
            S = np.flatnonzero(sp.row(xb) < R)
            est = estimate_operator_norm(L.Kt, sp, S, 2, 2, trials=cfg.trials_norm, seed=cfg.seed + i,
                                         jobs=cfg.jobs)
            norms.append(est["exact_p2_norm"])
            rep.add(exact(f"R={R:.6g}: monte carlo <= exact p=2 norm", "Theorem L^p C^eta",
                          est["monte_carlo_lower_bound"] <= est["exact_p2_norm"] * (1 + 1e-9),
                          est, **est))
        rep.add(exact(f"p=2 norms within factor {cfg.factor:g}", "Theorem L^p C^eta",
                      within_factor(norms, cfg.factor), {"norms": norms}, norms=norms, spread=spread(norms)))
        L = localize(spec, sp, n, xb, Rs, od=od)
        Kt = L.Kt
        worst = 0.0
        for _ in range(20):
            f, g = rng.standard_normal(sp.N), rng.standard_normal(sp.N)
            a, b = rng.standard_normal(2)
            lhs = apply_truncated(Kt, sp, a * f + b * g, 0.5)
            rhs = a * apply_truncated(Kt, sp, f, 0.5) + b * apply_truncated(Kt, sp, g, 0.5)
            scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
            worst = max(worst, float(np.abs(lhs - rhs).max() / scale))
        rep.add(exact("linearity to 1e-12 relative", "Theorem L^p C^eta", worst <= 1e-12,
                      {"relative_error": worst}, relative_error=worst))
        S = np.flatnonzero(sp.row(xb) < Rs)
        weak_ok, weaks = True, []
        for _ in range(cfg.weak_samples):
            f = np.zeros(sp.N)
            f[S] = rng.standard_normal(S.size)
            w1 = weak11_constant(Kt, sp, f, S)
            w2 = weak11_constant(Kt, sp, 2.0 * f, S)
            weak_ok &= bool(np.isfinite(w1) and w1 == w2)
            weaks.append(w1)
        rep.add(exact("weak (1,1) constant finite and scale invariant", "Theorem L^p C^eta", weak_ok,
                      {"note": "weak constant changed under f -> 2f"}, max=max(weaks)))
        cn = level_constants(sp, n)
        ball0 = np.flatnonzero(sp.row(xb) < np.nextafter(2 * cn.eps, 0))
        M = 2.0 * level_constants(sp, n + 1).B
        base = check_standard_estimates(L.K, sp, ball0, nu=0.0, M=M, beta=1.0)
        loc = check_standard_estimates(Kt, sp, sp.omega(n + 1), nu=0.0, M=M, beta=od.alpha)
        rep.add(exact("localized kernel keeps finite standard constants", "Prop check assumptions",
                      np.isfinite(loc["A"]) and np.isfinite(loc["B"]), loc,
                      A=base["A"], B=base["B"], A_tilde=loc["A"], B_tilde=loc["B"]))
        canc = check_cancellation(Kt, sp, xb)
        rep.add(measured("cancellation at the center", "standard 3", max_shell_sum=canc))
        eps_grid = np.array([Rs, Rs / 2, Rs / 4, 0.5 * sp.min_distance()])
        conv = convergence_check(Kt, sp, xb, eps_grid, gamma=od.alpha)
        rep.add(measured("truncation limit", "h tilde C^gamma", **conv))
    _budget(rep, cfg, 6, "", time.perf_counter() - t0)
    return rep


def criterion_7(cfg, plan):
    rep = VerificationReport("criterion 7: fractional integral L^2 -> L^4")
    with timed(rep):
        sp = builtin_space(plan["fractional"])
        n = 1
        xb = central_point(sp, n)
        od = order_alpha_distance(sp, n + 1)
        spec = KernelSpec("riesz-model", nu=0.25)
        Rs = _star_radius(sp, n)
        ratios = []
        for i, R in enumerate((Rs, Rs / 2, Rs / 4)):
            L = localize(spec, sp, n, xb, R, od=od)
            S = np.flatnonzero(sp.row(xb) < R)
            est = estimate_operator_norm(L.Kt, sp, S, 2.0, 4.0, trials=cfg.trials_frac, seed=cfg.seed + i,
                                         jobs=cfg.jobs)
            ratios.append(est["monte_carlo_lower_bound"])
            f = np.abs(np.random.default_rng(cfg.seed + i).standard_normal(sp.N))
            pos = bool(np.all(apply_fractional(L.Kt, sp, f, S) >= 0))
            rep.add(exact(f"R={R:.6g}: positivity", "frac lp-lq", pos, {"note": "negative output"}))
            rep.add(exact(f"R={R:.6g}: ratio finite", "frac lp-lq",
                          np.isfinite(ratios[-1]), est, ratio=ratios[-1], points=int(S.size)))
        rep.add(exact(f"ratios within factor {cfg.factor:g}", "frac lp-lq", within_factor(ratios, cfg.factor),
                      {"ratios": ratios}, ratios=ratios, spread=spread(ratios)))
    return rep


def _symbols(sp, x0):
    r = sp.row(x0)
    bump = np.clip(1.0 - r / max(r.max(), 1e-300), 0.0, 1.0)
    return {"constant": np.ones(sp.N), "sqrt distance": np.sqrt(r), "hoelder bump": bump}


def criterion_8(cfg, plan):
    rep = VerificationReport("criterion 8: commutators")
    with timed(rep):
        sp = builtin_space(plan["singular"])
        n = 1
        xb = central_point(sp, n)
        od = order_alpha_distance(sp, n + 1)
        Rs = _star_radius(sp, n)
        rng = np.random.default_rng(cfg.seed)
        lin = localize(KernelSpec("antisymmetric-model"), sp, n, xb, Rs, od=od)
        pos = localize(KernelSpec("riesz-model", nu=0.0), sp, n, xb, Rs, od=od)
        zero_lin = zero_pos = True
        agree = 0.0
        for c in (1.0, -2.5, 3.7):
            for _ in range(5):
                f = rng.standard_normal(sp.N)
                a = np.full(sp.N, c)
                zero_lin &= bool(np.all(commutator_apply(lin.Kt, sp, a, f) == 0))
                zero_pos &= bool(np.all(positive_commutator_apply(pos.Kt, sp, a, f) == 0))
                g = rng.standard_normal(sp.N)
                d1 = commutator_apply(lin.Kt, sp, g, f)
                d2 = commutator_apply_direct(lin.Kt, sp, g, f)
                agree = max(agree, float(np.abs(d1 - d2).max() / max(np.abs(d2).max(), 1e-300)))
        rep.add(exact("C_a f = 0 for constant a", "Thm commutator", zero_lin, {"note": "nonzero output"}))
        rep.add(exact("positive commutator = 0 for constant a", "Thm comm pos", zero_pos,
                      {"note": "nonzero output"}))
        rep.add(exact("kernel form matches T(af) - aTf", "Thm commutator", agree <= 1e-10,
                      {"relative_error": agree}, relative_error=agree))
        a = np.sqrt(sp.row(xb))
        radii = [Rs, Rs / 2, Rs / 4, Rs / 8]
        for variant, spec in (("linear", KernelSpec("antisymmetric-model")),
                              ("positive", KernelSpec("riesz-model", nu=0.25))):
            sub, _, _ = vmo_smallness_experiment(sp, n, xb, spec, a, radii, variant=variant,
                                                 trials=cfg.trials_norm // 2, seed=cfg.seed, od=od,
                                                 jobs=cfg.jobs)
            rep.merge(sub, prefix=f"{variant}: ")
        for name in plan["structural"]:
            s2 = builtin_space(name)
            x0 = central_point(s2, 1)
            sub = verify_bmo_bridge(s2, 1, x0, _symbols(s2, x0), factor=cfg.factor)
            rep.merge(sub, prefix=f"{name}: ")
    return rep


def _random_family(sp, n, rng, size):
    om = sp.omega(n)
    c = level_constants(sp, n)
    r_n = maximal_radius(c.eps, c.B)
    xs = rng.choice(om, size=size)
    rs = r_n * (1.0 - rng.random(size))
    return [(int(x), float(r)) for x, r in zip(xs, rs)]


def criterion_9(cfg, plan):
    rep = VerificationReport("criterion 9: local maximal operator")
    rng = np.random.default_rng(cfg.seed)
    with timed(rep):
        names = list(plan["structural"]) + [plan["singular"]]
        for name in names:
            sp = builtin_space(name)
            n = 1
            om = sp.omega(n)
            battery = [rng.standard_normal(sp.N) for _ in range(cfg.battery_size)]
            dom_ok = sub_ok = hom_ok = True
            worst = 0.0
            Ms = [local_maximal(sp, n, f) for f in battery]
            for f, Mf in zip(battery, Ms):
                dom_ok &= bool(np.all(Mf[om] >= np.abs(f[om])))
                for lam in (2.0, -0.5, 0.25):
                    hom_ok &= bool(np.array_equal(local_maximal(sp, n, lam * f)[om], abs(lam) * Mf[om]))
            for i in range(0, len(battery) - 1, 2):
                Mfg = local_maximal(sp, n, battery[i] + battery[i + 1])[om]
                bound = Ms[i][om] + Ms[i + 1][om]
                excess = float(((Mfg - bound) / bound).max())
                worst = max(worst, excess)
                sub_ok &= excess <= 4 * np.finfo(float).eps
            rep.add(exact(f"{name}: Mf >= |f|", "Thm maximal", dom_ok, {"note": "domination fails"}))
            rep.add(exact(f"{name}: M(lambda f) = |lambda| Mf", "Thm maximal", hom_ok,
                          {"note": "homogeneity fails"}))
            rep.add(exact(f"{name}: M(f+g) <= Mf + Mg", "Thm maximal", sub_ok, {"excess": worst},
                          max_relative_excess=worst))
            vit_ok = True
            cs = []
            for _ in range(cfg.vitali_families):
                fam = _random_family(sp, n, rng, int(rng.integers(1, 12)))
                _, sub = vitali_select(sp, n, fam)
                vit_ok &= sub.ok
                cs.append(sub.get("mu(kept) / mu(union)").measured["c"])
                if not sub.ok:
                    rep.merge(sub, prefix=f"{name} vitali: ")
            rep.add(exact(f"{name}: Vitali disjoint and K-covering on {cfg.vitali_families} families",
                          "Vitali cover lemma", vit_ok, {"note": "see vitali records"}, min_c=min(cs)))
            rep.merge(maximal_checks(sp, n, battery[:10], factor=cfg.factor), prefix=f"{name}: ")
    return rep


def criterion_10(cfg, plan):
    rep = VerificationReport("criterion 10: quasisymmetric transfer")
    with timed(rep):
        raw_names = ["asym-raw", "wide-asym-raw-quick" if cfg.quick else "wide-asym-raw"]
        for raw_name in raw_names:
            raw = builtin_space(raw_name)
            sym = symmetrize(raw)
            rep.add(exact(f"{raw_name}: rho* symmetric", "rho*", bool(np.array_equal(sym.dist, sym.dist.T)),
                          {"note": "asymmetric entry"}))
            for n in range(1, raw.max_level + 1):
                ok, A, wit = check_sandwich(raw, sym, n)
                four = bool(np.all(sym.dist <= 4.0 * raw.dist))
                rep.add(exact(f"{raw_name} n={n}: rho <= rho* <= (1+A) rho, A=3", "rho*",
                              ok and A == 3.0 and four, wit, A=A))
        sub = run_criteria(cfg, criteria=tuple(range(1, 10)), symmetrized=True)
        for k, r in sub.items():
            rep.merge(r, prefix=f"sym C{k} ")
    return rep


def criterion_11(cfg, plan):
    rep = VerificationReport("criterion 11: oracle equivalence")
    rng = np.random.default_rng(cfg.seed)
    with timed(rep):
        net_ok = hold_ok = norm_ok = True
        worst_h = worst_n = 0.0
        for _ in range(cfg.oracle_instances):
            N = int(rng.integers(2, 65))
            pts = rng.random((N, 2))
            sp = FiniteSpace(np.ones(N), np.ones(N, dtype=int), "euclidean", coords=pts)
            D = sp.dist
            r = float(rng.uniform(0.02, 0.6))
            E = np.sort(rng.choice(N, size=int(rng.integers(1, N + 1)), replace=False))
            net = maximal_net(sp, E, r)
            net_ok &= oracles.is_maximal_net(D, E, net, r) and list(net) == oracles.greedy_net(D, E, r)
            f = rng.standard_normal(N)
            eta = float(rng.uniform(0.1, 1.0))
            h1 = holder_seminorm(sp, f, eta)
            h2 = oracles.holder_sweep(D, f, eta, range(N))
            e = abs(h1 - h2) / max(abs(h2), 1e-300)
            worst_h = max(worst_h, e)
            hold_ok &= e <= 1e-9
            w = rng.uniform(0.5, 2.0, N)
            spw = FiniteSpace(w, np.ones(N, dtype=int), "euclidean", coords=pts)
            K = rng.standard_normal((N, N))
            n1 = exact_p2_norm(K, spw, np.arange(N))
            n2 = oracles.p2_norm_dense(K, w, np.arange(N))
            e = abs(n1 - n2) / max(n2, 1e-300)
            worst_n = max(worst_n, e)
            norm_ok &= e <= 1e-9
        rep.add(exact("maximal_net matches the brute-force checker", "maximal collection", net_ok,
                      {"note": "mismatch"}))
        rep.add(exact("holder_seminorm matches the all-pairs sweep", "C^eta", hold_ok,
                      {"relative_error": worst_h}, relative_error=worst_h))
        rep.add(exact("p=2 norm matches the dense eigen-solve", "Theorem L^p C^eta", norm_ok,
                      {"relative_error": worst_n}, relative_error=worst_n))
    return rep


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11}


def run_criteria(cfg, criteria=None, symmetrized=False):
    plan = space_plan(cfg, symmetrized)
    out = {}
    for k in criteria or cfg.criteria:
        out[k] = CRITERIA[k](cfg, plan)
    return out


def run_suite(cfg):
    """All selected criteria, merged into one report; also returns the per-criterion reports."""
    parts = run_criteria(cfg)
    rep = VerificationReport("acceptance suite", inputs={"seed": cfg.seed, "quick": cfg.quick,
                                                         "criteria": list(cfg.criteria)})
    for k, r in parts.items():
        rep.merge(r, prefix=f"C{k} ")
        rep.wall_time += r.wall_time
    return rep, parts


def summary_lines(parts):
    return [f"criterion {k}: {'PASS' if r.ok else 'FAIL'} ({len(r.checks)} checks, {r.wall_time:.1f} s)"
            for k, r in parts.items()]
