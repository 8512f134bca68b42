"""Command-line front end: ``locahal <group> <action> [flags]``.

Exit codes: 0 when every exact check passes, 2 on a failed exact check or an
axiom violation, 1 on bad input or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import cutoff, cutoff_checks, order_alpha_distance
from .bmo import bmo_loc_curve, commutator_apply, positive_commutator_apply
from .dyadic import (build_envelope, build_system, envelope_context, system_from_dict, verify_envelope,
                     verify_properties)
from .errors import AxiomViolation, ConfigurationError, ConstructionError, InputError, RangeError
from .maximal import local_maximal, maximal_checks, vitali_select
from .operators import (KernelSpec, apply_truncated, estimate_operator_norm, kernel_matrix, localize)
from .report import VerificationReport, digest, exact, measured
from .space import check_sandwich, generate, level_constants, load_space, save_space, symmetrize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- io helpers -------------------------------------------------------------------------


def read_function(path, N):
    """CSV with rows id,value (an optional header is skipped); missing ids are zero."""
    f = np.zeros(N)
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() in ("id", ""):
                    continue
                i = int(row[0])
                if not 0 <= i < N:
                    raise InputError(f"{path}: id {i} out of range")
                f[i] = float(row[1])
    except (OSError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return f


def write_function(path, values, header="value"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", header])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_kernel(path):
    return KernelSpec.from_dict(read_json(path))


def _finish(rep, args, inputs=None):
    if inputs:
        rep.inputs.update(inputs)
    path = getattr(args, "report", None)
    if path:
        with open(path, "w") as fh:
            fh.write(rep.to_json(timestamps=not args.no_timestamps))
            fh.write("\n")
    for c in rep.failures():
        print(f"FAIL {c.name} [{c.anchor}] witness={json.dumps(c.witness, default=str)}", file=sys.stderr)
    return 0 if rep.ok else 2


def _file_digest(path):
    with open(path, "rb") as fh:
        return digest(fh.read())


def _jobs(args):
    if getattr(args, "jobs", None):
        return int(args.jobs)
    env = os.environ.get("LOCAHAL_JOBS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError as exc:
        raise InputError(f"LOCAHAL_JOBS must be an integer, got {env!r}") from exc


# -- commands -------------------------------------------------------------------------


def cmd_space_generate(args):
    params = {k: v for k, v in (("dim", args.dim), ("side", args.side), ("levels", args.levels),
                                ("skew", args.skew), ("depth", args.depth), ("branching", args.branching),
                                ("path", args.path)) if v is not None}
    sp = generate(args.kind, **params)
    save_space(sp, args.out)
    return 0


def cmd_space_validate(args):
    sp = load_space(args.space)
    rep = VerificationReport("space validation", inputs={"space": _file_digest(args.space), "N": sp.N})
    rep.add(exact("rho(x,y) = 0 iff x = y", "(H1)(a)", True))
    nested = all(set(sp.omega(n)) <= set(sp.omega(n + 1)) for n in range(1, sp.max_level))
    rep.add(exact("levels nested", "(Hp 1)", nested))
    for n in range(1, sp.max_level + 1):
        c = level_constants(sp, n)
        rep.add(measured(f"level {n} constants", "(Hp 2)-(Hp 4)", **c.to_dict()))
    if not sp.symmetric:
        sym = symmetrize(sp)
        for n in range(1, sp.max_level + 1):
            ok, A, wit = check_sandwich(sp, sym, n)
            rep.add(exact(f"level {n}: rho <= rho* <= (1+A) rho", "rho*", ok, wit, A=A))
    return _finish(rep, args)


def cmd_space_constants(args):
    sp = load_space(args.space)
    c = level_constants(sp, args.n)
    doc = c.to_dict()
    text = json.dumps(doc, indent=2, sort_keys=True, default=str)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_space_symmetrize(args):
    sp = load_space(args.space)
    save_space(symmetrize(sp), args.out)
    return 0


def cmd_dyadic_build(args):
    sp = load_space(args.space)
    system = build_system(sp, args.n, delta=args.delta, seed=args.seed)
    with open(args.out, "w") as fh:
        json.dump(system.to_dict(), fh)
    return 0


def cmd_dyadic_verify(args):
    system = system_from_dict(read_json(args.system))
    rep = verify_properties(system)
    return _finish(rep, args, {"system": _file_digest(args.system)})


def cmd_envelope_build(args):
    sp = load_space(args.space)
    ctx = envelope_context(sp, args.n, seed=args.seed)
    env = build_envelope(sp, args.n, args.center, args.radius, ctx)
    rep = verify_envelope(env, sp)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(env.to_dict(), fh)
    return _finish(rep, args, {"space": _file_digest(args.space)})


def cmd_analysis_msdist(args):
    sp = load_space(args.space)
    od = order_alpha_distance(sp, args.n, alpha_one=args.alpha_one)
    doc = od.to_dict()
    doc["order_constant"] = od.order_constant
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
    return 0


def cmd_analysis_cutoff(args):
    sp = load_space(args.space)
    od = order_alpha_distance(sp, args.n)
    cf = cutoff(sp, od, args.center, args.radius)
    inner_ok, outer_ok, range_ok = cutoff_checks(sp, cf)
    rep = VerificationReport("cutoff", inputs={"space": _file_digest(args.space), "center": args.center,
                                               "r": args.radius})
    rep.add(exact("phi = 1 on the inner ball", "Prop cutoff", inner_ok))
    rep.add(exact("phi = 0 off the outer ball", "Prop cutoff", outer_ok))
    rep.add(exact("0 <= phi <= 1", "Prop cutoff", range_ok))
    rep.add(measured("Hoelder constant", "Prop cutoff", c=cf.holder_constant, alpha=cf.alpha))
    if args.out:
        write_function(args.out, cf.values, "phi")
    return _finish(rep, args)


def cmd_op_apply(args):
    sp = load_space(args.space)
    spec = load_kernel(args.kernel)
    f = read_function(args.f, sp.N)
    K = kernel_matrix(spec, sp)
    g = apply_truncated(K, sp, f, args.eps)
    rep = VerificationReport("operator apply", inputs={"space": _file_digest(args.space),
                                                       "kernel": _file_digest(args.kernel), "eps": args.eps})
    rep.add(exact("output finite", "Theorem L^p C^eta", bool(np.all(np.isfinite(g)))))
    rep.add(measured("output sup norm", "Theorem L^p C^eta", sup=float(np.abs(g).max())))
    if args.out:
        write_function(args.out, g)
    return _finish(rep, args)


def cmd_op_norm(args):
    sp = load_space(args.space)
    spec = load_kernel(args.kernel)
    L = localize(spec, sp, args.n, args.center, args.radius, c=args.c)
    S = np.flatnonzero(sp.row(L.center) < args.radius)
    est = estimate_operator_norm(L.Kt, sp, S, args.p, args.q, trials=args.trials, seed=args.seed,
                                 jobs=_jobs(args))
    rep = VerificationReport("operator norm", inputs={"space": _file_digest(args.space),
                                                      "kernel": _file_digest(args.kernel), "R": args.radius,
                                                      "p": args.p, "q": args.q, "seed": args.seed})
    ok = bool(np.isfinite(est["monte_carlo_lower_bound"]))
    if "exact_p2_norm" in est:
        ok &= est["monte_carlo_lower_bound"] <= est["exact_p2_norm"] * (1 + 1e-9)
    rep.add(exact("norm estimate finite and consistent", "Theorem L^p C^eta", ok, est, **est))
    return _finish(rep, args)


def cmd_bmo_modulus(args):
    sp = load_space(args.space)
    u = read_function(args.u, sp.N)
    radii = [args.r / 2**i for i in range(args.steps)][::-1]
    curve = bmo_loc_curve(sp, u, args.n, radii)
    rep = VerificationReport("bmo modulus", inputs={"space": _file_digest(args.space), "n": args.n, "r": args.r})
    rep.add(exact("eta* finite", "BMO eta", bool(np.all(np.isfinite(curve.values)))))
    rep.add(measured("eta* table", "BMO eta", radii=curve.radii, eta=curve.values))
    if args.csv:
        write_table(args.csv, ["r", "eta"], [[repr(float(r)), repr(float(v))]
                                             for r, v in zip(curve.radii, curve.values)])
    return _finish(rep, args)


def cmd_bmo_commutator(args):
    sp = load_space(args.space)
    spec = load_kernel(args.kernel)
    a = read_function(args.a, sp.N)
    f = read_function(args.f, sp.N)
    K = kernel_matrix(spec, sp)
    g = positive_commutator_apply(K, sp, a, f) if args.positive else commutator_apply(K, sp, a, f)
    rep = VerificationReport("commutator", inputs={"space": _file_digest(args.space), "positive": args.positive})
    rep.add(exact("output finite", "Thm commutator", bool(np.all(np.isfinite(g)))))
    rep.add(measured("output sup norm", "Thm commutator", sup=float(np.abs(g).max())))
    if args.out:
        write_function(args.out, g)
    return _finish(rep, args)


def cmd_maximal_run(args):
    sp = load_space(args.space)
    f = read_function(args.f, sp.N)
    rep = maximal_checks(sp, args.n, [f])
    om = sp.omega(args.n)
    Mf = local_maximal(sp, args.n, f)
    rep.add(exact("Mf >= |f| on Omega_n", "Thm maximal", bool(np.all(Mf[om] >= np.abs(f[om])))))
    if args.out:
        write_function(args.out, np.where(np.isnan(Mf), 0.0, Mf), "Mf")
    return _finish(rep, args, {"space": _file_digest(args.space)})


def cmd_maximal_vitali(args):
    sp = load_space(args.space)
    doc = read_json(args.family)
    try:
        fam = [(int(b["center"]), float(b["radius"])) for b in (doc["balls"] if isinstance(doc, dict) else doc)]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.family}: expected a list of {{center, radius}} ({exc})") from exc
    kept, rep = vitali_select(sp, args.n, fam)
    rep.add(measured("kept balls", "Vitali cover lemma", kept=[list(b) for b in kept]))
    return _finish(rep, args)


def cmd_suite(args):
    from .suite import SuiteConfig, run_suite, summary_lines

    criteria = tuple(range(1, 12))
    if args.criteria:
        try:
            criteria = tuple(int(k) for k in args.criteria.split(","))
        except ValueError as exc:
            raise InputError(f"bad --criteria {args.criteria!r}") from exc
        if not set(criteria) <= set(range(1, 12)):
            raise InputError("criteria are numbered 1 to 11")
    kw = dict(seed=args.seed, jobs=_jobs(args), criteria=criteria)
    cfg = SuiteConfig.quick_mode(**kw) if args.quick else SuiteConfig(**kw)
    rep, parts = run_suite(cfg)
    for line in summary_lines(parts):
        print(line)
    if args.csv_dir:
        os.makedirs(args.csv_dir, exist_ok=True)
        rows = []
        for c in rep.checks:
            for key, val in c.measured.items():
                if key == "wall_time" and args.no_timestamps:
                    continue
                vals = val if isinstance(val, (list, tuple, np.ndarray)) else [val]
                for i, v in enumerate(vals):
                    if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool):
                        rows.append([c.name, key, i, repr(float(v))])
        write_table(os.path.join(args.csv_dir, "measured.csv"), ["check", "quantity", "index", "value"], rows)
    args.report = args.report or "suite_report.json"
    return _finish(rep, args)


# -- parser ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="locahal", description="Local harmonic analysis on finite quasi-metric spaces.")
    p.add_argument("--version", action="version", version=f"locahal {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def common(q, report=True):
        if report:
            q.add_argument("--report", help="write the JSON report here")
        q.add_argument("--no-timestamps", action="store_true", help="omit wall times from reports")

    g = groups.add_parser("space").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("generate")
    q.add_argument("--kind", required=True)
    for name, typ in (("dim", int), ("side", int), ("levels", int), ("skew", float), ("depth", int),
                      ("branching", int), ("path", str)):
        q.add_argument(f"--{name}", type=typ)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_space_generate)
    q = g.add_parser("validate")
    q.add_argument("--space", required=True)
    common(q)
    q.set_defaults(func=cmd_space_validate)
    q = g.add_parser("constants")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--out")
    q.set_defaults(func=cmd_space_constants)
    q = g.add_parser("symmetrize")
    q.add_argument("--space", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_space_symmetrize)

    g = groups.add_parser("dyadic").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("build")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--delta", type=float)
    q.add_argument("--seed", type=int)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_dyadic_build)
    q = g.add_parser("verify")
    q.add_argument("--system", required=True)
    common(q)
    q.set_defaults(func=cmd_dyadic_verify)

    g = groups.add_parser("envelope").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("build")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--center", type=int, required=True)
    q.add_argument("--radius", type=float, required=True)
    q.add_argument("--seed", type=int)
    q.add_argument("--out")
    common(q)
    q.set_defaults(func=cmd_envelope_build)

    g = groups.add_parser("analysis").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("msdist")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--alpha-one", action="store_true")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analysis_msdist)
    q = g.add_parser("cutoff")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--center", type=int, required=True)
    q.add_argument("--radius", type=float, required=True)
    q.add_argument("--out")
    common(q)
    q.set_defaults(func=cmd_analysis_cutoff)

    g = groups.add_parser("op").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("apply")
    q.add_argument("--space", required=True)
    q.add_argument("--kernel", required=True)
    q.add_argument("--f", required=True)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--out")
    common(q)
    q.set_defaults(func=cmd_op_apply)
    q = g.add_parser("norm")
    q.add_argument("--space", required=True)
    q.add_argument("--kernel", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--center", type=int, required=True)
    q.add_argument("--radius", type=float, required=True)
    q.add_argument("--c", type=float)
    q.add_argument("--p", type=float, default=2.0)
    q.add_argument("--q", type=float)
    q.add_argument("--trials", type=int, default=64)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--jobs", type=int)
    common(q)
    q.set_defaults(func=cmd_op_norm)

    g = groups.add_parser("bmo").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("modulus")
    q.add_argument("--space", required=True)
    q.add_argument("--u", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--r", type=float, required=True)
    q.add_argument("--steps", type=int, default=4, help="radii r, r/2, ... (this many)")
    q.add_argument("--csv")
    common(q)
    q.set_defaults(func=cmd_bmo_modulus)
    q = g.add_parser("commutator")
    q.add_argument("--space", required=True)
    q.add_argument("--kernel", required=True)
    q.add_argument("--a", required=True)
    q.add_argument("--f", required=True)
    q.add_argument("--positive", action="store_true")
    q.add_argument("--out")
    common(q)
    q.set_defaults(func=cmd_bmo_commutator)

    g = groups.add_parser("maximal").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = g.add_parser("run")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--f", required=True)
    q.add_argument("--out")
    common(q)
    q.set_defaults(func=cmd_maximal_run)
    q = g.add_parser("vitali")
    q.add_argument("--space", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--family", required=True)
    common(q)
    q.set_defaults(func=cmd_maximal_vitali)

    q = groups.add_parser("suite")
    q.add_argument("--quick", action="store_true")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--jobs", type=int)
    q.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,6")
    q.add_argument("--csv-dir")
    common(q)
    q.set_defaults(func=cmd_suite)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except AxiomViolation as exc:
        print(f"axiom violation {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness: {json.dumps(exc.witness, default=str)}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"inequality {exc.inequality} fails: {exc}", file=sys.stderr)
        return 2
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return 2
    except (InputError, RangeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
