"""Local BMO moduli, BMO over subsets, the bridge inequality and commutators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import build_envelope, envelope_context, verify_envelope
from .errors import InputError, RangeError
from .operators import apply_full, estimate_operator_norm, exact_p2_norm, localize
from .report import VerificationReport, exact, measured, timed, within_factor
from .space import level_constants


def _prefix_oscillations(u, w):
    """Mean oscillation of u over every prefix of an already sorted sample."""
    cw = np.cumsum(w)
    mean = np.cumsum(u * w) / cw
    dev = np.abs(u[None, :] - mean[:, None]) * w[None, :]
    L = len(u)
    dev[np.triu_indices(L, 1)] = 0.0
    osc = dev.sum(axis=1) / cw
    osc[0] = 0.0  # one atom; the rounded mean need not equal u
    return osc


def center_oscillation(space, u, x0, r, S=None):
    """max over t <= r of the mean oscillation on B(x0, t) (intersected with S)."""
    row = space.row(int(x0))
    u = np.asarray(u, dtype=float)
    w = space.weights
    if S is not None:
        row, u, w = row[S], u[S], w[S]
    order = np.argsort(row, kind="stable")
    srt = row[order]
    # balls B(x0, t) for t <= r are the prefixes {rho < t}; t ranges over distances and r
    ts = np.unique(np.concatenate([srt[(srt > 0) & (srt <= r)], [r]]))
    lens = np.unique(np.searchsorted(srt, ts, side="left"))
    lens = lens[lens > 0]
    if lens.size == 0:
        return 0.0
    osc = _prefix_oscillations(u[order][: lens[-1]], w[order][: lens[-1]])
    return float(osc[lens - 1].max())


def bmo_loc_modulus(space, u, n, r, check_range=True):
    """eta*(r): sup over centers in Omega_n and radii t <= r of the mean oscillation."""
    if not r > 0:
        raise RangeError("radius must be positive")
    eps = level_constants(space, n).eps
    if check_range and r > eps:
        raise RangeError(f"r={r!r} exceeds eps_{n}={eps!r}")
    u = np.asarray(u, dtype=float)
    if u.shape != (space.N,):
        raise InputError("u needs one value per point")
    return max(center_oscillation(space, u, x, r) for x in space.omega(n))


@dataclass
class BmoModulus:
    radii: np.ndarray
    values: np.ndarray

    @property
    def norm(self):
        return float(self.values.max()) if self.values.size else 0.0


def bmo_loc_curve(space, u, n, radii):
    radii = np.sort(np.asarray(radii, dtype=float))
    vals = np.array([bmo_loc_modulus(space, u, n, r) for r in radii])
    return BmoModulus(radii, np.maximum.accumulate(vals))


def bmo_subset_modulus(space, S, u, r=None):
    """Mean-oscillation sup over balls centred in S, intersected with S, radius <= r."""
    S = np.asarray(S, dtype=int)
    if S.size == 0:
        raise InputError("empty set")
    if S.size == 1:
        return 0.0
    r = np.inf if r is None else r
    return max(center_oscillation(space, u, x, r, S) for x in S)


def oscillation_about(space, u, B, tau=None):
    """(1/mu(B)) sum over B of |u - tau| mu; tau defaults to the mean over B."""
    B = np.asarray(B, dtype=int)
    w = space.weights[B]
    ub = np.asarray(u, dtype=float)[B]
    tau = float((ub * w).sum() / w.sum()) if tau is None else tau
    return float((np.abs(ub - tau) * w).sum() / w.sum())


def bridge_constant(lhs, rhs):
    if rhs == 0:
        return 0.0 if lhs == 0 else np.inf
    return lhs / rhs


def verify_bmo_bridge(space, n, xbar, symbols, radii=None, factor=4.0, ctx=None):
    """||u||_BMO(F) against eta* on (Omega_{n+2}, Omega_{n+3}) at radius c_n R, over an R grid.

    c_n is the measured envelope dilation j (F inside B(xbar, j R)), maximised over the grid.
    """
    ctx = envelope_context(space, n) if ctx is None else ctx
    radii = [ctx.R_n, ctx.R_n / 2, ctx.R_n / 4] if radii is None else list(radii)
    rep = VerificationReport("bmo bridge", inputs={"space": space.name, "n": n, "center": int(xbar)})
    with timed(rep):
        envs = []
        for R in radii:
            env = build_envelope(space, n, xbar, R, ctx)
            verify_envelope(env, space)
            envs.append(env)
        c_n = max(e.measured["j"] for e in envs)
        eps2 = level_constants(space, n + 2).eps
        rep.add(measured("envelope dilation", "F in B(xbar, j_n R)", c_n=c_n))
        for name, u in symbols.items():
            cs = []
            for env in envs:
                lhs = bmo_subset_modulus(space, env.F, u)
                rhs = bmo_loc_modulus(space, u, n + 2, min(c_n * env.R, eps2))
                c = bridge_constant(lhs, rhs)
                cs.append(c)
                rep.add(exact(f"{name} R={env.R:.6g} bridge", "BMO eta", np.isfinite(c),
                              {"lhs": lhs, "rhs": rhs}, lhs=lhs, rhs=rhs, c=c))
            rep.add(exact(f"{name} bridge constant stable within factor {factor:g}", "BMO eta",
                          within_factor(cs, factor), {"values": cs}, values=cs))
    return rep


# -- commutators ------------------------------------------------------------------


def commutator_apply(Kt, space, a, f):
    """C_a f = T(a f) - a T f, summed as K(x,y) (a(y) - a(x)) f(y) mu(y) so that it
    vanishes exactly for constant a."""
    return apply_full(commutator_kernel(Kt, a), space, f)


def commutator_apply_direct(Kt, space, a, f):
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)
    return apply_full(Kt, space, a * f) - a * apply_full(Kt, space, f)


def commutator_kernel(Kt, a):
    a = np.asarray(a, dtype=float)
    return np.asarray(Kt) * (a[None, :] - a[:, None])


def positive_commutator_kernel(Kt, a):
    Kt = np.asarray(Kt)
    if np.any(Kt < 0):
        raise InputError("positive commutator needs a nonnegative kernel")
    a = np.asarray(a, dtype=float)
    return Kt * np.abs(a[:, None] - a[None, :])


def positive_commutator_apply(Kt, space, a, f):
    """sum over y of Kt(x,y) |a(x) - a(y)| f(y) mu(y)."""
    return apply_full(positive_commutator_kernel(Kt, a), space, f)


def vmo_smallness_experiment(space, n, xbar, spec, a, radii, variant="linear", c_n=1.0, trials=32,
                             seed=0, od=None, jobs=1):
    """Commutator norms on B(xbar, r) over decreasing radii against c eta*(c_n r).

    The domination constant is the largest observed norm(r) / eta*(c_n r).
    """
    radii = list(radii)
    if any(b >= a_ for a_, b in zip(radii, radii[1:])):
        raise InputError("radii must be strictly decreasing")
    eps2 = level_constants(space, n + 2).eps
    rep = VerificationReport(f"vmo smallness ({variant})",
                             inputs={"space": space.name, "n": n, "center": int(xbar), "radii": radii,
                                     "c_n": c_n})
    with timed(rep):
        norms, etas = [], []
        for i, r in enumerate(radii):
            L = localize(spec, space, n, xbar, r, od=od)
            S = np.flatnonzero(space.row(xbar) < r)
            if variant == "linear":
                C = commutator_kernel(L.Kt, a)
            else:
                C = positive_commutator_kernel(L.Kt, a)
            est = estimate_operator_norm(C, space, S, 2, 2, trials=trials, seed=seed + i, jobs=jobs)
            nr = est["exact_p2_norm"]
            eta = bmo_loc_modulus(space, a, n + 2, min(c_n * r, eps2))
            norms.append(nr)
            etas.append(eta)
            rep.add(exact(f"r={r:.6g} monte carlo below exact", "comm last",
                          est["monte_carlo_lower_bound"] <= nr * (1 + 1e-9),
                          {"mc": est["monte_carlo_lower_bound"], "exact": nr}))
        ratios = [bridge_constant(x, e) for x, e in zip(norms, etas)]
        c = max(ratios)
        dominated = np.isfinite(c) and all(x <= c * e * (1 + 1e-12) for x, e in zip(norms, etas))
        rep.add(exact("norm(r) <= c eta*(c_n r)", "comm last", dominated,
                      {"norms": norms, "eta": etas}, c=c, norms=norms, eta=etas))
        mono = all(b <= 2 * a_ for a_, b in zip(norms, norms[1:]))
        rep.add(measured("norm sequence nonincreasing up to factor 2", "Thm commutator",
                         nonincreasing_within_2=mono, norms=norms))
    return rep, norms, etas
