"""Local maximal operator and the Vitali covering selection."""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .report import VerificationReport, exact, measured, timed, within_factor
from .space import level_constants


def maximal_radius(eps, B):
    """r_n = 2 eps_n / (2 B_n + 3 B_n^2)."""
    return 2.0 * eps / (2.0 * B + 3.0 * B * B)


def vitali_factor(B):
    return 2.0 * B + 3.0 * B * B


def local_maximal(space, n, f, r_max=None):
    """Mf(x) = max over radii r <= r_n of the |f|-average over B(x, r), for x in Omega_n.

    Points outside Omega_n get NaN.
    """
    c = level_constants(space, n)
    r_n = maximal_radius(c.eps, c.B) if r_max is None else r_max
    f = np.abs(np.asarray(f, dtype=float))
    if f.shape != (space.N,):
        raise InputError("f needs one value per point")
    out = np.full(space.N, np.nan)
    w = space.weights
    for x in space.omega(n):
        row = space.row(int(x))
        order = np.argsort(row, kind="stable")
        srt = row[order]
        ts = np.concatenate([srt[(srt > 0) & (srt <= r_n)], [r_n]])
        lens = np.unique(np.searchsorted(srt, ts, side="left"))
        lens = lens[lens > 0]
        cm = np.cumsum(f[order] * w[order])
        cw = np.cumsum(w[order])
        avg = cm[lens - 1] / cw[lens - 1]
        if lens[0] == 1:
            avg[0] = f[x]  # the singleton ball, without rounding through the weight
        out[x] = float(avg.max())
    return out


def vitali_select(space, n, family, check=True):
    """Greedy disjoint subfamily by decreasing radius (ties: lowest center id).

    Returns (kept, report); the report checks disjointness, K-dilation covering
    and measures c = sum mu(kept) / mu(union).
    """
    c = level_constants(space, n)
    r_n = maximal_radius(c.eps, c.B)
    K = vitali_factor(c.B)
    fam = [(int(x), float(r)) for x, r in family]
    if not fam:
        raise InputError("empty ball family")
    if check:
        for x, r in fam:
            if space.levels[space._pid(x)] > n:
                raise InputError(f"center {x} is not in Omega_{n}")
            if not 0 < r <= r_n:
                raise InputError(f"radius {r} is outside (0, r_n = {r_n}]")
    masks = [space.row(x) < r for x, r in fam]
    order = sorted(range(len(fam)), key=lambda i: (-fam[i][1], fam[i][0], i))
    kept = []
    taken = np.zeros(space.N, dtype=bool)
    for i in order:
        if not (masks[i] & taken).any():
            kept.append(i)
            taken |= masks[i]
    union = np.any(masks, axis=0)
    cover = np.zeros(space.N, dtype=bool)
    for i in kept:
        x, r = fam[i]
        cover |= space.row(x) < K * r
    miss = np.flatnonzero(union & ~cover)
    pair = None
    for a in range(len(kept)):
        for b in range(a + 1, len(kept)):
            if (masks[kept[a]] & masks[kept[b]]).any() and pair is None:
                pair = (fam[kept[a]], fam[kept[b]])
    rep = VerificationReport("vitali", inputs={"n": n, "K": K, "r_n": r_n, "family": fam})
    rep.add(exact("kept balls disjoint", "Vitali cover lemma", pair is None, {"balls": pair}))
    rep.add(exact("K-dilations cover the union", "Vitali cover lemma", miss.size == 0,
                  {"x": int(miss[0])} if miss.size else None))
    ratio = float(sum(space.measure(masks[i]) for i in kept) / space.measure(union))
    rep.add(measured("mu(kept) / mu(union)", "Vitali cover lemma", c=ratio))
    return [fam[i] for i in kept], rep


def weak_constant(Mf, f, w, om, dom):
    """sup over t > 0 of t mu{x in Omega_n : Mf > t} / ||f||_{L^1(Omega_{n+1})}."""
    n1 = float((np.abs(f[dom]) * w[dom]).sum())
    g = Mf[om]
    if n1 == 0:
        return 0.0
    vals = np.unique(g[g > 0])
    if vals.size == 0:
        return 0.0
    meas = np.array([w[om][g >= v].sum() for v in vals])
    return float((vals * meas).max() / n1)


def maximal_checks(space, n, battery, p_list=(1.5, 2.0, 4.0), factor=4.0):
    """Finiteness, the empirical weak (1,1) constant and L^p ratios over a battery."""
    if not battery:
        raise InputError("battery is empty")
    om = space.omega(n)
    dom = space.omega(n + 1)
    w = space.weights
    rep = VerificationReport("maximal operator", inputs={"space": space.name, "n": n, "p": list(p_list),
                                                         "battery_size": len(battery)})
    with timed(rep):
        weak, ratios = [], {p: [] for p in p_list}
        finite = True
        for f in battery:
            f = np.asarray(f, dtype=float)
            Mf = local_maximal(space, n, f)
            finite &= bool(np.all(np.isfinite(Mf[om])))
            weak.append(weak_constant(Mf, f, w, om, dom))
            for p in p_list:
                num = float((Mf[om] ** p * w[om]).sum() ** (1 / p))
                den = float((np.abs(f[dom]) ** p * w[dom]).sum() ** (1 / p))
                ratios[p].append(num / den if den > 0 else 0.0)
        rep.add(exact("Mf finite", "Thm maximal (a)", finite, {"note": "non-finite value"}))
        nz = [v for v in weak if v > 0]
        rep.add(exact(f"weak constant stable within factor {factor:g}", "Thm maximal (b)",
                      within_factor(nz, factor) if nz else True, {"values": nz}, max=max(weak)))
        for p in p_list:
            rep.add(exact(f"L^{p:g} ratio finite", "Thm maximal (c)", bool(np.all(np.isfinite(ratios[p]))),
                          None, max=max(ratios[p])))
    return rep
