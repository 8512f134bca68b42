"""Local dyadic cubes: nets, tree, cubes, property verification and envelopes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ConstructionError, InputError, RangeError
from .report import VerificationReport, exact, measured, timed, within_factor
from .space import FiniteSpace, doubling_ratio, level_constants, space_from_dict


@dataclass(frozen=True)
class DeltaParams:
    delta: float
    a0: float
    K_max: int
    n: int
    c1: float
    B_n: float
    inequalities: tuple = ()

    def to_dict(self):
        return {"delta": self.delta, "a0": self.a0, "K_max": self.K_max, "n": self.n, "c1": self.c1,
                "B_n": self.B_n}


def delta_inequalities(delta, a0, eps_n, eps_n1, B_n, B_n1, B_n2):
    """Every constraint on delta used by the cube construction.

    Returns (label, lhs, rhs, strict, ok) tuples; a constraint holds when
    lhs < rhs (strict) or lhs <= rhs.
    """
    c1 = 7.0 * B_n1**4
    rows = [
        ("delta 1", delta, 2 * eps_n, True),
        ("delta 2", delta**2, 2 * eps_n1, True),
        ("delta 3", B_n2 * (delta**2 + delta), 2 * eps_n, False),
        ("delta 5", delta, 1 / (2 * B_n2), True),
        ("delta 4", delta, eps_n / B_n2, True),
        ("azero 1", a0 * delta, eps_n1, True),
        ("delta 6", delta * (2 * B_n2**2 + a0 * B_n2), 2 * eps_n, True),
        ("delta 5'", delta, 1 / (2 * B_n), True),
        ("azero 2", delta + a0, (2 * B_n1) ** -3, True),
        ("delta 9", 2 * B_n1 * c1 * delta, 1.0, False),
        ("delta 8", c1 * delta, 1.0, True),
        ("delta 10", (2 * B_n1 + 1) * a0 * delta, 2 * eps_n, False),
    ]
    return tuple((lab, lhs, rhs, strict, bool(lhs < rhs if strict else lhs <= rhs))
                 for lab, lhs, rhs, strict in rows)


def remark_delta(eps_n, eps_n1, B_n1, B_n2):
    return 0.5 * min(eps_n1, eps_n / (4 * B_n2**2), 1 / (14 * B_n1**5))


def choose_delta(constants, min_distance=None, delta=None):
    """DeltaParams for level n from LevelConstants of levels n, n+1, n+2.

    ``delta`` overrides the default formula; it is validated all the same.
    """
    if len(constants) < 3:
        raise InputError("constants for levels n, n+1, n+2 are required")
    cn, cn1, cn2 = constants[:3]
    if delta is None:
        delta = remark_delta(cn.eps, cn1.eps, cn1.B, cn2.B)
    if not 0 < delta < 1:
        raise ConfigurationError("delta", f"delta={delta!r} is not in (0,1)")
    a0 = delta
    ineq = delta_inequalities(delta, a0, cn.eps, cn1.eps, cn.B, cn1.B, cn2.B)
    for lab, lhs, rhs, strict, ok in ineq:
        if not ok:
            op = "<" if strict else "<="
            raise ConfigurationError(lab, f"{lhs!r} {op} {rhs!r} fails for delta={delta!r}")
    K = 1
    if min_distance is not None and np.isfinite(min_distance):
        while delta**K >= min_distance:
            K += 1
    return DeltaParams(delta=delta, a0=a0, K_max=K, n=cn.n, c1=7.0 * cn1.B**4, B_n=cn.B,
                       inequalities=ineq)


def maximal_net(space, E, r, order=None):
    """Greedy r-separated maximal subset of E, scanned in ascending id (or ``order``)."""
    E = np.asarray(E, dtype=int)
    if E.size == 0:
        raise InputError("net of an empty set")
    seq = np.sort(E) if order is None else np.asarray(order, dtype=int)
    D = space.dist
    chosen = []
    for p in seq:
        if chosen:
            c = np.asarray(chosen)
            if np.any(D[c, p] < r) or np.any(D[p, c] < r):
                continue
        chosen.append(int(p))
    return np.asarray(chosen, dtype=int)


@dataclass(frozen=True)
class NetLayer:
    k: int
    centers: np.ndarray
    layer_set: np.ndarray


def _ordering(space, E, rng):
    if rng is None:
        return None
    return np.asarray(E)[rng.permutation(len(E))]


def build_layers(space, params, n, seed=None):
    rng = None if seed is None else np.random.default_rng(seed)
    E = space.omega(n)
    outer = space.omega_mask(n + 1)
    layers = []
    for k in range(1, params.K_max + 1):
        if not outer[E].all():
            bad = int(E[~outer[E]][0])
            raise ConstructionError(
                f"E_{k} escapes Omega_{n + 1} at point {bad}; re-examine (delta 1)-(delta 4)")
        r = params.delta**k
        centers = maximal_net(space, E, r, _ordering(space, E, rng))
        layers.append(NetLayer(k, centers, E))
        E = np.flatnonzero((space.dist[centers] < r).any(axis=0))
    return layers


def build_tree(space, layers, delta, B_n):
    """parents[i][alpha] = index of the parent among the scale-i centers (entry 0 is empty).

    The parent is the nearest coarser center, ties broken by lowest id; (T3) needs it
    within delta^(k-1), which the layer recursion guarantees.
    """
    parents = [np.zeros(0, dtype=int)]
    for i in range(1, len(layers)):
        k = layers[i].k
        up = layers[i - 1].centers
        D = space.dist[np.ix_(layers[i].centers, up)]
        best = D.min(axis=1, keepdims=True)
        ids = np.where(D == best, up[None, :], np.iinfo(np.int64).max).min(axis=1)
        pos = {int(c): j for j, c in enumerate(up)}
        par = np.array([pos[int(c)] for c in ids], dtype=int)
        far = np.flatnonzero(best[:, 0] >= delta ** (k - 1))
        if far.size:
            raise ConstructionError(f"no admissible parent for (k={k}, alpha={int(far[0])})")
        parents.append(par)
    return parents


def tree_checks(space, layers, parents, delta, B_n):
    """(T1)-(T4) as exact checks."""
    out = []
    t1 = all(len(parents[i]) == len(layers[i].centers) for i in range(1, len(layers)))
    out.append(exact("tree T1", "(T1)", t1, {"note": "parent count mismatch"}))
    t2 = all(np.all((p >= 0) & (p < len(layers[i - 1].centers))) for i, p in enumerate(parents) if i)
    out.append(exact("tree T2", "(T2)", t2, {"note": "parent index out of range"}))
    t3_wit = t4_wit = None
    for i in range(1, len(layers)):
        k = layers[i].k
        low, up = layers[i].centers, layers[i - 1].centers
        D = space.dist[np.ix_(low, up)]
        dp = D[np.arange(len(low)), parents[i]]
        bad = np.flatnonzero(dp >= delta ** (k - 1))
        if bad.size and t3_wit is None:
            t3_wit = {"k": k, "alpha": int(bad[0]), "rho": float(dp[bad[0]])}
        forced = D < delta ** (k - 1) / (2 * B_n)
        forced[np.arange(len(low)), parents[i]] = False
        if forced.any() and t4_wit is None:
            a, b = map(int, np.argwhere(forced)[0])
            t4_wit = {"k": k, "alpha": a, "beta": b, "parent": int(parents[i][a])}
    out.append(exact("tree T3", "(T3)", t3_wit is None, t3_wit))
    out.append(exact("tree T4", "(T4)", t4_wit is None, t4_wit))
    return out


@dataclass
class DyadicSystem:
    space: FiniteSpace
    params: DeltaParams
    layers: list
    parents: list
    cubes: list  # per scale, boolean (|I_k|, N) membership
    seed: int | None = None
    measured: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.params.n

    @property
    def K_max(self):
        return self.params.K_max

    def centers(self, k):
        if k <= self.K_max:
            return self.layers[k - 1].centers
        return self.cube_masks(k).nonzero()[1]

    def cube_masks(self, k):
        """Membership masks at scale k; beyond K_max the cubes are the singletons of E_K."""
        if k < 1:
            raise RangeError("scales are positive integers")
        if k <= self.K_max:
            return self.cubes[k - 1]
        last = self.layers[-1].centers
        m = np.zeros((len(last), self.space.N), dtype=bool)
        m[np.arange(len(last)), last] = True
        return m

    def cube(self, k, alpha):
        return np.flatnonzero(self.cube_masks(k)[alpha])

    def locate(self, x, k):
        hit = np.flatnonzero(self.cube_masks(k)[:, x])
        return int(hit[0]) if hit.size else None

    def center(self, k, alpha):
        return int(self.centers(k)[alpha])

    def to_dict(self):
        return {
            "space": self.space.to_dict(),
            "params": self.params.to_dict(),
            "seed": self.seed,
            "layers": [{"k": L.k, "centers": L.centers.tolist(), "E": L.layer_set.tolist()}
                       for L in self.layers],
            "parents": [p.tolist() for p in self.parents],
            "cubes": [[np.flatnonzero(row).tolist() for row in m] for m in self.cubes],
            "measured": self.measured,
        }


def build_cubes(space, layers, parents, params):
    """Q_alpha^k = union of B(z_beta^l, a0 delta^l) over descendants (l, beta) <= (k, alpha)."""
    N = space.N
    masks = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        k = layers[i].k
        c = layers[i].centers
        m = space.dist[c] < params.a0 * params.delta**k
        if i + 1 < len(layers):
            child = masks[i + 1]
            np.logical_or.at(m, parents[i + 1], child)
        masks[i] = m
    return masks


def build_system(space, n, delta=None, seed=None):
    consts = [level_constants(space, m) for m in (n, n + 1, n + 2)]
    params = choose_delta(consts, space.min_distance(space.omega(n + 1)), delta)
    layers = build_layers(space, params, n, seed)
    parents = build_tree(space, layers, params.delta, params.B_n)
    cubes = build_cubes(space, layers, parents, params)
    return DyadicSystem(space, params, layers, parents, cubes, seed)


def system_from_dict(doc):
    space = space_from_dict(doc["space"])
    p = doc["params"]
    consts = [level_constants(space, m) for m in (p["n"], p["n"] + 1, p["n"] + 2)]
    params = choose_delta(consts, space.min_distance(space.omega(p["n"] + 1)), p["delta"])
    if params.K_max != p["K_max"]:
        raise InputError("stored K_max disagrees with the recomputed one")
    layers = [NetLayer(L["k"], np.asarray(L["centers"], dtype=int), np.asarray(L["E"], dtype=int))
              for L in doc["layers"]]
    parents = [np.asarray(q, dtype=int) for q in doc["parents"]]
    cubes = []
    for rows in doc["cubes"]:
        m = np.zeros((len(rows), space.N), dtype=bool)
        for a, members in enumerate(rows):
            m[a, members] = True
        cubes.append(m)
    return DyadicSystem(space, params, layers, parents, cubes, doc.get("seed"), doc.get("measured", {}))


# -- verification -------------------------------------------------------------------


def net_checks(space, layers, delta, n):
    out = []
    sep_wit = max_wit = layer_wit = None
    E_expected = space.omega(n)
    D = space.dist
    for L in layers:
        r = delta**L.k
        c = L.centers
        sub = D[np.ix_(c, c)]
        off = ~np.eye(len(c), dtype=bool)
        if np.any(sub[off] < r) and sep_wit is None:
            a, b = map(int, np.argwhere((sub < r) & off)[0])
            sep_wit = {"k": L.k, "alpha": a, "beta": b}
        near = np.minimum(D[np.ix_(L.layer_set, c)], D[np.ix_(c, L.layer_set)].T).min(axis=1)
        if np.any(near >= r) and max_wit is None:
            max_wit = {"k": L.k, "x": int(L.layer_set[np.argmax(near >= r)])}
        if not np.array_equal(np.sort(L.layer_set), E_expected) and layer_wit is None:
            layer_wit = {"k": L.k}
        E_expected = np.flatnonzero((D[c] < r).any(axis=0))
    out.append(exact("net separation", "alfa not beta", sep_wit is None, sep_wit))
    out.append(exact("net maximality", "maximal collection", max_wit is None, max_wit))
    out.append(exact("layer recursion", "E_k recursion", layer_wit is None, layer_wit))
    inside = space.omega_mask(n + 1)
    bad = [L.k for L in layers if not inside[L.layer_set].all()]
    out.append(exact("layers in Omega_{n+1}", "Union E_k", not bad, {"k": bad[:1]}))
    return out


def _cube_doubling_and_c0(space, Q, delta_k):
    """c2 over x in Q, r > 0 and both branches of the lower bound for this cube."""
    idx = np.flatnonzero(Q)
    muQ = space.weights[idx].sum()
    c2, c0a, c0b = 1.0, 1.0, 1.0
    for x in idx:
        c, _ = doubling_ratio(space, int(x), np.inf, within=idx)
        c2 = max(c2, c)
        row = space.row(int(x))
        order = np.argsort(row, kind="stable")
        srt = row[order]
        cw_all = np.concatenate([[0.0], np.cumsum(space.weights[order])])
        cw_in = np.concatenate([[0.0], np.cumsum(np.where(Q[order], space.weights[order], 0.0))])
        rs = np.unique(np.concatenate([srt[srt > 0], [delta_k, np.nextafter(delta_k, np.inf)]]))
        pos = np.searchsorted(srt, rs, side="left")
        inQ = cw_in[pos]
        small = rs <= delta_k
        if small.any():
            c0a = min(c0a, float((inQ[small] / cw_all[pos][small]).min()))
        if (~small).any():
            c0b = min(c0b, float((inQ[~small] / muQ).min()))
    return c2, c0a, c0b


def verify_properties(system, space=None, n=None):
    space = system.space if space is None else space
    n = system.n if n is None else n
    p = system.params
    rep = VerificationReport("dyadic properties", inputs={"space": space.name, "n": n, **p.to_dict()})
    with timed(rep):
        for lab, lhs, rhs, strict, ok in p.inequalities:
            rep.add(exact(f"inequality {lab}", lab, ok, {"lhs": lhs, "rhs": rhs}))
        rep.extend(net_checks(space, system.layers, p.delta, n))
        rep.extend(tree_checks(space, system.layers, system.parents, p.delta, p.B_n))
        D = space.dist
        wit = {k: None for k in "abcdefg"}
        in_next = space.omega_mask(n + 1)
        om = space.omega_mask(n)
        covered_any = np.zeros(space.N, dtype=bool)
        for i, M in enumerate(system.cubes):
            covered_any |= M.any(axis=0)
        c2 = 1.0
        c0a = c0b = 1.0
        for i, M in enumerate(system.cubes):
            k = i + 1
            c = system.layers[i].centers
            r_in = p.a0 * p.delta**k
            # (a)
            ball = D[c] < r_in
            bad = np.flatnonzero((ball & ~M).any(axis=1))
            if bad.size and wit["a"] is None:
                wit["a"] = {"k": k, "alpha": int(bad[0])}
            # (b)
            if (M & ~in_next).any() and wit["b"] is None:
                a, x = map(int, np.argwhere(M & ~in_next)[0])
                wit["b"] = {"k": k, "alpha": a, "x": x}
            # (c): ancestors along the tree contain the cube
            anc = np.arange(len(c))
            for j in range(i, 0, -1):
                anc = system.parents[j][anc]
                sup = system.cubes[j - 1][anc]
                bad = np.flatnonzero((M & ~sup).any(axis=1))
                if bad.size and wit["c"] is None:
                    wit["c"] = {"k": k, "alpha": int(bad[0]), "l": j}
            # (d)
            lim = p.c1 * p.delta**k
            for a in range(len(c)):
                mem = np.flatnonzero(M[a])
                diam = D[np.ix_(mem, mem)].max() if mem.size else 0.0
                reach = max(D[c[a], mem].max(), D[mem, c[a]].max()) if mem.size else 0.0
                if not (diam < lim and reach < lim) and wit["d"] is None:
                    wit["d"] = {"k": k, "alpha": a, "diam": float(diam), "bound": lim}
            # (e): nested or disjoint for every finer scale, same scale included
            Mi = M.astype(np.int64)
            size_l = None
            for j in range(i, len(system.cubes)):
                Mj = system.cubes[j].astype(np.int64)
                inter = Mj @ Mi.T
                size_l = Mj.sum(axis=1)[:, None]
                ok = (inter == 0) | (inter == size_l)
                if j == i:
                    ok |= np.eye(len(c), dtype=bool)
                if not ok.all() and wit["e"] is None:
                    b, a = map(int, np.argwhere(~ok)[0])
                    wit["e"] = {"k": k, "alpha": a, "l": j + 1, "beta": b}
            # (f)
            cov = M.any(axis=0)
            if (om & ~cov).any() and wit["f"] is None:
                wit["f"] = {"k": k, "x": int(np.flatnonzero(om & ~cov)[0])}
            # (g)
            if (covered_any & ~cov).any() and wit["g"] is None:
                wit["g"] = {"j": k, "x": int(np.flatnonzero(covered_any & ~cov)[0])}
            # (h)
            for a in range(len(c)):
                q2, qa, qb = _cube_doubling_and_c0(space, M[a], p.delta**k)
                c2, c0a, c0b = max(c2, q2), min(c0a, qa), min(c0b, qb)
        labels = {
            "a": "contains a ball", "b": "union in Omega_{n+1}", "c": "ancestor exists",
            "d": "diam < c1 delta^k", "e": "nested or disjoint", "f": "covers Omega_n (E empty)",
            "g": "every scale covers cube points",
        }
        for key, text in labels.items():
            rep.add(exact(f"property ({key}) {text}", f"Main Thm ({key})", wit[key] is None, wit[key]))
        c0 = min(c0a, c0b)
        rep.add(exact("property (h) c0 > 0 and c2 finite", "Main Thm (h)",
                      c0 > 0 and np.isfinite(c2), {"c0": c0, "c2": c2}, c0=c0, c2=c2))
        cnk = [float(min(space.weights[D[z] < p.a0 * p.delta**L.k].sum() for z in space.omega(n)))
               for L in system.layers]
        rep.add(measured("lower bounds cubes", "lower bounds cubes", c0_small_r=c0a, c0_large_r=c0b,
                         c0=c0, c2=c2))
        rep.add(measured("positive measure c_{n,k}", "Lemma pos meas", c_nk=cnk))
        rep.add(measured("index set sizes", "I_k finite", I_k=[len(L.centers) for L in system.layers]))
        system.measured = {"c0": c0, "c2": c2, "c_nk": cnk}
    return rep


# -- envelope -------------------------------------------------------------------------


@dataclass
class Envelope:
    center: int
    R: float
    k: int
    n: int
    F: np.ndarray
    ball: np.ndarray
    source_cubes: list
    anchor_cube: int
    h_n: float
    R_n: float
    k0: int
    measured: dict = field(default_factory=dict)

    def to_dict(self):
        return {"center": self.center, "R": self.R, "k": self.k, "n": self.n, "F": self.F.tolist(),
                "ball": self.ball.tolist(), "source_cubes": self.source_cubes, "h_n": self.h_n,
                "R_n": self.R_n, "k0": self.k0, "measured": self.measured}


@dataclass
class EnvelopeContext:
    """The level-n and level-(n+1) systems used for every envelope of level n."""

    space: FiniteSpace
    n: int
    sys_n: DyadicSystem
    sys_n1: DyadicSystem
    h_n: float
    k0: int

    @property
    def delta(self):
        return self.sys_n.params.delta

    @property
    def R_n(self):
        return self.delta**self.k0


def _scale_for(delta, R):
    k = 1
    while delta ** (k + 1) >= R:
        k += 1
    return k


def _raw_envelope(ctx, xbar, k):
    space = ctx.space
    alpha = ctx.sys_n.locate(xbar, k)
    if alpha is None:
        raise ConstructionError(f"point {xbar} lies in no level-{ctx.n} cube of scale {k}")
    z = ctx.sys_n.center(k, alpha)
    near = space.dist[z] < ctx.h_n * ctx.delta**k
    masks = ctx.sys_n1.cube_masks(k)
    src = np.flatnonzero((masks & near).any(axis=1))
    F = masks[src].any(axis=0) if src.size else np.zeros(space.N, dtype=bool)
    return alpha, src, np.flatnonzero(F)


def envelope_context(space, n, delta=None, seed=None):
    sys_n = build_system(space, n, delta=delta, seed=seed)
    d1 = choose_delta([level_constants(space, m) for m in (n + 1, n + 2, n + 3)]).delta
    sys_n1 = build_system(space, n + 1, delta=min(d1, sys_n.params.delta), seed=seed)
    c = level_constants(space, n)
    c1 = level_constants(space, n + 1)
    c2 = level_constants(space, n + 2)
    h = c1.B * (1.0 + sys_n.params.c1)
    delta = sys_n.params.delta
    k0 = 1
    while h * delta**k0 > 2 * c.eps:
        k0 += 1
    ctx = EnvelopeContext(space, n, sys_n, sys_n1, h, k0)
    # shrink R_n until B(xbar, j_n R) stays within the local doubling range of Omega_{n+2}
    for _ in range(64):
        R = delta**ctx.k0
        worst = 0.0
        for x in space.omega(n):
            _, _, F = _raw_envelope(ctx, int(x), ctx.k0)
            worst = max(worst, R, float(space.row(int(x))[F].max()) if F.size else 0.0)
        if worst <= c2.eps:
            break
        ctx.k0 += 1
    return ctx


def build_envelope(space, n, xbar, R, ctx=None):
    if ctx is None:
        ctx = envelope_context(space, n)
    xbar = space._pid(xbar)
    if space.levels[xbar] > n:
        raise InputError(f"center {xbar} is not in Omega_{n}")
    if not R > 0:
        raise RangeError("radius must be positive")
    if R > ctx.R_n:
        raise RangeError(f"R={R!r} exceeds R_n={ctx.R_n!r}")
    k = _scale_for(ctx.delta, R)
    alpha, src, F = _raw_envelope(ctx, xbar, k)
    ball = np.flatnonzero(space.row(xbar) < R)
    return Envelope(center=xbar, R=float(R), k=k, n=n, F=F, ball=ball, source_cubes=src.tolist(),
                    anchor_cube=alpha, h_n=ctx.h_n, R_n=ctx.R_n, k0=ctx.k0)


def set_doubling(space, S):
    """Doubling constant of S with inherited rho and mu, over x in S and all r > 0."""
    S = np.asarray(S, dtype=int)
    best = 1.0
    for x in S:
        c, _ = doubling_ratio(space, int(x), np.inf, within=S)
        best = max(best, c)
    return best


def verify_envelope(env, space):
    rep = VerificationReport("envelope", inputs={"center": env.center, "R": env.R, "n": env.n})
    with timed(rep):
        F = np.zeros(space.N, dtype=bool)
        F[env.F] = True
        miss = env.ball[~F[env.ball]]
        rep.add(exact("ball inside F", "Thm F (ii)", miss.size == 0,
                      {"x": int(miss[0])} if miss.size else None))
        outer = space.omega_mask(env.n + 2)
        out = env.F[~outer[env.F]]
        rep.add(exact("F inside Omega_{n+2}", "Thm F (ii)", out.size == 0,
                      {"x": int(out[0])} if out.size else None))
        rep.add(exact("ball inside closure of F", "Thm F (iii)", miss.size == 0,
                      {"x": int(miss[0])} if miss.size else None))
        dbl = set_doubling(space, env.F)
        sub = space.dist[np.ix_(env.F, env.F)]
        diam = float(sub.max()) if env.F.size else 0.0
        reach = float(space.row(env.center)[env.F].max()) if env.F.size else 0.0
        mu_ratio = space.measure(env.F) / space.measure(env.ball)
        j = max(1.0, reach / env.R)
        env.measured = {"doubling": dbl, "diam_over_R": diam / env.R, "mu_ratio": mu_ratio, "j": j}
        rep.add(exact("F doubling finite", "Thm F (i)", np.isfinite(dbl), None, doubling=dbl))
        rep.add(exact("diam F <= c R", "Thm F (iv)", np.isfinite(diam / env.R), None,
                      c=diam / env.R))
        rep.add(exact("mu(F) <= c mu(ball)", "Thm F (v)", np.isfinite(mu_ratio), None, c=mu_ratio))
        rep.add(measured("F inside B(xbar, j R)", "F in B(xbar, j_n R)", j=j))
    return rep


def envelope_stability(space, n, xbar, radii=None, factor=4.0, ctx=None):
    """Envelopes over an R grid (default R_n, R_n/2, R_n/4) and factor-stability of each ratio."""
    ctx = envelope_context(space, n) if ctx is None else ctx
    radii = [ctx.R_n, ctx.R_n / 2, ctx.R_n / 4] if radii is None else list(radii)
    rep = VerificationReport("envelope stability",
                             inputs={"space": space.name, "n": n, "center": int(xbar), "R_n": ctx.R_n,
                                     "k0": ctx.k0, "h_n": ctx.h_n})
    envs = []
    with timed(rep):
        for R in radii:
            env = build_envelope(space, n, xbar, R, ctx)
            sub = verify_envelope(env, space)
            rep.merge(sub, prefix=f"R={R:.6g}: ")
            envs.append(env)
        for key, anchor in [("doubling", "Thm F (i)"), ("diam_over_R", "Thm F (iv)"),
                            ("mu_ratio", "Thm F (v)")]:
            vals = [e.measured[key] for e in envs]
            rep.add(exact(f"{key} stable within factor {factor:g}", anchor, within_factor(vals, factor),
                          {"values": vals}, values=vals))
    return rep, envs
