"""Finite locally homogeneous spaces.

A space is a finite set of atoms ``0..N-1`` with positive weights, a
quasidistance ``rho`` (explicit matrix or closed form over coordinates) and an
exhaustion level per point: ``x`` belongs to ``Omega_n`` iff ``level[x] <= n``.
Levels above the largest stored one are the whole space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AxiomViolation, InputError

METRIC_KINDS = ("matrix", "euclidean", "heisenberg", "parabolic", "asymmetric")
SYMMETRIC_KINDS = ("euclidean", "heisenberg", "parabolic")
MATRIX_CAP = 4096


@dataclass(frozen=True)
class LevelConstants:
    n: int
    eps: float
    B: float
    C: float
    A: float = 1.0
    witnesses: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self):
        return {"n": self.n, "eps": self.eps, "B": self.B, "C": self.C, "A": self.A}


def _readonly(a, dtype=None):
    if a is None:
        return None
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    weights: np.ndarray
    levels: np.ndarray
    metric: str = "matrix"
    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None
    skew: float = 1.0
    declared: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.metric not in METRIC_KINDS:
            raise InputError(f"unknown metric type {self.metric!r}")
        w = np.asarray(self.weights, dtype=float)
        lv = np.asarray(self.levels)
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InputError("weights must be positive and finite")
        if lv.shape != w.shape:
            raise InputError("levels and weights must have the same length")
        if not np.all(lv == np.round(lv)) or np.any(lv < 1):
            raise InputError("levels must be positive integers")
        object.__setattr__(self, "weights", _readonly(w, float))
        object.__setattr__(self, "levels", _readonly(lv, int))
        n = w.size
        if self.metric == "matrix":
            if self.matrix is None:
                raise InputError("matrix metric requires a matrix")
            if n > MATRIX_CAP:
                raise InputError(f"explicit-matrix spaces are capped at N={MATRIX_CAP}")
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (n, n):
                raise InputError(f"matrix must be {n}x{n}, got {m.shape}")
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise InputError("distances must be finite and nonnegative")
            object.__setattr__(self, "matrix", _readonly(m, float))
        else:
            if self.coords is None:
                raise InputError(f"{self.metric} metric requires coordinates")
            c = np.asarray(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != n:
                raise InputError("one coordinate row per point is required")
            need = {"heisenberg": 3, "asymmetric": 1}.get(self.metric)
            if need is not None and c.shape[1] != need:
                raise InputError(f"{self.metric} metric needs {need}-dimensional coordinates")
            if self.metric == "parabolic" and c.shape[1] < 2:
                raise InputError("parabolic metric needs (space..., time) coordinates")
            object.__setattr__(self, "coords", _readonly(c, float))
        if self.metric == "asymmetric" and self.skew < 1:
            raise InputError("skew must be >= 1")
        object.__setattr__(self, "declared", tuple(self.declared))
        self.check_h1()

    # -- basic accessors -------------------------------------------------

    @property
    def N(self):
        return int(self.weights.size)

    @property
    def points(self):
        return np.arange(self.N)

    @property
    def max_level(self):
        return int(self.levels.max())

    @cached_property
    def symmetric(self):
        if self.metric in SYMMETRIC_KINDS:
            return True
        if self.metric == "asymmetric":
            return self.skew == 1.0 or self.N == 1
        return bool(np.array_equal(self.matrix, self.matrix.T))

    def row(self, x):
        """rho(x, y) for every y."""
        x = self._pid(x)
        if self.metric == "matrix":
            return self.matrix[x]
        c = self.coords
        if self.metric == "euclidean":
            return np.sqrt(((c - c[x]) ** 2).sum(axis=1))
        if self.metric == "parabolic":
            sp = np.sqrt(((c[:, :-1] - c[x, :-1]) ** 2).sum(axis=1))
            return np.maximum(sp, np.sqrt(np.abs(c[:, -1] - c[x, -1])))
        if self.metric == "heisenberg":
            px, py, pt = c[x]
            dx = px - c[:, 0]
            dy = py - c[:, 1]
            dt = pt - c[:, 2] + 2.0 * (c[:, 0] * py - c[:, 1] * px)
            return ((dx**2 + dy**2) ** 2 + dt**2) ** 0.25
        # asymmetric: |x-y| * (1 if x <= y else skew)
        diff = c[:, 0] - c[x, 0]
        return np.where(diff >= 0, diff, -diff * self.skew)

    @cached_property
    def dist(self):
        """Full N x N quasidistance matrix (read-only)."""
        if self.metric == "matrix":
            return self.matrix
        if self.N > MATRIX_CAP:
            raise InputError(f"refusing to materialise a {self.N}x{self.N} matrix")
        d = np.empty((self.N, self.N))
        for x in range(self.N):
            d[x] = self.row(x)
        d[np.diag_indices(self.N)] = 0.0
        d.setflags(write=False)
        return d

    def rho(self, x, y):
        return float(self.row(x)[self._pid(y)])

    def _pid(self, x):
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise InputError(f"point id must be an integer, got {x!r}")
        if not 0 <= int(x) < self.N:
            raise InputError(f"unknown point id {x}")
        return int(x)

    def omega_mask(self, n):
        return self.levels <= n

    def omega(self, n):
        """Sorted ids of Omega_n."""
        return np.flatnonzero(self.levels <= n)

    def measure(self, S):
        S = np.asarray(S)
        if S.dtype == bool:
            return float(self.weights[S].sum())
        return float(self.weights[S.astype(int)].sum()) if S.size else 0.0

    def check_h1(self):
        """rho(x, y) == 0 iff x == y, checked exhaustively."""
        if self.metric == "matrix":
            m = self.matrix
            diag = np.flatnonzero(np.diag(m) != 0)
            if diag.size:
                x = int(diag[0])
                raise AxiomViolation("(H1)(a)", f"rho({x},{x}) != 0", {"x": x, "y": x})
            off = m == 0
            off[np.diag_indices(self.N)] = False
            if off.any():
                x, y = map(int, np.argwhere(off)[0])
                raise AxiomViolation("(H1)(a)", f"rho({x},{y}) = 0 with x != y", {"x": x, "y": y})
            return
        # for the closed forms rho vanishes exactly on coincident coordinates
        _, idx, counts = np.unique(self.coords, axis=0, return_index=True, return_counts=True)
        if np.any(counts > 1):
            dup = self.coords[idx[np.argmax(counts > 1)]]
            same = np.flatnonzero(np.all(self.coords == dup, axis=1))
            x, y = int(same[0]), int(same[1])
            raise AxiomViolation("(H1)(a)", f"points {x} and {y} coincide", {"x": x, "y": y})

    # -- derived quantities -------------------------------------------------

    @cached_property
    def distinct_distances(self):
        d = self.dist
        vals = d[~np.eye(self.N, dtype=bool)]
        return np.unique(vals)

    def min_distance(self, S=None):
        if S is None:
            dd = self.distinct_distances
            return float(dd[0]) if dd.size else np.inf
        S = np.asarray(S, dtype=int)
        if S.size < 2:
            return np.inf
        sub = self.dist[np.ix_(S, S)]
        return float(sub[~np.eye(S.size, dtype=bool)].min())

    @cached_property
    def ball_measure(self):
        """V[x, y] = mu(B(x, rho(x, y))) (the ball excludes y itself)."""
        d = self.dist
        V = np.empty_like(d)
        for x in range(self.N):
            order = np.argsort(d[x], kind="stable")
            srt = d[x][order]
            cw = np.concatenate([[0.0], np.cumsum(self.weights[order])])
            V[x] = cw[np.searchsorted(srt, d[x], side="left")]
        V.setflags(write=False)
        return V

    def to_dict(self):
        pts = []
        for i in range(self.N):
            p = {"id": i, "weight": float(self.weights[i]), "level": int(self.levels[i])}
            if self.coords is not None:
                p["coords"] = [float(v) for v in self.coords[i]]
            pts.append(p)
        metric = {"type": self.metric}
        if self.metric == "matrix":
            metric["matrix"] = self.matrix.tolist()
        if self.metric == "asymmetric":
            metric["skew"] = float(self.skew)
        out = {"points": pts, "metric": metric}
        if self.name:
            out["name"] = self.name
        if self.declared:
            out["constants"] = [c.to_dict() for c in self.declared]
        return out


# -- balls -----------------------------------------------------------------


def ball(space, x, r):
    """{y : rho(x, y) < r} as a sorted id array."""
    if not r > 0:
        raise InputError("radius must be positive")
    return np.flatnonzero(space.row(x) < r)


def coball(space, x, r):
    """{y : rho(y, x) < r}."""
    if not r > 0:
        raise InputError("radius must be positive")
    x = space._pid(x)
    if space.symmetric:
        return ball(space, x, r)
    return np.flatnonzero(space.dist[:, x] < r)


def ball_mask(space, x, r):
    return space.row(x) < r


# -- constants ----------------------------------------------------------------


def _quasitriangle(D):
    """Max over triples of D[x,y] / (D[x,z] + D[z,y]) with its witness.

    For each pair the binding z minimises D[x,z] + D[z,y], so the search is a
    min-plus product followed by one division.
    """
    m = D.shape[0]
    if m < 2:
        return 1.0, None
    acc = np.full((m, m), np.inf)
    tmp = np.empty((m, m))
    for z in range(m):
        np.add(D[:, z, None], D[None, z, :], out=tmp)
        np.minimum(acc, tmp, out=acc)
    off = ~np.eye(m, dtype=bool)
    ratio = np.zeros((m, m))
    ratio[off] = D[off] / acc[off]
    k = int(np.argmax(ratio))
    x, y = k // m, k % m
    z = int(np.argmin(D[x, :] + D[:, y]))
    return float(ratio.flat[k]), (x, y, z)


def _quasisymmetry(D):
    m = D.shape[0]
    if m < 2:
        return 1.0, None
    off = ~np.eye(m, dtype=bool)
    ratio = np.zeros_like(D)
    ratio[off] = D[off] / D.T[off]
    k = int(np.argmax(ratio))
    return max(1.0, float(ratio.flat[k])), (k // m, k % m)


def _engulfing_radius(space, n):
    inside = space.omega_mask(n)
    outside = ~space.omega_mask(n + 1)
    D = space.dist
    if not outside.any():
        return float(space.distinct_distances[-1]) / 2.0 if space.N > 1 else np.inf, None
    a = D[np.ix_(outside, inside)]
    b = D[np.ix_(inside, outside)].T
    gap = np.minimum(a, b)
    k = int(np.argmin(gap))
    dmin = float(gap.flat[k])
    cand = space.distinct_distances
    valid = cand[cand <= dmin]
    if valid.size == 0 or dmin <= 0:
        raise AxiomViolation("(Hp 1)", f"no eps > 0 engulfs Omega_{n} in Omega_{n + 1}")
    wit = (int(np.flatnonzero(outside)[k // a.shape[1]]), int(np.flatnonzero(inside)[k % a.shape[1]]))
    return float(valid[-1]) / 2.0, wit


def doubling_ratio(space, x, eps, within=None):
    """max over 0 < r <= eps of mu(B(x,2r) & S) / mu(B(x,r) & S) and the maximiser.

    Ball measures are step functions of r, constant on intervals (a, b] whose
    endpoints are distances or halved distances, so the breakpoints suffice.
    """
    row = space.row(x)
    w = space.weights
    if within is not None:
        mask = np.zeros(space.N, dtype=bool)
        mask[within] = True
        row, w = row[mask], w[mask]
    order = np.argsort(row, kind="stable")
    srt = row[order]
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    pos = srt[srt > 0]
    if np.isfinite(eps):
        r = np.unique(np.concatenate([pos, pos / 2.0, [eps]]))
        r = r[(r > 0) & (r <= eps)]
    else:
        r = np.unique(np.concatenate([pos, pos / 2.0]))
        r = r[r > 0]
    if r.size == 0:
        return 1.0, None
    small = cw[np.searchsorted(srt, r, side="left")]
    big = cw[np.searchsorted(srt, 2.0 * r, side="left")]
    ratio = big / small
    k = int(np.argmax(ratio))
    return float(ratio[k]), float(r[k])


def estimate_constants(space, n):
    """Minimal (eps_n, B_n, C_n, A_n) for one level, with B_n floored at 2."""
    om = space.omega(n)
    if om.size == 0 or space.omega(n + 1).size == 0:
        raise InputError(f"Omega_{n} and Omega_{n + 1} must be nonempty")
    D = space.dist[np.ix_(om, om)]
    B_raw, bw = _quasitriangle(D)
    A, aw = _quasisymmetry(D)
    eps, ew = _engulfing_radius(space, n)
    C, cw = 1.0, None
    for x in om:
        c, r = doubling_ratio(space, int(x), eps)
        if c > C:
            C, cw = c, (int(x), r)
    wit = {
        "B_raw": B_raw,
        "B_triple": None if bw is None else tuple(int(om[i]) for i in bw),
        "A_pair": None if aw is None else tuple(int(om[i]) for i in aw),
        "eps_pair": ew,
        "C_at": cw,
    }
    return LevelConstants(n=n, eps=eps, B=max(2.0, B_raw), C=C, A=A, witnesses=wit)


def level_constants(space, n):
    """Constants for level n, normalised so that B, C, A are nondecreasing and
    eps nonincreasing in n. Declared constants take precedence."""
    for c in space.declared:
        if c.n == n:
            return c
    cache = space.__dict__.setdefault("_constants_cache", {})
    top = space.max_level
    m = min(n, top)
    for k in range(1, m + 1):
        if k not in cache:
            cache[k] = estimate_constants(space, k)
    raw = [cache[k] for k in range(1, m + 1)]
    return LevelConstants(
        n=n,
        eps=min(c.eps for c in raw),
        B=max(c.B for c in raw),
        C=max(c.C for c in raw),
        A=max(c.A for c in raw),
        witnesses=raw[-1].witnesses,
    )


def symmetrize(space):
    """rho*(x, y) = rho(x, y) + rho(y, x); weights and levels unchanged."""
    D = space.dist
    return FiniteSpace(
        weights=space.weights,
        levels=space.levels,
        metric="matrix",
        matrix=D + D.T,
        name=(space.name + "*") if space.name else "symmetrized",
    )


def check_sandwich(space, sym, n):
    """rho <= rho* <= (1 + A_n) rho on Omega_n; returns (ok, A_n, witness)."""
    om = space.omega(n)
    D = space.dist[np.ix_(om, om)]
    S = sym.dist[np.ix_(om, om)]
    A, _ = _quasisymmetry(D)
    lower = D <= S
    # (1 + A) rho can round an ulp below rho + rho^T
    upper = S <= (1.0 + A) * D * (1.0 + 4 * np.finfo(float).eps)
    ok = bool(lower.all() and upper.all())
    wit = None
    if not ok:
        i, j = np.argwhere(~(lower & upper))[0]
        wit = {"x": int(om[i]), "y": int(om[j])}
    return ok, A, wit


# -- generators ------------------------------------------------------------------


def _box_levels(offsets, side, levels):
    """Level of each grid point for concentric boxes of widths side*n/levels."""
    cheb = np.abs(offsets).max(axis=1)
    lv = np.full(offsets.shape[0], levels, dtype=int)
    for n in range(levels - 1, 0, -1):
        lv[cheb <= side * n / levels / 2.0 - 0.5 + 1e-9] = n
    return lv


def _grid(dim, side):
    axes = [np.arange(side, dtype=float) - (side - 1) / 2.0] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def generate(kind, **params):
    """Deterministic example spaces with nested concentric levels and unit weights.

    kinds: euclidean-grid(dim, side, levels), heisenberg-grid(side, levels),
    parabolic-grid(side, levels), asymmetric-grid(side, skew, levels),
    multiscale(depth, branching, ratio), from-file(path).
    """
    if kind == "from-file":
        return load_space(params["path"])
    if kind == "euclidean-grid":
        dim, side, levels = int(params.get("dim", 1)), int(params["side"]), int(params.get("levels", 3))
        g = _grid(dim, side)
        return FiniteSpace(np.ones(len(g)), _box_levels(g, side, levels), "euclidean", coords=g,
                           name=f"euclidean-grid-{dim}d-{side}")
    if kind == "heisenberg-grid":
        side, levels = int(params["side"]), int(params.get("levels", 3))
        g = _grid(3, side)
        return FiniteSpace(np.ones(len(g)), _box_levels(g, side, levels), "heisenberg", coords=g,
                           name=f"heisenberg-grid-{side}")
    if kind == "parabolic-grid":
        side, levels = int(params["side"]), int(params.get("levels", 3))
        g = _grid(2, side)
        return FiniteSpace(np.ones(len(g)), _box_levels(g, side, levels), "parabolic", coords=g,
                           name=f"parabolic-grid-{side}")
    if kind == "asymmetric-grid":
        side, levels = int(params["side"]), int(params.get("levels", 3))
        skew = float(params.get("skew", 3.0))
        if skew < 1:
            raise InputError("skew must be >= 1")
        g = _grid(1, side)
        return FiniteSpace(np.ones(len(g)), _box_levels(g, side, levels), "asymmetric", coords=g,
                           skew=skew, name=f"asymmetric-grid-{side}-skew{skew:g}")
    if kind == "multiscale":
        depth = int(params.get("depth", 3))
        branching = int(params.get("branching", 3))
        ratio = float(params.get("ratio", 2.0**-13))
        digits = np.array(np.meshgrid(*[np.arange(branching)] * depth, indexing="ij"))
        digits = digits.reshape(depth, -1).T
        x = (digits * ratio ** np.arange(depth)).sum(axis=1)
        lv = 1 + np.abs(digits[:, 0] - branching // 2)
        return FiniteSpace(np.ones(len(x)), lv, "euclidean", coords=x[:, None],
                           name=f"multiscale-{depth}x{branching}")
    raise InputError(f"unknown generator kind {kind!r}")


# -- file io ------------------------------------------------------------------------


def space_from_dict(doc):
    try:
        pts = sorted(doc["points"], key=lambda p: p["id"])
        ids = [int(p["id"]) for p in pts]
        if ids != list(range(len(ids))):
            raise InputError("point ids must be dense integers 0..N-1")
        weights = [float(p.get("weight", 1.0)) for p in pts]
        levels = [int(p["level"]) for p in pts]
        metric = doc["metric"]
        kind = metric["type"]
        coords = None
        if kind != "matrix":
            coords = [p["coords"] for p in pts]
        declared = tuple(
            LevelConstants(n=int(c["n"]), eps=float(c["eps"]), B=float(c["B"]), C=float(c["C"]),
                           A=float(c.get("A", 1.0)))
            for c in doc.get("constants", [])
        )
        return FiniteSpace(
            weights=weights,
            levels=levels,
            metric=kind,
            coords=coords,
            matrix=metric.get("matrix"),
            skew=float(metric.get("skew", 1.0)),
            declared=declared,
            name=doc.get("name", ""),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed space document: missing or bad field {exc}") from exc


def load_space(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return space_from_dict(doc)


def save_space(space, path):
    with open(path, "w") as fh:
        json.dump(space.to_dict(), fh)
