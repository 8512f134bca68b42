"""Order-alpha quasidistance, Hoelder cutoff functions and Hoelder seminorms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .errors import InputError, RangeError
from .space import level_constants

APSP_CAP = 1500
SIZE_CAP = 4096


def ms_alpha(B):
    """Exponent 1/log2(3 B^2)."""
    return 1.0 / np.log2(3.0 * B * B)


@dataclass(eq=False)
class OrderAlphaDistance:
    alpha: float
    ids: np.ndarray  # points of Omega_n, in increasing order
    weights: np.ndarray  # rho^alpha on ids x ids
    rho: np.ndarray

    @cached_property
    def m(self):
        """Chain distance: all-pairs shortest paths with edge weights rho^alpha."""
        if len(self.ids) <= APSP_CAP:
            m = np.array(self.weights, dtype=float)
            # a pass that changes nothing certifies m[i,j] <= m[i,k] + m[k,j] in floating point
            changed = True
            while changed:
                before = m.copy()
                for k in range(m.shape[0]):
                    np.minimum(m, m[:, k, None] + m[None, k, :], out=m)
                changed = not np.array_equal(before, m)
            return m
        return np.vstack([self.row_m(i) for i in range(len(self.ids))])

    def row_m(self, i):
        return dijkstra(self.weights, directed=False, indices=i)

    @cached_property
    def d(self):
        return self.m ** (1.0 / self.alpha)

    @cached_property
    def _ratio(self):
        off = ~np.eye(len(self.ids), dtype=bool)
        return self.d[off] / self.rho[off]

    @property
    def c_low(self):
        return float(self._ratio.min()) if self._ratio.size else 1.0

    @property
    def c_high(self):
        return float(self._ratio.max()) if self._ratio.size else 1.0

    @cached_property
    def order_constant(self):
        return order_constant(self.d, self.alpha)

    def local(self, x):
        pos = np.searchsorted(self.ids, x)
        if pos >= len(self.ids) or self.ids[pos] != x:
            raise RangeError(f"point {x} is outside the domain of the order-alpha distance")
        return int(pos)

    def to_dict(self):
        return {"alpha": self.alpha, "ids": self.ids.tolist(), "matrix": self.d.tolist(),
                "c_low": self.c_low, "c_high": self.c_high, "order_constant": self.order_constant}


def order_constant(d, alpha):
    """Smallest c with |d(x1,y)-d(x2,y)| <= c d(x1,x2)^a (d(x1,y)^(1-a) + d(x2,y)^(1-a))."""
    n = d.shape[0]
    best = 0.0
    da = d**alpha
    d1 = d ** (1.0 - alpha)
    for i in range(n):
        lhs = np.abs(d[i][:, None] - d)  # rows x2, cols y
        rhs = da[i][:, None] * (d1[i][None, :] + d1)
        ok = rhs > 0
        if ok.any():
            best = max(best, float((lhs[ok] / rhs[ok]).max()))
    return best


def order_alpha_distance(space, n, alpha_one=False, alpha=None):
    """Macias-Segovia chain distance d = m^(1/alpha) on Omega_n.

    alpha defaults to 1/log2(3 B_n^2); ``alpha_one`` uses 1, which is exact for metrics.
    """
    if not space.symmetric:
        raise InputError("order-alpha distance needs a symmetric quasidistance; symmetrize first")
    ids = space.omega(n)
    if ids.size > SIZE_CAP:
        raise InputError(f"Omega_{n} has {ids.size} points, above the cap {SIZE_CAP}")
    if alpha is None:
        alpha = 1.0 if alpha_one else ms_alpha(level_constants(space, n).B)
    if not 0 < alpha <= 1:
        raise InputError("alpha must lie in (0, 1]")
    rho = space.dist[np.ix_(ids, ids)]
    return OrderAlphaDistance(alpha=float(alpha), ids=ids, weights=rho**alpha, rho=rho)


def psi(t, r):
    """1 on [0, r], 2 - t/r on [r, 2r], 0 beyond."""
    return np.clip(2.0 - np.asarray(t, dtype=float) / r, 0.0, 1.0)


@dataclass
class CutoffFunction:
    center: int
    r: float
    inner: float  # rho radius of the plateau phi = 1
    outer: float  # rho radius outside which phi = 0
    values: np.ndarray
    alpha: float
    holder_constant: float


def cutoff(space, od, x0, r):
    """phi(x) = psi(d(x, x0)) on the domain of ``od`` and 0 elsewhere.

    The rho plateau radii follow from c_low rho <= d <= c_high rho.
    """
    if not r > 0:
        raise RangeError("radius must be positive")
    i0 = od.local(space._pid(x0))
    inner = r / od.c_high
    outer = 2.0 * r / od.c_low
    dom = np.zeros(space.N, dtype=bool)
    dom[od.ids] = True
    reach = space.row(x0) < outer
    if (reach & ~dom).any():
        bad = int(np.flatnonzero(reach & ~dom)[0])
        raise RangeError(f"support ball B(x0, {outer:g}) leaves the domain at point {bad}")
    phi = np.zeros(space.N)
    dist = od.m[i0] ** (1.0 / od.alpha)
    phi[od.ids] = psi(dist, r)
    hc = holder_seminorm(space, phi, od.alpha, scale=r)
    return CutoffFunction(int(x0), float(r), inner, outer, phi, od.alpha, hc)


def cutoff_checks(space, cf):
    """Exact plateau conditions; returns (inner_ok, outer_ok, range_ok)."""
    row = space.row(cf.center)
    inner_ok = bool(np.all(cf.values[row < cf.inner] == 1.0))
    outer_ok = bool(np.all(cf.values[row >= cf.outer] == 0.0))
    range_ok = bool(np.all((cf.values >= 0) & (cf.values <= 1)))
    return inner_ok, outer_ok, range_ok


def holder_seminorm(space, f, eta, S=None, scale=1.0):
    """max over x != y in S of |f(x) - f(y)| / (rho(x,y)/scale)^eta."""
    if not eta > 0:
        raise InputError("eta must be positive")
    f = np.asarray(f, dtype=float)
    S = space.points if S is None else np.asarray(S, dtype=int)
    if S.size == 0:
        raise InputError("empty set")
    if S.size < 2:
        return 0.0
    best = 0.0
    fS = f[S]
    for i, x in enumerate(S):
        rho = space.row(int(x))[S] / scale
        diff = np.abs(fS - fS[i])
        ok = rho > 0
        best = max(best, float((diff[ok] / rho[ok] ** eta).max()))
    return best


def holder_norm(space, f, eta, S=None):
    S = space.points if S is None else np.asarray(S, dtype=int)
    return float(np.abs(np.asarray(f)[S]).max()) + holder_seminorm(space, f, eta, S)
