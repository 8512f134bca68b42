"""Brute-force reference computations, written independently of the main code paths."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.sparse.csgraph import dijkstra


def is_maximal_net(D, E, centers, r):
    """Separation and maximality of ``centers`` inside E, by direct enumeration."""
    E = [int(e) for e in E]
    C = [int(c) for c in centers]
    if not set(C) <= set(E):
        return False
    for a, b in itertools.combinations(C, 2):
        if D[a][b] < r or D[b][a] < r:
            return False
    for x in E:
        if x in C:
            continue
        if all(D[x][c] >= r and D[c][x] >= r for c in C):
            return False
    return True


def greedy_net(D, E, r):
    """Plain-python greedy sweep in ascending id."""
    out = []
    for x in sorted(int(e) for e in E):
        if all(D[x][c] >= r and D[c][x] >= r for c in out):
            out.append(x)
    return out


def holder_sweep(D, f, eta, S):
    best = 0.0
    for x in S:
        for y in S:
            if x != y and D[x][y] > 0:
                best = max(best, abs(f[x] - f[y]) / D[x][y] ** eta)
    return best


def p2_norm_dense(K, w, S):
    """Largest singular value of W^(1/2) K W^(1/2) on S via a dense eigen-solve."""
    S = np.asarray(S, dtype=int)
    sw = np.sqrt(np.asarray(w)[S])
    M = sw[:, None] * np.asarray(K)[np.ix_(S, S)] * sw[None, :]
    ev = np.linalg.eigvalsh(M.T @ M)
    return float(np.sqrt(max(ev[-1], 0.0))) if ev.size else 0.0


def chain_distance(rho, alpha):
    """Shortest chains with edge weights rho^alpha via Dijkstra, raised to 1/alpha."""
    m = dijkstra(np.asarray(rho) ** alpha, directed=False)
    return m, m ** (1.0 / alpha)


def doubling_sweep(D, w, x, eps, n_grid=4000):
    """max over a dense radius grid of mu(B(x,2r))/mu(B(x,r)), r <= eps."""
    row = np.asarray(D[x])
    w = np.asarray(w)
    pos = row[row > 0]
    lo = pos.min() / 4 if pos.size else eps / 4
    rs = np.concatenate([np.linspace(lo, eps, n_grid), pos[pos <= eps], pos[pos / 2 <= eps] / 2,
                         np.nextafter(pos[pos <= eps], np.inf), [eps]])
    rs = rs[(rs > 0) & (rs <= eps)]
    best = 1.0
    for r in rs:
        best = max(best, w[row < 2 * r].sum() / w[row < r].sum())
    return best


def quasitriangle_sweep(D):
    n = len(D)
    best = 0.0
    for x, y, z in itertools.product(range(n), repeat=3):
        den = D[x][z] + D[z][y]
        if den > 0:
            best = max(best, D[x][y] / den)
    return best


def mean_oscillation_sweep(D, w, u, centers, r, S=None):
    """sup over centers and distinct balls of radius <= r of the mean oscillation, looping."""
    S = range(len(w)) if S is None else [int(s) for s in S]
    best = 0.0
    for x in centers:
        radii = sorted({D[x][y] for y in S if 0 < D[x][y] <= r} | {r})
        for t in radii:
            B = [y for y in S if D[x][y] < t]
            if not B:
                continue
            mu = sum(w[y] for y in B)
            mean = sum(u[y] * w[y] for y in B) / mu
            best = max(best, sum(abs(u[y] - mean) * w[y] for y in B) / mu)
    return best


def maximal_sweep(D, w, f, x, r_n):
    radii = sorted({d for d in D[x] if 0 < d <= r_n} | {r_n})
    best = 0.0
    for t in radii:
        B = [y for y in range(len(w)) if D[x][y] < t]
        best = max(best, sum(abs(f[y]) * w[y] for y in B) / sum(w[y] for y in B))
    return best
