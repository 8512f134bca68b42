"""Kernels, (H7) localization, standard-estimate checks and operator application."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import cutoff, holder_seminorm, order_alpha_distance
from .errors import InputError, RangeError
from .space import level_constants

KERNEL_KINDS = ("matrix", "riesz-model", "antisymmetric-model")


@dataclass
class KernelSpec:
    kind: str = "riesz-model"
    nu: float = 0.0
    A: float | None = None
    B: float | None = None
    beta: float = 1.0
    M: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InputError(f"unknown kernel type {self.kind!r}")
        if not 0 <= self.nu < 1:
            raise InputError("nu must lie in [0, 1)")
        if self.kind == "matrix" and self.matrix is None:
            raise InputError("matrix kernel needs a matrix")

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(kind=doc["type"], nu=float(doc.get("nu", 0.0)), A=doc.get("A"), B=doc.get("B"),
                       beta=float(doc.get("beta", 1.0)), M=doc.get("M"),
                       matrix=None if doc.get("matrix") is None else np.asarray(doc["matrix"], float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed kernel document: {exc}") from exc


def sign_factor(space):
    """sigma(x, y) = sign of the first nonzero coordinate of y - x (or of the id gap)."""
    N = space.N
    if space.coords is None:
        i = np.arange(N)
        return np.sign(i[None, :] - i[:, None]).astype(float)
    c = space.coords
    sig = np.zeros((N, N))
    for j in range(c.shape[1] - 1, -1, -1):
        s = np.sign(c[None, :, j] - c[:, None, j])
        sig = np.where(s != 0, s, sig)
    return sig


def kernel_matrix(spec, space):
    """K(x, y) on all pairs with a zero diagonal."""
    if spec.kind == "matrix":
        K = np.array(spec.matrix, dtype=float)
        if K.shape != (space.N, space.N):
            raise InputError("kernel matrix has the wrong shape")
    else:
        V = space.ball_measure.copy()
        V[np.diag_indices(space.N)] = 1.0
        if spec.kind == "riesz-model":
            K = V ** (spec.nu - 1.0)
        else:
            K = sign_factor(space) * (0.5 * (V + V.T)) ** (spec.nu - 1.0)
    K[np.diag_indices(space.N)] = 0.0
    return K


@dataclass
class LocalizedKernel:
    base: KernelSpec
    K: np.ndarray
    a: np.ndarray
    b: np.ndarray
    center: int
    R: float
    R0: float
    c: float
    n: int
    radii: dict = field(default_factory=dict)

    @property
    def Kt(self):
        return self.a[:, None] * self.K * self.b[None, :]

    @property
    def support(self):
        return np.flatnonzero((self.a != 0) | (self.b != 0))


def localize(spec, space, n, xbar, R, R0=None, c=None, outer_a=0.9, outer_b=0.9, od=None):
    """a(x) K(x,y) b(y) with cutoffs B(xbar, c1 R) < a < B(xbar, c2 R), c2 = outer_a < 1."""
    xbar = space._pid(xbar)
    if space.levels[xbar] > n:
        raise InputError(f"center {xbar} is not in Omega_{n}")
    cn = level_constants(space, n)
    B1 = level_constants(space, n + 1).B
    c = 4.0 * B1 if c is None else float(c)
    if not c > 2 * B1:
        raise RangeError(f"c={c} must exceed 2 B_(n+1) = {2 * B1}")
    R0 = float(np.nextafter(2 * cn.eps, 0)) if R0 is None else float(R0)
    if not R0 < 2 * cn.eps:
        raise RangeError(f"R0={R0} must be below 2 eps_n = {2 * cn.eps}")
    if not (R > 0 and c * R <= R0):
        raise RangeError(f"need c R <= R0 with c={c}: R must be at most {R0 / c!r}")
    if not (0 < outer_a < 1 and 0 < outer_b < 1):
        raise RangeError("cutoff support fractions must lie in (0, 1)")
    od = order_alpha_distance(space, n + 1) if od is None else od
    fa = cutoff(space, od, xbar, outer_a * R * od.c_low / 2.0)
    fb = cutoff(space, od, xbar, outer_b * R * od.c_low / 2.0)
    K = kernel_matrix(spec, space)
    radii = {"c1": fa.inner / R, "c2": fa.outer / R, "c3": fb.inner / R, "c4": fb.outer / R,
             "alpha": od.alpha}
    return LocalizedKernel(spec, K, fa.values, fb.values, xbar, float(R), R0, c, n, radii)


def truncated_matrix(K, space, eps, rho_prime=None):
    rp = space.dist if rho_prime is None else rho_prime
    return np.where(rp > eps, K, 0.0)


def apply_truncated(Kt, space, f, eps, rho_prime=None):
    """(T_eps f)(x) = sum over rho'(x,y) > eps of Kt(x,y) f(y) mu(y)."""
    if not eps > 0:
        raise RangeError("eps must be positive")
    f = np.asarray(f, dtype=float)
    return truncated_matrix(Kt, space, eps, rho_prime) @ (f * space.weights)


def apply_full(Kt, space, f):
    """Untruncated sum; the eps -> 0 limit is reached below the smallest distance."""
    return np.asarray(Kt) @ (np.asarray(f, dtype=float) * space.weights)


def apply_fractional(Kt, space, f, S=None):
    """I_nu f(x) = sum over y in S of Kt(x,y) f(y) mu(y) for a nonnegative kernel."""
    Kt = np.asarray(Kt)
    if np.any(Kt < 0):
        raise InputError("fractional integral kernel must be nonnegative")
    f = np.asarray(f, dtype=float)
    g = f * space.weights
    if S is not None:
        mask = np.zeros(space.N, dtype=bool)
        mask[S] = True
        g = np.where(mask, g, 0.0)
    return Kt @ g


# -- kernel checks ---------------------------------------------------------------


def check_standard_estimates(K, space, S, nu=0.0, M=2.0, beta=1.0):
    """Minimal A and B in the size and smoothness estimates over S, with witnesses."""
    S = np.asarray(S, dtype=int)
    D = space.dist[np.ix_(S, S)]
    V = space.ball_measure[np.ix_(S, S)]
    Ks = np.asarray(K)[np.ix_(S, S)]
    off = ~np.eye(S.size, dtype=bool)
    A, a_wit = 0.0, None
    if off.any():
        q = np.where(off, np.abs(Ks) * V / np.where(off, D, 1.0) ** nu, 0.0)
        k = int(np.argmax(q))
        A = float(q.flat[k])
        a_wit = (int(S[k // S.size]), int(S[k % S.size]))
    Bc, b_wit = 0.0, None
    for i in range(S.size):
        d0x = D[i]  # rho(x0, x) over x
        d0y = D[i]  # rho(x0, y) over y
        adm = (d0y[None, :] > M * d0x[:, None]) & (d0x[:, None] > 0)
        if not adm.any():
            continue
        lhs = np.abs(Ks[i][None, :] - Ks) + np.abs(Ks[:, i][None, :] - Ks.T)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = d0y[None, :] ** nu / V[i][None, :] * (d0x[:, None] / d0y[None, :]) ** beta
            q = np.where(adm, lhs / scale, 0.0)
        k = int(np.argmax(q))
        if q.flat[k] > Bc:
            Bc = float(q.flat[k])
            b_wit = (int(S[i]), int(S[k // S.size]), int(S[k % S.size]))
    return {"A": A, "A_witness": a_wit, "B": Bc, "B_witness": b_wit}


def check_cancellation(K, space, x, shells=None, S=None, rho_prime=None):
    """max over eps1 < eps2 in ``shells`` of the two shell sums around x."""
    x = space._pid(x)
    K = np.asarray(K)
    rp = space.dist if rho_prime is None else rho_prime
    row = rp[x]
    w = space.weights.copy()
    if S is not None:
        mask = np.zeros(space.N, dtype=bool)
        mask[S] = True
        w = np.where(mask, w, 0.0)
    if shells is None:
        pos = np.unique(row[row > 0])
        shells = np.concatenate([[pos[0] / 2 if pos.size else 1.0], pos, [2 * pos[-1] if pos.size else 2.0]])
    shells = np.asarray(shells, dtype=float)
    if np.any(shells <= 0) or np.any(np.diff(shells) <= 0):
        raise InputError("shell radii must be positive and increasing")
    order = np.argsort(row)
    srt = row[order]
    out_terms = K[x][order] * w[order]
    in_terms = K[:, x][order] * w[order]
    c_out = np.concatenate([[0.0], np.cumsum(out_terms)])
    c_in = np.concatenate([[0.0], np.cumsum(in_terms)])
    lo = np.searchsorted(srt, shells, side="right")  # rho' > eps1
    hi = np.searchsorted(srt, shells, side="left")  # rho' < eps2
    best = 0.0
    for i in range(len(shells)):
        s_out = c_out[hi[i + 1:]] - c_out[lo[i]]
        s_in = c_in[hi[i + 1:]] - c_in[lo[i]]
        if s_out.size:
            best = max(best, float((np.abs(s_out) + np.abs(s_in)).max()))
    return best


def convergence_check(Kt, space, x, eps_grid, gamma=None, S=None, rho_prime=None):
    """Partial sums of Kt(x, .) over rho'(x,y) > eps, their limit and the Hoelder seminorm of h."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps_grid) >= 0) or np.any(eps_grid <= 0):
        raise InputError("eps grid must be positive and strictly decreasing")
    rp = space.dist if rho_prime is None else rho_prime
    w = space.weights.copy()
    if S is not None:
        mask = np.zeros(space.N, dtype=bool)
        mask[S] = True
        w = np.where(mask, w, 0.0)
    Kt = np.asarray(Kt)
    x = space._pid(x)
    # fsum is correctly rounded, so exactly cancelling terms give exactly 0
    terms = Kt[x] * w
    partial = [math.fsum(terms[rp[x] > e]) for e in eps_grid]
    pos = rp[x][rp[x] > 0]
    mind = pos.min() if pos.size else np.inf
    below = np.flatnonzero(eps_grid < mind)
    h = Kt @ w
    h[x] = math.fsum(terms)
    out = {"partial_sums": partial, "limit": float(h[x]),
           "stabilization_index": int(below[0]) if below.size else None}
    if gamma is not None:
        out["holder_seminorm"] = holder_seminorm(space, h, gamma, S)
    return out


# -- norms --------------------------------------------------------------------------


def lp_norm(f, w, p):
    f = np.abs(np.asarray(f, dtype=float))
    if np.isinf(p):
        return float(f.max()) if f.size else 0.0
    return float((f**p * w).sum() ** (1.0 / p))


def exact_p2_norm(Kt, space, S, tol=1e-9, max_iter=20000):
    """Spectral norm of W^(1/2) K W^(1/2) on S by power iteration.

    The Gram matrix is squared a few times first, which sharpens the eigenvector
    estimate; the norm is the Rayleigh quotient of the original Gram matrix.
    """
    S = np.asarray(S, dtype=int)
    sw = np.sqrt(space.weights[S])
    Sm = sw[:, None] * np.asarray(Kt)[np.ix_(S, S)] * sw[None, :]
    G = Sm.T @ Sm
    scale = np.abs(G).max() if G.size else 0.0
    if scale == 0:
        return 0.0
    P = G / scale
    for _ in range(4):
        P = P @ P
        m = np.abs(P).max()
        if m == 0:
            break
        P /= m
    rng = np.random.default_rng(12345)
    v = np.ones(len(S)) + 0.1 * rng.standard_normal(len(S))
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = P @ v
        nu_ = np.linalg.norm(u)
        if nu_ == 0:
            u = G @ v
            nu_ = np.linalg.norm(u)
            if nu_ == 0:
                return 0.0
        v_new = u / nu_
        new = float(v_new @ G @ v_new)
        if abs(new - lam) <= tol * 1e-4 * max(new, 1e-300) and np.linalg.norm(v_new - v) < 1e-12:
            return float(np.sqrt(new))
        v, lam = v_new, new
    warnings.warn("power iteration hit its iteration cap; returning last iterate", RuntimeWarning)
    return float(np.sqrt(lam))


def _mc_batch(Kt, space, S, p, q, seed, count):
    rng = np.random.default_rng(seed)
    w = space.weights[S]
    Ks = np.asarray(Kt)[np.ix_(S, S)]
    best = 0.0
    for t in range(count):
        f = rng.standard_normal(len(S)) if t % 2 == 0 else rng.choice([-1.0, 1.0], len(S))
        nf = lp_norm(f, w, p)
        if nf > 0:
            best = max(best, lp_norm(Ks @ (f * w), w, q) / nf)
    return best


def estimate_operator_norm(Kt, space, S, p=2.0, q=None, trials=64, seed=0, jobs=1):
    """Monte-Carlo lower bound for ||T||_{L^p -> L^q} on S, plus the exact value when p = q = 2."""
    q = p if q is None else q
    if trials < 1:
        raise InputError("trials must be >= 1")
    if not (p > 1 and q > 1):
        raise InputError("p and q must exceed 1")
    S = np.asarray(S, dtype=int)
    chunks = max(1, min(int(jobs), trials))
    seeds = np.random.SeedSequence(seed).spawn(chunks)
    sizes = [trials // chunks + (i < trials % chunks) for i in range(chunks)]
    args = [(Kt, space, S, p, q, s, c) for s, c in zip(seeds, sizes)]
    if chunks == 1:
        vals = [_mc_batch(*args[0])]
    else:
        with ThreadPoolExecutor(max_workers=chunks) as ex:
            vals = list(ex.map(lambda a: _mc_batch(*a), args))
    out = {"monte_carlo_lower_bound": max(vals), "trials": trials, "p": p, "q": q}
    if p == 2 and q == 2:
        out["exact_p2_norm"] = exact_p2_norm(Kt, space, S)
    return out


def weak11_constant(Kt, space, f, S=None, t_grid=None):
    """max over t of t mu{x in S : |Tf(x)| > t} / ||f||_1.

    Without ``t_grid`` the supremum over all t > 0 is taken exactly: it is
    approached as t rises to a value of |Tf|.
    """
    S = space.points if S is None else np.asarray(S, dtype=int)
    f = np.asarray(f, dtype=float)
    g = np.abs(apply_full(Kt, space, f))[S]
    w = space.weights[S]
    n1 = lp_norm(f[S], w, 1)
    if n1 == 0:
        return 0.0
    if t_grid is None:
        vals = np.unique(g[g > 0])
        if vals.size == 0:
            return 0.0
        meas = np.array([w[g >= v].sum() for v in vals])
        return float((vals * meas).max() / n1)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise InputError("t grid must be positive")
    meas = np.array([w[g > s].sum() for s in t])
    return float((t * meas).max() / n1)


def holder_transfer_ratio(Kt, space, f, eta, inner, outer):
    """||Tf||_{C^eta(inner)} / ||f||_{C^eta(outer)}."""
    from .analysis import holder_norm

    Tf = apply_full(Kt, space, f)
    den = holder_norm(space, f, eta, outer)
    return holder_norm(space, Tf, eta, inner) / den if den > 0 else 0.0
