"""Hypothesis checks of the structural invariants on random small spaces."""

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from locahal import oracles
from locahal.analysis import cutoff, cutoff_checks, holder_seminorm, order_alpha_distance
from locahal.bmo import bmo_loc_modulus, commutator_apply, oscillation_about, positive_commutator_apply
from locahal.dyadic import build_system, verify_properties
from locahal.errors import AxiomViolation
from locahal.maximal import local_maximal, maximal_radius, vitali_select
from locahal.operators import KernelSpec, apply_fractional, apply_truncated, estimate_operator_norm, kernel_matrix
from locahal.space import (FiniteSpace, ball, check_sandwich, estimate_constants, level_constants, symmetrize)


@st.composite
def point_spaces(draw, dim=None, max_n=14):
    dim = draw(st.sampled_from([1, 2])) if dim is None else dim
    pts = draw(st.lists(st.tuples(*[st.integers(0, 40)] * dim), min_size=2, max_size=max_n, unique=True))
    n = len(pts)
    w = draw(st.lists(st.floats(0.5, 3.0), min_size=n, max_size=n))
    lv = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    lv[0] = 1
    return FiniteSpace(w, lv, "euclidean", coords=np.array(pts, dtype=float))


@st.composite
def matrix_spaces(draw, symmetric=False, max_n=9):
    n = draw(st.integers(2, max_n))
    vals = draw(st.lists(st.floats(0.5, 10.0), min_size=n * n, max_size=n * n))
    D = np.array(vals).reshape(n, n)
    if symmetric:
        D = np.triu(D, 1) + np.triu(D, 1).T
    np.fill_diagonal(D, 0.0)
    lv = draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    lv[0] = 1
    return FiniteSpace(np.ones(n), lv, "matrix", matrix=D)


functions = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


# -- space -----------------------------------------------------------------------------


@given(matrix_spaces(), st.data())
def test_h1_exhaustive(sp, data):
    D = sp.dist.copy()
    i = data.draw(st.integers(0, sp.N - 1))
    j = data.draw(st.integers(0, sp.N - 1).filter(lambda k: k != i))
    D[i, j] = 0.0
    with pytest.raises(AxiomViolation) as exc:
        FiniteSpace(np.ones(sp.N), sp.levels, "matrix", matrix=D)
    assert exc.value.axiom == "(H1)(a)"


@given(point_spaces(), st.floats(0.1, 30), st.floats(0.1, 30))
def test_ball_monotone(sp, r1, r2):
    lo, hi = sorted((r1, r2))
    for x in range(sp.N):
        assert set(ball(sp, x, lo)) <= set(ball(sp, x, hi))


@given(matrix_spaces())
def test_symmetrize_symmetric_and_sandwiched(sp):
    s = symmetrize(sp)
    assert np.array_equal(s.dist, s.dist.T)
    for n in range(1, sp.max_level + 1):
        ok, A, _ = check_sandwich(sp, s, n)
        assert ok


@given(matrix_spaces(max_n=7))
def test_B_is_the_oracle_minimum(sp):
    for n in range(1, sp.max_level + 1):
        om = sp.omega(n)
        c = estimate_constants(sp, n)
        sweep = oracles.quasitriangle_sweep(sp.dist[np.ix_(om, om)].tolist())
        if om.size >= 2:
            assert abs(c.witnesses["B_raw"] - sweep) <= 1e-12 * sweep
        assert c.B == max(2.0, c.witnesses["B_raw"])


@given(point_spaces())
def test_engulfing(sp):
    for n in range(1, sp.max_level + 1):
        eps = level_constants(sp, n).eps
        if not np.isfinite(eps):
            continue
        nxt = sp.omega_mask(n + 1)
        for x in sp.omega(n):
            assert nxt[ball(sp, int(x), 2 * eps)].all()


# -- dyadic ----------------------------------------------------------------------------


@given(point_spaces(max_n=12), st.one_of(st.none(), st.integers(0, 1000)))
def test_dyadic_properties_hold(sp, seed):
    system = build_system(sp, 1, seed=seed)
    rep = verify_properties(system)
    assert rep.ok, [(c.name, c.witness) for c in rep.failures()]


@given(point_spaces(max_n=12))
def test_cube_monotone_along_the_tree(sp):
    system = build_system(sp, 1, delta=1 / 896)
    for i in range(1, len(system.cubes)):
        child, parent = system.cubes[i], system.cubes[i - 1][system.parents[i]]
        assert not (child & ~parent).any()


# -- analysis --------------------------------------------------------------------------


@given(matrix_spaces(symmetric=True))
def test_chain_triangle_exact(sp):
    od = order_alpha_distance(sp, sp.max_level)
    m = od.m
    for k in range(m.shape[0]):
        assert not (m > m[:, k, None] + m[None, k, :]).any()
    # d is a quasidistance with constant 2^(1/alpha - 1)
    d = od.d
    K = 2 ** (1 / od.alpha - 1)
    acc = np.min(d[:, :, None] + d.T[None, :, :], axis=1)
    assert (d <= K * acc * (1 + 1e-12)).all()


@given(point_spaces(dim=1), functions, st.floats(0.1, 1.0), st.floats(-3, 3))
def test_holder_subadditive_and_homogeneous(sp, rng, eta, lam):
    f, g = rng.standard_normal(sp.N), rng.standard_normal(sp.N)
    hf, hg = holder_seminorm(sp, f, eta), holder_seminorm(sp, g, eta)
    assert holder_seminorm(sp, f + g, eta) <= (hf + hg) * (1 + 1e-12)
    assert abs(holder_seminorm(sp, lam * f, eta) - abs(lam) * hf) <= 1e-12 * max(hf, 1e-300) * (1 + abs(lam))


@given(st.integers(12, 30), st.floats(0.6, 3.0))
def test_cutoff_sandwich_and_holder_bound(side, r):
    from locahal.space import generate

    sp = generate("euclidean-grid", dim=1, side=side, levels=1)
    od = order_alpha_distance(sp, 1)
    x0 = side // 2
    assume(np.all(sp.row(x0)[sp.row(x0) < 2 * r / od.c_low] >= 0))
    try:
        cf = cutoff(sp, od, x0, r)
    except Exception:
        assume(False)
    assert all(cutoff_checks(sp, cf))
    D = sp.dist / r
    off = D > 0
    dif = np.abs(cf.values[:, None] - cf.values[None, :])
    assert (dif[off] <= cf.holder_constant * D[off] ** cf.alpha * (1 + 1e-12)).all()


# -- operators -------------------------------------------------------------------------


@given(point_spaces(), functions, st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5))
def test_truncated_linearity(sp, rng, a, b, eps):
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    f, g = rng.standard_normal(sp.N), rng.standard_normal(sp.N)
    lhs = apply_truncated(K, sp, a * f + b * g, eps)
    rhs = a * apply_truncated(K, sp, f, eps) + b * apply_truncated(K, sp, g, eps)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), np.abs(K).max() * (abs(a) + abs(b)), 1e-300)
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale * sp.N


@given(point_spaces(), functions, st.floats(0.0, 0.9))
def test_fractional_positivity(sp, rng, nu):
    K = kernel_matrix(KernelSpec("riesz-model", nu=nu), sp)
    f = np.abs(rng.standard_normal(sp.N))
    assert (apply_fractional(K, sp, f) >= 0).all()


@given(point_spaces(max_n=10), st.integers(0, 1000))
def test_monte_carlo_below_exact(sp, seed):
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    est = estimate_operator_norm(K, sp, sp.points, trials=8, seed=seed)
    assert est["monte_carlo_lower_bound"] <= est["exact_p2_norm"] * (1 + 1e-9)


# -- bmo -------------------------------------------------------------------------------


@given(point_spaces(dim=1), functions, st.floats(-10, 10), st.sampled_from([-4.0, -0.5, 0.25, 2.0]))
def test_modulus_translation_scaling_monotone(sp, rng, c, lam):
    eps = level_constants(sp, 1).eps
    assume(np.isfinite(eps))
    u = rng.standard_normal(sp.N)
    base = bmo_loc_modulus(sp, u, 1, eps)
    assert abs(bmo_loc_modulus(sp, u + c, 1, eps) - base) <= 1e-9 * max(base, 1e-12) * (1 + abs(c))
    assert bmo_loc_modulus(sp, lam * u, 1, eps) == abs(lam) * base
    assert bmo_loc_modulus(sp, u, 1, eps / 2) <= base


@given(point_spaces(), functions, st.floats(-3, 3))
def test_commutators_vanish_on_constants(sp, rng, c):
    f = rng.standard_normal(sp.N)
    a = np.full(sp.N, c)
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    P = kernel_matrix(KernelSpec("riesz-model", nu=0.2), sp)
    assert not commutator_apply(K, sp, a, f).any()
    assert not positive_commutator_apply(P, sp, a, f).any()


@given(point_spaces(), functions, st.floats(-3, 3), st.floats(0.5, 20))
def test_oscillation_about_any_constant(sp, rng, tau, r):
    u = rng.standard_normal(sp.N)
    for x in range(sp.N):
        B = ball(sp, x, r)
        assert oscillation_about(sp, u, B) <= 2 * oscillation_about(sp, u, B, tau) * (1 + 1e-12) + 1e-15


# -- maximal ---------------------------------------------------------------------------


@given(point_spaces(), functions)
def test_maximal_domination_sublinearity_homogeneity(sp, rng):
    om = sp.omega(1)
    f, g = rng.standard_normal(sp.N), rng.standard_normal(sp.N)
    Mf, Mg = local_maximal(sp, 1, f), local_maximal(sp, 1, g)
    assert (Mf[om] >= np.abs(f[om])).all()
    assert (local_maximal(sp, 1, f + g)[om] <= (Mf[om] + Mg[om]) * (1 + 4 * np.finfo(float).eps)).all()
    for lam in (2.0, -0.5, -4.0):
        assert np.array_equal(local_maximal(sp, 1, lam * f)[om], abs(lam) * Mf[om])


@given(point_spaces(), st.data())
def test_vitali_disjoint_and_covering(sp, data):
    c = level_constants(sp, 1)
    assume(np.isfinite(c.eps))
    r_n = maximal_radius(c.eps, c.B)
    om = sp.omega(1).tolist()
    fam = data.draw(st.lists(st.tuples(st.sampled_from(om), st.floats(r_n / 100, r_n)), min_size=1, max_size=8))
    kept, rep = vitali_select(sp, 1, fam)
    assert rep.ok
