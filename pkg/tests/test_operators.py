import numpy as np
import pytest

from helpers import line, matrix_space
from locahal import oracles
from locahal.errors import InputError, RangeError
from locahal.operators import (KernelSpec, apply_fractional, apply_full, apply_truncated, check_cancellation,
                               check_standard_estimates, convergence_check, estimate_operator_norm,
                               exact_p2_norm, kernel_matrix, localize, weak11_constant)
from locahal.space import generate


def swap_space():
    return matrix_space([[0, 1], [1, 0]])


SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture(scope="module")
def grid():
    return generate("euclidean-grid", dim=1, side=61, levels=2)


def test_localized_kernel_support(grid):
    L = localize(KernelSpec("antisymmetric-model"), grid, 1, 30, 1.0)
    Kt = L.Kt
    assert (Kt[L.a == 0] == 0).all()
    assert (Kt[:, L.b == 0] == 0).all()
    both = np.flatnonzero((L.a == 1) & (L.b == 1))
    assert both.size >= 1
    assert np.array_equal(Kt[np.ix_(both, both)], L.K[np.ix_(both, both)])


def test_localize_rejects_bad_parameters(grid):
    spec = KernelSpec("riesz-model")
    with pytest.raises(RangeError):
        localize(spec, grid, 1, 30, 100.0)
    with pytest.raises(RangeError):
        localize(spec, grid, 1, 30, 0.5, c=1.0)
    with pytest.raises(InputError):
        localize(spec, grid, 1, 0, 0.5)


def test_standard_estimate_equality_case():
    sp = line(8)
    K = kernel_matrix(KernelSpec("riesz-model", nu=0.0), sp)
    est = check_standard_estimates(K, sp, sp.points, nu=0.0)
    assert est["A"] == 1.0


def test_zero_kernel_has_zero_constants():
    sp = line(6)
    est = check_standard_estimates(np.zeros((6, 6)), sp, sp.points)
    assert est["A"] == 0.0 and est["B"] == 0.0
    assert check_cancellation(np.zeros((6, 6)), sp, 2) == 0.0


def test_sign_kernel_constants_match_sweep():
    sp = line(9)
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    est = check_standard_estimates(K, sp, sp.points, nu=0.0, M=4.0)
    D, V = sp.dist, sp.ball_measure
    A = max(abs(K[x, y]) * V[x, y] for x in range(9) for y in range(9) if x != y)
    B = 0.0
    for x0 in range(9):
        for x in range(9):
            for y in range(9):
                if D[x0, x] > 0 and D[x0, y] > 4 * D[x0, x]:
                    lhs = abs(K[x0, y] - K[x, y]) + abs(K[y, x0] - K[y, x])
                    B = max(B, lhs * V[x0, y] * D[x0, y] / D[x0, x])
    assert est["A"] == A
    assert abs(est["B"] - B) <= 1e-12 * B


def test_antisymmetric_cancellation_at_center():
    sp = line(21)
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    assert np.array_equal(K, -K.T)
    assert check_cancellation(K, sp, 10) == 0.0


def test_positive_kernel_shell_sums():
    sp = line(9)
    K = kernel_matrix(KernelSpec("riesz-model", nu=0.0), sp)
    x = 4
    shells = np.array([0.5, 1.5, 2.5, 10.0])
    got = check_cancellation(K, sp, x, shells)
    best = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            sel = [y for y in range(9) if shells[i] < sp.dist[x, y] < shells[j]]
            s_out = sum(sp.weights[y] / sp.ball_measure[x, y] for y in sel)
            s_in = sum(sp.weights[y] / sp.ball_measure[y, x] for y in sel)
            best = max(best, s_out + s_in)
    assert abs(got - best) <= 1e-12 * best


def test_truncation_examples():
    sp = line(5)
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    assert not apply_truncated(K, sp, np.ones(5), 10.0).any()
    one = line(1)
    assert apply_truncated(np.zeros((1, 1)), one, [3.0], 0.1).tolist() == [0.0]
    assert apply_truncated(SWAP, swap_space(), [2.0, 5.0], 0.5).tolist() == [5.0, 2.0]
    with pytest.raises(RangeError):
        apply_truncated(K, sp, np.ones(5), 0.0)


def test_fractional_examples():
    sp = line(7)
    K = kernel_matrix(KernelSpec("riesz-model", nu=0.5), sp)
    assert not apply_fractional(K, sp, np.zeros(7)).any()
    e = np.zeros(7)
    e[2] = 1.0
    assert np.array_equal(apply_fractional(K, sp, e), K[:, 2] * sp.weights[2])
    f = np.arange(7.0)
    direct = [sum(sp.ball_measure[x, y] ** -0.5 * f[y] for y in range(7) if y != x) for x in range(7)]
    assert np.allclose(apply_fractional(K, sp, f), direct, rtol=1e-13, atol=0)
    with pytest.raises(InputError):
        apply_fractional(-K, sp, f)


def test_norm_examples():
    sp = swap_space()
    z = estimate_operator_norm(np.zeros((2, 2)), sp, [0, 1])
    assert z["monte_carlo_lower_bound"] == 0.0 and z["exact_p2_norm"] == 0.0
    est = estimate_operator_norm(SWAP, sp, [0, 1])
    assert abs(est["exact_p2_norm"] - 1.0) < 1e-12
    assert est["monte_carlo_lower_bound"] <= est["exact_p2_norm"] + 1e-12


def test_exact_norm_matches_dense_eigensolve():
    rng = np.random.default_rng(7)
    sp = line(30, weights=rng.uniform(0.5, 2, 30))
    K = rng.standard_normal((30, 30))
    assert abs(exact_p2_norm(K, sp, sp.points) - oracles.p2_norm_dense(K, sp.weights, sp.points)) < 1e-9


def test_norm_is_seed_deterministic_across_jobs(grid):
    K = kernel_matrix(KernelSpec("antisymmetric-model"), grid)
    S = np.arange(20, 41)
    a = estimate_operator_norm(K, grid, S, 3.0, 3.0, trials=16, seed=5, jobs=1)
    b = estimate_operator_norm(K, grid, S, 3.0, 3.0, trials=16, seed=5, jobs=1)
    assert a == b
    c = estimate_operator_norm(K, grid, S, 3.0, 3.0, trials=16, seed=5, jobs=4)
    d = estimate_operator_norm(K, grid, S, 3.0, 3.0, trials=16, seed=5, jobs=4)
    assert c == d


def test_weak11_examples():
    sp = line(5)
    assert weak11_constant(np.eye(5), sp, np.zeros(5)) == 0.0
    f = np.zeros(5)
    f[3] = 1.0
    assert weak11_constant(np.eye(5), sp, f, t_grid=[0.5]) == 0.5
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    g = np.random.default_rng(1).standard_normal(5)
    assert weak11_constant(K, sp, g) == weak11_constant(K, sp, 2 * g)


def test_convergence_examples():
    sp = line(21)
    z = convergence_check(np.zeros((21, 21)), sp, 10, [3.0, 1.0, 0.5], gamma=0.5)
    assert z["limit"] == 0.0 and z["holder_seminorm"] == 0.0
    K = kernel_matrix(KernelSpec("antisymmetric-model"), sp)
    out = convergence_check(K, sp, 10, [4.0, 2.0, 1.5, 0.5, 0.25])
    assert out["limit"] == 0.0
    assert out["stabilization_index"] == 3
    with pytest.raises(InputError):
        convergence_check(K, sp, 10, [0.5, 1.0])


def test_apply_full_is_the_small_eps_limit(grid):
    K = kernel_matrix(KernelSpec("antisymmetric-model"), grid)
    f = np.random.default_rng(2).standard_normal(grid.N)
    assert np.array_equal(apply_full(K, grid, f), apply_truncated(K, grid, f, 0.5))


def test_kernel_file_parsing():
    spec = KernelSpec.from_dict({"type": "riesz-model", "nu": 0.25})
    assert spec.nu == 0.25
    with pytest.raises(InputError):
        KernelSpec.from_dict({"nu": 0.1})
    with pytest.raises(InputError):
        KernelSpec(kind="riesz-model", nu=1.5)


def test_positive_model_norm_roughly_independent_of_R():
    from locahal.suite import builtin_space, central_point

    sp = builtin_space("wide1d-quick")
    x = central_point(sp, 1)
    R = float(np.nextafter(2 * sp_eps(sp), 0)) / 8
    norms = []
    for r in (R, R / 2, R / 4):
        L = localize(KernelSpec("riesz-model", nu=0.0), sp, 1, x, r)
        S = np.flatnonzero(sp.row(x) < r)
        norms.append(exact_p2_norm(L.Kt, sp, S))
        assert abs(norms[-1] - oracles.p2_norm_dense(L.Kt, sp.weights, S)) <= 1e-9 * norms[-1]
    assert max(norms) <= 4 * min(norms)


def sp_eps(sp):
    from locahal.space import level_constants

    return level_constants(sp, 1).eps
