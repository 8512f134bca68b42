import numpy as np
import pytest

from helpers import inner_levels, line
from locahal import oracles
from locahal.dyadic import (NetLayer, build_cubes, build_envelope, build_layers, build_system, build_tree,
                            choose_delta, envelope_context, envelope_stability, maximal_net, remark_delta,
                            set_doubling, system_from_dict, tree_checks, verify_envelope, verify_properties)
from locahal.errors import ConfigurationError, InputError, RangeError
from locahal.space import LevelConstants, level_constants


def consts(eps, B):
    return [LevelConstants(n=k, eps=eps, B=B, C=2.0) for k in (1, 2, 3)]


def test_remark_delta_value():
    assert remark_delta(0.5, 0.5, 2.0, 2.0) == 1 / 896
    p = choose_delta(consts(0.5, 2.0))
    assert p.delta == 1 / 896 and p.a0 == p.delta
    assert all(row[-1] for row in p.inequalities)


def test_large_eps_binds_on_the_B_term():
    p = choose_delta(consts(100.0, 2.0))
    assert p.delta == 0.5 / (14 * 2.0**5)


def test_kmax_on_unit_grid():
    p = choose_delta(consts(0.5, 2.0), min_distance=1.0)
    assert p.K_max == 1


def test_bad_delta_names_the_inequality():
    with pytest.raises(ConfigurationError) as exc:
        choose_delta(consts(0.5, 2.0), delta=0.1)
    assert exc.value.inequality.startswith(("delta", "azero"))
    with pytest.raises(ConfigurationError):
        choose_delta(consts(0.5, 2.0), delta=1.5)


def test_maximal_net_examples():
    sp = line(10)
    net = maximal_net(sp, np.arange(10), 3)
    assert net.tolist() == [0, 3, 6, 9]
    assert oracles.is_maximal_net(sp.dist, range(10), net, 3)
    assert maximal_net(sp, np.arange(10), 1).tolist() == list(range(10))
    assert maximal_net(sp, np.arange(10), 50).tolist() == [0]


def test_maximal_net_rejects_empty():
    with pytest.raises(InputError):
        maximal_net(line(3), [], 1.0)


def test_layers_on_grid_with_inner_level():
    sp = line(20, inner_levels(20, 5, 15))
    system = build_system(sp, 1)
    E1 = system.layers[0].layer_set
    assert E1.tolist() == list(range(5, 15))
    inside = sp.omega_mask(2)
    assert all(inside[L.layer_set].all() for L in system.layers)


def test_single_point_omega():
    sp = line(7, inner_levels(7, 3, 4))
    system = build_system(sp, 1)
    for L in system.layers:
        assert L.centers.tolist() == [3]
    rep = verify_properties(system)
    assert rep.ok
    assert rep.get("lower bounds cubes").measured["c2"] == 1.0


def test_layers_stabilise_below_min_distance():
    sp = line(12, inner_levels(12, 4, 8))
    params = choose_delta([level_constants(sp, k) for k in (1, 2, 3)], 1.0, delta=1 / 896)
    L = build_layers(sp, params, 1)
    assert L[0].centers.tolist() == list(range(4, 8))


def _scaled_two_scale_layers():
    sp = line(10, spacing=0.1)
    delta = 0.5
    l1 = maximal_net(sp, np.arange(10), delta)
    E2 = np.flatnonzero((sp.dist[l1] < delta).any(axis=0))
    l2 = maximal_net(sp, E2, delta**2)
    return sp, delta, [NetLayer(1, l1, np.arange(10)), NetLayer(2, l2, E2)]


def test_tree_on_explicit_nets():
    sp, delta, layers = _scaled_two_scale_layers()
    assert layers[0].centers.tolist() == [0, 5]
    assert layers[1].centers.tolist() == [0, 3, 6, 9]
    parents = build_tree(sp, layers, delta, 2.0)
    # frozen from hand simulation: 0 sits on 0, the rest are nearest to 5
    assert parents[1].tolist() == [0, 1, 1, 1]
    assert all(c.passed for c in tree_checks(sp, layers, parents, delta, 2.0))


def test_tree_parent_at_distance_zero_is_forced():
    sp, delta, layers = _scaled_two_scale_layers()
    parents = build_tree(sp, layers, delta, 2.0)
    up = layers[0].centers
    for a, z in enumerate(layers[1].centers):
        if z in up:
            assert up[parents[1][a]] == z


def test_tree_tie_break_lowest_id():
    sp = line(3, spacing=0.1)
    layers = [NetLayer(1, np.array([0, 2]), np.arange(3)), NetLayer(2, np.array([1]), np.arange(3))]
    parents = build_tree(sp, layers, 0.15, 2.0)
    assert parents[1].tolist() == [0]
    assert all(c.passed for c in tree_checks(sp, layers, parents, 0.15, 2.0))


def test_deepest_cubes_are_singletons():
    sp = line(10, inner_levels(10, 2, 8))
    system = build_system(sp, 1)
    K = system.K_max
    masks = system.cube_masks(K)
    assert (masks.sum(axis=1) == 1).all()
    assert system.cube_masks(K + 3).sum(axis=1).tolist() == [1] * masks.shape[0]


def test_cube_contains_its_ball():
    sp = line(10, inner_levels(10, 2, 8))
    system = build_system(sp, 1)
    p = system.params
    for a, z in enumerate(system.centers(1)):
        assert set(np.flatnonzero(sp.row(int(z)) < p.a0 * p.delta)) <= set(system.cube(1, a))


def test_single_point_space():
    from locahal.space import FiniteSpace

    sp = FiniteSpace([1.0], [1], "euclidean", coords=[[0.0]])
    system = build_system(sp, 1)
    assert system.cube(1, 0).tolist() == [0]
    assert verify_properties(system).ok


def test_verify_properties_on_grid():
    sp = line(20, inner_levels(20, 5, 15))
    rep = verify_properties(build_system(sp, 1))
    assert rep.ok
    assert rep.get("property (f) covers Omega_n (E empty)").status == "pass"


def test_same_scale_cubes_are_disjoint():
    sp = line(10, spacing=0.1)
    params = choose_delta([LevelConstants(k, 1.0, 2.0, 2.0) for k in (1, 2, 3)], 0.1, delta=1 / 896)
    layers = build_layers(sp, params, 1)
    parents = build_tree(sp, layers, params.delta, params.B_n)
    masks = build_cubes(sp, layers, parents, params)
    for M in masks:
        inter = M.astype(int) @ M.T.astype(int)
        assert (inter[~np.eye(len(M), dtype=bool)] == 0).all()


def test_verifier_catches_a_broken_cube():
    sp = line(20, inner_levels(20, 5, 15))
    system = build_system(sp, 1)
    system.cubes[0] = system.cubes[0].copy()
    system.cubes[0][0, 10] = True  # duplicate a point into the first cube
    rep = verify_properties(system)
    assert not rep.ok
    bad = {c.name for c in rep.failures()}
    assert "property (e) nested or disjoint" in bad
    assert all(c.witness is not None for c in rep.failures())


def test_system_json_round_trip():
    sp = line(12, inner_levels(12, 3, 9))
    system = build_system(sp, 1, seed=3)
    back = system_from_dict(system.to_dict())
    assert all(np.array_equal(a, b) for a, b in zip(back.cubes, system.cubes))
    assert verify_properties(back).ok


def test_seeded_trees_pass_axioms():
    from locahal.suite import builtin_space

    sp = builtin_space("multiscale")
    for s in range(5):
        system = build_system(sp, 1, seed=s)
        assert all(c.passed for c in tree_checks(sp, system.layers, system.parents, system.params.delta,
                                                 system.params.B_n))


# -- envelope ------------------------------------------------------------------


def _grid30():
    lv = np.full(30, 4)
    lv[10:20] = 1
    lv[7:10] = lv[20:23] = 2
    lv[4:7] = lv[23:26] = 3
    return line(30, lv)


def test_envelope_below_min_distance():
    sp = _grid30()
    ctx = envelope_context(sp, 1)
    env = build_envelope(sp, 1, 15, 0.5 * ctx.R_n, ctx)
    assert env.ball.tolist() == [15]
    assert 15 in env.F
    assert sp.omega_mask(3)[env.F].all()
    assert verify_envelope(env, sp).ok


def test_envelope_at_delta_squared():
    sp = _grid30()
    ctx = envelope_context(sp, 1)
    env = build_envelope(sp, 1, 12, ctx.delta**2, ctx)
    rep = verify_envelope(env, sp)
    assert rep.ok
    assert np.isfinite(env.measured["diam_over_R"]) and np.isfinite(env.measured["mu_ratio"])


def test_envelope_preconditions():
    sp = _grid30()
    ctx = envelope_context(sp, 1)
    with pytest.raises(InputError):
        build_envelope(sp, 1, 0, ctx.R_n, ctx)
    with pytest.raises(RangeError):
        build_envelope(sp, 1, 15, 2 * ctx.R_n, ctx)


def test_envelope_stability_on_multiscale():
    from locahal.suite import builtin_space, central_point

    sp = builtin_space("multiscale")
    rep, envs = envelope_stability(sp, 1, central_point(sp, 1))
    assert rep.ok
    ratios = [e.measured["diam_over_R"] for e in envs]
    assert max(ratios) <= 4 * min(ratios)
    # this space has a nontrivial envelope: F is more than the center
    assert len(envs[0].F) > 1


def test_envelope_equal_to_a_cube_has_that_cubes_doubling():
    from locahal.suite import builtin_space, central_point

    sp = builtin_space("multiscale")
    ctx = envelope_context(sp, 1)
    x = central_point(sp, 1)
    env = build_envelope(sp, 1, x, ctx.R_n, ctx)
    masks = ctx.sys_n1.cube_masks(env.k)
    same = [a for a in range(len(masks)) if np.array_equal(np.flatnonzero(masks[a]), env.F)]
    if same:
        assert set_doubling(sp, env.F) == set_doubling(sp, np.flatnonzero(masks[same[0]]))
    else:
        pytest.skip("envelope is a union of several cubes here")
