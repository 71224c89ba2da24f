import math

import numpy as np
import pytest

from eqtrack import games as G
from eqtrack.geometry import (
    JointDistribution,
    build_polytope,
    distance,
    membership,
    regret_to_distance_bound,
    tracking_error,
)

SQRT2 = math.sqrt(2.0)


def random_game(rng, ks=(2, 2)):
    space = G.ActionSpace(len(ks), ks)
    return G.StageGame(space, rng.uniform(-1, 1, (len(ks), space.outcome_count)), 1.0)


def random_distribution(rng, size):
    p = rng.dirichlet(np.ones(size))
    return JointDistribution(p)


# ---------------------------------------------------------------- fixtures


def test_fragile_game_polytope_is_single_vertex():
    game = G.fragile_cce_game(0.1)
    poly = build_polytope(game, "hannan", 0.0)
    nash = JointDistribution([1, 0, 0, 0])
    assert membership(nash, poly)
    # every other vertex of the simplex is strictly outside
    for i in (1, 2, 3):
        q = JointDistribution.point_mass(4, i)
        assert not membership(q, poly)
        assert distance(q, poly, 2).value > 0.5


def test_fragile_game_eps_membership_and_distance():
    game = G.fragile_cce_game(0.1)
    tight = build_polytope(game, "hannan", 0.0)
    relaxed = build_polytope(game, "hannan", 0.1)
    q = JointDistribution([0, 1, 0, 0])
    assert not membership(q, tight)
    assert membership(q, relaxed)
    rep = distance(q, tight, 2)
    assert rep.value == pytest.approx(SQRT2, abs=1e-7)
    assert rep.gap_certificate <= 1e-8


def test_top_row_dominant_hannan_segment():
    game = G.top_row_dominant_game(0.1)
    poly = build_polytope(game, "hannan", 0.0)
    for alpha in (0.0, 0.5, 1.0):
        assert membership(JointDistribution([alpha, 1 - alpha, 0, 0]), poly)
    assert not membership(JointDistribution([0, 0, 1, 0]), poly)
    assert not membership(JointDistribution([0, 0, 0, 1]), poly)
    # closest point on the segment from the bottom-left corner: alpha = 1/2
    rep = distance(JointDistribution([0, 0, 1, 0]), poly, 2)
    grid = min(
        math.sqrt(a * a + (1 - a) * (1 - a) + 1.0) for a in np.linspace(0, 1, 100001)
    )
    assert rep.value == pytest.approx(grid, abs=1e-6)
    assert rep.value == pytest.approx(math.sqrt(1.5), abs=1e-7)


def test_matching_pennies_uniform_is_hannan():
    poly = build_polytope(G.matching_pennies(), "hannan", 0.0)
    u = JointDistribution.uniform(4)
    assert membership(u, poly)
    assert np.max(poly.violations(u.p)) == pytest.approx(0.0, abs=1e-15)


def test_dominant_game_nash_point_mass_member():
    game = G.logit_pricing_game(4, 0.75, 1, [1, 2])
    poly = build_polytope(game, "hannan", 0.0)
    nash = JointDistribution.point_mass(4, game.space.index_of((1, 1)))
    assert membership(nash, poly)
    assert distance(nash, poly, 2).value == 0.0


def test_row_counts():
    game = random_game(np.random.default_rng(0), (2, 3))
    assert build_polytope(game, "hannan").rows.shape[0] == 2 + 3
    assert build_polytope(game, "correlated").rows.shape[0] == 4 + 9


# ---------------------------------------------------------------- solver properties


def test_membership_dimension_mismatch():
    poly = build_polytope(G.matching_pennies(), "hannan")
    with pytest.raises(ValueError):
        membership(JointDistribution([0.5, 0.5]), poly)
    with pytest.raises(ValueError):
        distance(JointDistribution([0.5, 0.5]), poly, 2)


def test_distance_witness_feasible_and_achieves_value():
    rng = np.random.default_rng(3)
    for _ in range(25):
        game = random_game(rng)
        poly = build_polytope(game, "hannan", 0.0)
        q = random_distribution(rng, 4)
        for p in (1, 2, "inf"):
            rep = distance(q, poly, p)
            assert membership(rep.witness, poly, tol=1e-7)
            ord_p = {1: 1, 2: 2, "inf": np.inf}[p]
            assert np.linalg.norm(q.p - rep.witness, ord_p) == pytest.approx(rep.value, abs=1e-6)
            if p == 2:
                assert rep.gap_certificate <= 1e-8


def test_distance_zero_iff_membership():
    rng = np.random.default_rng(4)
    for _ in range(40):
        game = random_game(rng)
        poly = build_polytope(game, "hannan", 0.0)
        q = random_distribution(rng, 4)
        d = distance(q, poly, 2).value
        if membership(q, poly, tol=1e-7):
            assert d <= 2e-4  # tiny violation can move the projection a bit
        else:
            assert d > 0
        if d <= 1e-9:
            assert membership(q, poly, tol=1e-7)


def test_distance_monotone_in_epsilon():
    rng = np.random.default_rng(5)
    game = random_game(rng)
    q = JointDistribution.point_mass(4, 3)
    last = math.inf
    for eps in (0.0, 0.05, 0.1, 0.5, 2.0):
        poly = build_polytope(game, "hannan", eps)
        d = distance(q, poly, 2).value
        assert d <= last + 1e-9
        last = d


def test_correlated_subset_of_hannan():
    rng = np.random.default_rng(6)
    for _ in range(30):
        game = random_game(rng, ks=(2, 2) if rng.random() < 0.7 else (2, 3))
        ce = build_polytope(game, "correlated", 0.0)
        cce = build_polytope(game, "hannan", 0.0)
        q = random_distribution(rng, game.space.outcome_count)
        if membership(q, ce):
            assert membership(q, cce)
        # also check a CE witness itself
        w = distance(q, ce, 2).witness
        assert membership(w, cce, tol=1e-6)


def test_point_mass_distance_cap():
    rng = np.random.default_rng(7)
    for p, cap in ((1, 2.0), (2, SQRT2), ("inf", 1.0)):
        q0 = np.zeros(4)
        q0[0] = 1.0
        q1 = np.zeros(4)
        q1[2] = 1.0
        ord_p = {1: 1, 2: 2, "inf": np.inf}[p]
        assert np.linalg.norm(q0 - q1, ord_p) == pytest.approx(cap)
        # distances to a polytope never exceed the simplex diameter
        game = random_game(rng)
        poly = build_polytope(game, "hannan", 0.0)
        assert distance(JointDistribution(q1), poly, p).value <= cap + 1e-9


def test_l1_matches_l2_on_singleton():
    game = G.fragile_cce_game(0.1)
    poly = build_polytope(game, "hannan", 0.0)
    q = JointDistribution([0, 1, 0, 0])
    d1 = distance(q, poly, 1).value
    d2 = distance(q, poly, 2).value
    # witness is the unique member, so norms relate exactly on the difference
    assert d1 == pytest.approx(2.0, abs=1e-9)
    assert d2 == pytest.approx(SQRT2, abs=1e-7)


def test_joint_distribution_sanitation():
    q = JointDistribution([0.25, 0.25, 0.25, 0.25 - 5e-10])
    assert q.p.sum() == pytest.approx(1.0, abs=1e-12)
    q = JointDistribution([0.5, 0.5, -5e-13, 0.0])
    assert q.p[2] == 0.0
    with pytest.raises(ValueError):
        JointDistribution([0.5, 0.4, 0.0, 0.0])
    with pytest.raises(ValueError):
        JointDistribution([0.6, 0.5, -0.1, 0.0])


# ---------------------------------------------------------------- tracking error


def test_tracking_error_constant_sequence():
    game = G.logit_pricing_game(4, 0.75, 1, [1, 2])
    seq = G.GameSequence([(game, 10)])
    nash = JointDistribution.point_mass(4, game.space.index_of((1, 1)))
    rep = tracking_error(seq, [nash], "hannan", 2)
    assert rep.error == 0.0
    off = JointDistribution.point_mass(4, 0)
    rep = tracking_error(seq, [off], "hannan", 2)
    single = distance(off, build_polytope(game, "hannan"), 2).value
    assert rep.error == pytest.approx(10 * single, abs=1e-9)


def test_tracking_error_pricing_clinging_to_first_nash():
    seq = G.pricing_season_sequence(10)
    space = seq.space
    hh = JointDistribution.point_mass(4, space.index_of((1, 1)))
    rep = tracking_error(seq, [hh, hh], "hannan", 2)
    # first batch distance 0; second batch Hannan set is the low-price Nash
    assert rep.per_batch[0]["distance"] == pytest.approx(0.0, abs=1e-9)
    assert rep.per_batch[1]["distance"] == pytest.approx(SQRT2, abs=1e-7)
    assert rep.error == pytest.approx(5 * SQRT2, abs=1e-6)
    assert rep.per_period == pytest.approx(rep.error / 10)


def test_tracking_error_alignment_error():
    seq = G.pricing_season_sequence(10)
    with pytest.raises(ValueError):
        tracking_error(seq, [JointDistribution.uniform(4)], "hannan", 2)


def test_tracking_error_all_members_zero():
    seq = G.pricing_season_sequence(12)
    space = seq.space
    d1 = JointDistribution.point_mass(4, space.index_of((1, 1)))
    d2 = JointDistribution.point_mass(4, space.index_of((0, 0)))
    assert tracking_error(seq, [d1, d2], "hannan", 2).error == 0.0


# ---------------------------------------------------------------- bound estimation


def test_regret_to_distance_bound_shapes():
    game = G.fragile_cce_game(0.1)
    assert regret_to_distance_bound(game, 0.0, 2).value == 0.0
    big = regret_to_distance_bound(game, 100.0, 2)
    assert big.value == pytest.approx(SQRT2)
    mid = regret_to_distance_bound(game, 0.1, 2)
    # the far corner is eps-feasible at eps = delta, so the constant is at
    # least sqrt(2)/0.1
    assert mid.const_estimate >= SQRT2 / 0.1 - 1e-6
    assert mid.value == pytest.approx(SQRT2)  # min(const*eps, cap) hits the cap
