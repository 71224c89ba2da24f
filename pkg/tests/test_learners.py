import math

import numpy as np
import pytest

from eqtrack import games as G
from eqtrack.learners import (
    E,
    Exp3P,
    Exp3S,
    RegretMatching,
    RestartWrapper,
    Rexp3P,
    ScriptedPolicy,
    TriggerPolicy,
    build_learner,
    default_restart_period,
    exp3,
    exp3p_tuning,
    exp3s_tuning,
    resolve_budget,
    rexp3p_pull_parameters,
)


def assert_prob_vector(p, k):
    assert len(p) == k
    assert all(v >= 0 for v in p)
    assert sum(p) == pytest.approx(1.0, abs=1e-12)


def drive(learner, steps, k, seed=0, bound=1.0):
    """Feed random bandit traffic; every act must be a probability vector."""
    rng = np.random.default_rng(seed)
    actions = []
    for t in range(1, steps + 1):
        p = learner.act(t)
        assert_prob_vector(p, k)
        a = int(rng.choice(k, p=np.asarray(p) / sum(p)))
        learner.observe(t, a, float(rng.uniform(-bound, bound)))
        actions.append(a)
    return actions


@pytest.mark.parametrize(
    "factory",
    [
        lambda: Exp3S(3, 1.0, 0.1, 0.001),
        lambda: exp3(3, 1.0, 0.1),
        lambda: Exp3P.tuned(3, 1.0, 64, 2),
        lambda: Rexp3P(3, 1.0, 1),
        lambda: RestartWrapper(exp3(3, 1.0, 0.1), 7),
        lambda: RegretMatching(3, 1.0),
    ],
)
def test_act_always_probability_vector(factory):
    drive(factory(), 70, 3, seed=1)


# ---------------------------------------------------------------- Exp3S / Exp3


def test_exp3s_fresh_uniform():
    for gamma, alpha in ((0.1, 0.0), (0.7, 0.01), (1.0, 0.5)):
        learner = Exp3S(2, 1.0, gamma, alpha)
        assert learner.act(1) == pytest.approx([0.5, 0.5])


def test_exp3s_one_step_hand_value():
    # gamma=1/2, alpha=0, equal weights; acting arm 0 with rescaled reward 1
    # gives p0=1/2, estimate 2, and weight ratio e^{1/2}
    learner = Exp3S(2, 1.0, 0.5, 0.0)
    p = learner.act(1)
    assert p[0] == pytest.approx(0.5)
    learner.observe(1, 0, 1.0)  # raw +1 -> rescaled (1+1)/2 = 1
    w = learner.weights
    assert w[0] / w[1] == pytest.approx(math.exp(0.5), rel=1e-12)


def test_exp3s_sharing_term():
    # alpha > 0 adds (e*alpha/K) times the pre-update weight sum to every
    # weight before renormalizing
    learner = Exp3S(2, 1.0, 0.5, 0.1)
    learner.observe(1, 0, 1.0)
    boosted = math.exp(0.5)
    share = (E * 0.1 / 2) * (0.5 + 0.5)
    expected = np.array([boosted * 0.5 + share, 0.5 + share])
    expected /= expected.sum()
    assert learner.weights == pytest.approx(expected.tolist(), rel=1e-12)


def test_exp3_equals_exp3s_without_sharing():
    a = exp3(3, 1.0, 0.2)
    b = Exp3S(3, 1.0, 0.2, 0.0)
    rng = np.random.default_rng(9)
    for t in range(1, 60):
        pa, pb = a.act(t), b.act(t)
        assert pa == pytest.approx(pb, abs=0)
        arm = int(rng.integers(3))
        payoff = float(rng.uniform(-1, 1))
        a.observe(t, arm, payoff)
        b.observe(t, arm, payoff)


def test_exp3s_tunings():
    g, a = exp3s_tuning("fig1", 2, 10**4)
    assert g == pytest.approx(math.sqrt(2 * math.log(2) / ((E - 1) * 10**4)), rel=1e-12)
    assert a == 0.0
    g, a = exp3s_tuning("fig2", 2, 10**4)
    assert g == pytest.approx(math.sqrt(4 * math.log(10**4) / 10**4), rel=1e-12)
    assert a == pytest.approx(2e-4)
    g, a = exp3s_tuning("lemmaD1", 2, 1000, C=3)
    assert a == pytest.approx(4 / 1000)
    assert g == pytest.approx(min(1.0, math.sqrt(2 * 4 / 1000 * math.log(2 * 1000 / 4))), rel=1e-12)
    with pytest.raises(ValueError):
        exp3s_tuning("lemmaD1", 2, 1000)


def test_exp3s_underflow_guard():
    learner = Exp3S(2, 1.0, 0.5, 0.0)
    learner.weights = [1.0, -0.6]  # corrupted state -> negative mixture mass
    with pytest.raises(RuntimeError):
        learner.observe(1, 1, 1.0)


def test_exp3s_weights_stay_normalized():
    learner = Exp3S(2, 1.0, 0.05, 1e-4)
    drive(learner, 500, 2, seed=3)
    assert sum(learner.weights) == pytest.approx(1.0, abs=1e-9)
    assert all(w > 0 for w in learner.weights)


# ---------------------------------------------------------------- Exp3P


def test_exp3p_fresh_uniform_and_tuning():
    learner = Exp3P.tuned(2, 1.0, 1024, 1)
    assert learner.act(1) == pytest.approx([0.5, 0.5])
    s = math.log(3 * 1024 * 2) + 2 * math.log(2)
    assert s == pytest.approx(10.1095256359, abs=1e-9)
    eta, gamma, beta = exp3p_tuning(2, 1024, 1)
    assert beta == pytest.approx(3 * math.sqrt(s / (1024 * 2)), rel=1e-12)
    assert eta == pytest.approx(0.2 * math.sqrt(s / (1024 * 2)), rel=1e-12)
    assert gamma == pytest.approx(min(0.5, math.sqrt(2 * s / (2 * 1024))), rel=1e-12)


def test_exp3p_budget_exceeds_horizon():
    with pytest.raises(ValueError):
        exp3p_tuning(2, 10, 10)


def test_exp3p_unplayed_arm_optimism():
    learner = Exp3P(2, 1.0, eta=0.05, gamma=0.2, beta=0.1)
    learner.observe(1, 0, -1.0)
    assert learner.cum[1] > 0.0  # beta > 0 forces optimism on the unplayed arm


def test_exp3p_probability_floor():
    learner = Exp3P(2, 1.0, eta=0.5, gamma=0.2, beta=0.05)
    rng = np.random.default_rng(0)
    for t in range(1, 200):
        p = learner.act(t)
        assert min(p) >= 0.2 / 2 - 1e-12
        learner.observe(t, int(rng.integers(2)), float(rng.uniform(-1, 1)))


# ---------------------------------------------------------------- Rexp3P


def test_rexp3p_first_period_uniform():
    learner = Rexp3P(4, 1.0, 0)
    assert learner.act(1) == pytest.approx([0.25] * 4)
    assert learner.inner is None


def test_rexp3p_pull_parameters_examples():
    p = rexp3p_pull_parameters(4, 2, lambda t: 0)
    assert p["C_r"] == 1
    assert p["c_r"] == pytest.approx(math.log(3 * 8 * 2 / 1) + 2 * math.log(2), rel=1e-12)
    assert p["span"] == (8, 15)
    # degenerate budget capped by the pull length
    p = rexp3p_pull_parameters(3, 2, lambda t: t)
    assert p["C_r"] == 3
    # zero-switch convention: c_r = 2 ln K
    p = rexp3p_pull_parameters(1, 2, lambda t: 0)
    assert p["C_r"] == 0
    assert p["c_r"] == pytest.approx(2 * math.log(2), rel=1e-12)


def test_rexp3p_pull_membership_and_fresh_state():
    learner = Rexp3P(2, 1.0, 0)
    rng = np.random.default_rng(2)
    last_inner = None
    for t in range(1, 64):
        learner.act(t)
        r = int(t).bit_length()
        assert r == math.floor(math.log2(t)) + 1
        if t in (2, 4, 8, 16, 32):
            # entering a pull: cumulative estimates are all zero again
            assert learner.inner is not last_inner
            assert learner.inner.cum == [0.0] * 2
        learner.observe(t, int(rng.integers(2)), float(rng.uniform(-1, 1)))
        last_inner = learner.inner


# ---------------------------------------------------------------- restarts


def test_restart_identity_when_delta_is_horizon():
    T = 40
    rng = np.random.default_rng(4)
    feed = [(int(rng.integers(2)), float(rng.uniform(-1, 1))) for _ in range(T)]
    a = exp3(2, 1.0, 0.2)
    b = RestartWrapper(exp3(2, 1.0, 0.2), T)
    for t in range(1, T + 1):
        assert a.act(t) == pytest.approx(b.act(t), abs=0)
        arm, pay = feed[t - 1]
        a.observe(t, arm, pay)
        b.observe(t, arm, pay)


def test_restart_every_period_always_fresh():
    wrapper = RestartWrapper(exp3(2, 1.0, 0.2), 1)
    rng = np.random.default_rng(5)
    for t in range(1, 30):
        assert wrapper.act(t) == pytest.approx([0.5, 0.5])
        wrapper.observe(t, int(rng.integers(2)), float(rng.uniform(-1, 1)))


def test_restart_boundaries():
    class Probe:
        def __init__(self):
            self.resets = 0
            self.local_times = []

        def reset(self):
            self.resets += 1

        def act(self, t):
            self.local_times.append(t)
            return [1.0, 0.0]

        def observe(self, t, a, p):
            pass

    probe = Probe()
    wrapper = RestartWrapper(probe, 4)
    for t in range(1, 17):
        wrapper.act(t)
        wrapper.observe(t, 0, 0.0)
    assert probe.resets == 3  # entering periods 5, 9, 13
    assert probe.local_times == [1, 2, 3, 4] * 4


def test_default_restart_period():
    assert default_restart_period(16, 0) == 4
    assert default_restart_period(1024, 8) == math.ceil(math.sqrt(1024 / 9))


# ---------------------------------------------------------------- regret matching


def stationary_oracle(R, k):
    """Independent fixed point: solve sigma (M - I) = 0 with sum sigma = 1."""
    pos = np.maximum(np.array(R, dtype=float), 0.0)
    np.fill_diagonal(pos, 0.0)
    row_sums = pos.sum(axis=1)
    mu = row_sums.max()
    if mu <= 0:
        return np.full(k, 1.0 / k)
    m = pos / mu
    np.fill_diagonal(m, 1.0 - row_sums / mu)
    a = np.vstack([(m.T - np.eye(k)), np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return sol


def test_regret_matching_fresh_uniform():
    learner = RegretMatching(3, 1.0)
    assert learner.act(1) == pytest.approx([1 / 3] * 3)


def test_regret_matching_nonpositive_uniform():
    learner = RegretMatching(2, 1.0)
    learner.R = [[0.0, -1.0], [-0.5, 0.0]]
    assert learner.stationary() == pytest.approx([0.5, 0.5])
    assert learner.act(10) == pytest.approx([0.5, 0.5])


def test_regret_matching_stationary_matches_oracle():
    learner = RegretMatching(2, 1.0)
    learner.R = [[0.0, 1.0], [0.0, 0.0]]
    sigma = learner.stationary()
    want = stationary_oracle(learner.R, 2)
    assert sigma == pytest.approx(want.tolist(), abs=1e-8)
    # asymmetric case with both rows active
    learner.R = [[0.0, 0.75], [0.25, 0.0]]
    sigma = learner.stationary()
    want = stationary_oracle(learner.R, 2)
    assert sigma == pytest.approx(want.tolist(), abs=1e-8)
    # fixed-point property: sigma M = sigma
    pos = np.array([[0.0, 0.75], [0.25, 0.0]])
    mu = 0.75
    m = pos / mu
    np.fill_diagonal(m, 1.0 - pos.sum(axis=1) / mu)
    assert np.asarray(sigma) @ m == pytest.approx(sigma, abs=1e-8)


def test_regret_matching_estimates_drift_toward_truth():
    # stationary bandit: arm 1 always pays more, so the swap estimate
    # R[0][1] must become the largest entry
    rng = np.random.default_rng(8)
    learner = RegretMatching(2, 1.0)
    for t in range(1, 3000):
        p = learner.act(t)
        a = int(rng.random() >= p[0])
        learner.observe(t, a, 1.0 if a == 1 else -1.0)
    assert learner.R[0][1] > 0
    assert learner.R[0][1] > learner.R[1][0]
    assert learner.act(3000)[1] > 0.8


# ---------------------------------------------------------------- trigger & scripted


def make_trigger(fallback=None, masses=None, denom=2):
    game = G.matching_pennies()
    fallback = fallback or exp3(2, 1.0, 0.2)
    masses = masses or {0: 1, 3: 1}
    return TriggerPolicy(game, 0, masses, denom, fallback)


def test_trigger_schedule_cycles():
    trig = make_trigger()
    # support (H,H) and (T,T): own actions alternate 0, 1
    for t, want in zip(range(1, 7), [0, 1, 0, 1, 0, 1]):
        p = trig.act(t)
        assert p[want] == 1.0
        trig.observe(t, want, trig.schedule_payoffs[(t - 1) % 2])
    assert not trig.detected


def test_trigger_rejects_bad_targets():
    game = G.matching_pennies()
    with pytest.raises(ValueError):
        TriggerPolicy(game, 0, {0: 1, 3: 0}, 1, exp3(2, 1.0, 0.2))
    with pytest.raises(ValueError):
        TriggerPolicy(game, 0, {0: 1, 3: 1}, 3, exp3(2, 1.0, 0.2))


def test_trigger_detection_and_fallback_handoff():
    # opponent deviates at t=3: detection at 3, fallback drives from t=4 and
    # sees exactly the post-detection feedback stream
    feed = {1: None, 2: None}
    trig = make_trigger()
    shadow = exp3(2, 1.0, 0.2)

    for t in (1, 2):
        a = int(np.argmax(trig.act(t)))
        trig.observe(t, a, trig.schedule_payoffs[(t - 1) % 2])
    assert not trig.detected

    a = int(np.argmax(trig.act(3)))
    trig.observe(3, a, trig.schedule_payoffs[2 % 2] + 1.0)  # off-schedule payoff
    assert trig.detected and trig.detection_period == 3

    rng = np.random.default_rng(1)
    for t in range(4, 30):
        probs = trig.act(t)
        assert probs == pytest.approx(shadow.act(t), abs=0)
        arm = int(rng.integers(2))
        pay = float(rng.uniform(-1, 1))
        trig.observe(t, arm, pay)
        shadow.observe(t, arm, pay)


def test_trigger_detection_tolerance():
    trig = make_trigger()
    a = int(np.argmax(trig.act(1)))
    trig.observe(1, a, trig.schedule_payoffs[0] + 5e-10)  # inside tolerance
    assert not trig.detected
    a = int(np.argmax(trig.act(2)))
    trig.observe(2, a, trig.schedule_payoffs[1] + 5e-9)
    assert trig.detected


def test_scripted_ignores_feedback():
    pol = ScriptedPolicy(2, [0, 1, 1])
    seen = [int(np.argmax(pol.act(t))) for t in range(1, 7)]
    assert seen == [0, 1, 1, 0, 1, 1]
    pol.observe(1, 0, 123.0)
    assert int(np.argmax(pol.act(1))) == 0


# ---------------------------------------------------------------- spec building


def test_build_learner_kinds():
    specs = [
        {"kind": "exp3", "tuning": "fig1"},
        {"kind": "exp3s", "tuning": "fig2"},
        {"kind": "exp3s", "gamma": 0.1, "alpha": 0.01},
        {"kind": "exp3p", "S": 2},
        {"kind": "rexp3p", "C": {"power": 0.3}},
        {"kind": "restart", "inner": {"kind": "exp3", "tuning": "fig1"}, "C": 1},
        {"kind": "regret_matching"},
        {"kind": "scripted", "actions": [0, 1]},
    ]
    for spec in specs:
        learner = build_learner(spec, 2, 1.0, 256)
        drive(learner, 30, 2, seed=11)
    trig = build_learner(
        {"kind": "trigger", "player": 0, "masses": {"0": 1, "3": 1}, "denom": 2},
        2,
        1.0,
        64,
        game=G.matching_pennies(),
    )
    assert isinstance(trig, TriggerPolicy)
    assert isinstance(trig.fallback, RestartWrapper)
    with pytest.raises(ValueError):
        build_learner({"kind": "nope"}, 2, 1.0, 10)


def test_build_restart_uses_default_schedule():
    wrapper = build_learner({"kind": "restart", "inner": {"kind": "exp3", "tuning": "fig1"}, "C": 3}, 2, 1.0, 1600)
    assert wrapper.delta == default_restart_period(1600, 3)


def test_resolve_budget():
    assert resolve_budget(5, 100) == 5
    assert resolve_budget({"const": 2}, 100) == 2
    assert resolve_budget({"power": 0.3}, 1024) == math.ceil(1024**0.3)
    with pytest.raises(ValueError):
        resolve_budget("bad", 100)
