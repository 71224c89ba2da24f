"""Trigger policies: cooperative cycling toward a target joint distribution
with payoff-based deviation detection.

Both players cycle through the uniform correlated target of matching
pennies. Over whole cycles the empirical distribution equals the target
*exactly* (integer counting, no sampling noise). If an opponent deviates,
the deviation shows up in the realized payoff, the policy triggers, and a
fallback no-regret learner takes over.
"""

import numpy as np

from eqtrack import games as G
from eqtrack.engine import build_sequence, make_learners, monte_carlo, play_episode, SimConfig

T = 240
trigger = {"kind": "trigger", "masses": {"0": 1, "1": 1, "2": 1, "3": 1}, "denom": 4}

cfg = SimConfig(
    sequence={"kind": "matching_pennies"},
    learners=[dict(trigger), dict(trigger)],
    replications=3,
    seed=2,
    horizons=[T],
    metrics={"tracking": {"kind": "hannan", "p": 1}},
)
s = monte_carlo(cfg)
print("cooperative play for", T, "periods (60 full cycles):")
print("  empirical distribution:", s.batch_distributions[0].p)
print("  L1 gap to the uniform target:", float(np.abs(s.batch_distributions[0].p - 0.25).sum()))
print("  tracking error:", s.tracking.error)

# now the opponent defects at t = 31
seq = build_sequence({"kind": "matching_pennies"}, T)
coop = [seq.space.actions_of(o)[1] for o in range(4)]
script = [coop[(t - 1) % 4] for t in range(1, T + 1)]
script[30] = 1 - script[30]
learners = make_learners(
    [dict(trigger), {"kind": "scripted", "actions": script}], seq, T
)
trace = play_episode(seq, learners, seed=2)
trig = learners[0]
print("\nscripted deviation at t=31:")
print("  detected:", trig.detected, "at period", trig.detection_period)
print("  play after detection comes from the fallback (restarted no-regret learner)")
