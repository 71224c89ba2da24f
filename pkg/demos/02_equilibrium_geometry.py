"""Equilibrium polytopes and distances on two instructive 2x2 fixtures.

The first game has a one-point equilibrium set, yet relaxing the deviation
constraints by a sliver admits a point mass a full simplex diagonal away --
small average regret does not imply closeness to equilibrium. The second
game's set is a segment; we measure distances to it with all three norms.
"""

import numpy as np

from eqtrack import games as G
from eqtrack.geometry import JointDistribution, build_polytope, distance, membership, regret_to_distance_bound

game = G.fragile_cce_game(delta=0.1)
tight = build_polytope(game, "hannan", epsilon=0.0)
print("deviation rows:", tight.rows.shape[0], "labels:", tight.labels)

nash = JointDistribution([1, 0, 0, 0])
far = JointDistribution([0, 1, 0, 0])
print("nash corner member:", membership(nash, tight))
print("far corner member (eps=0):  ", membership(far, tight))
print("far corner member (eps=0.1):", membership(far, build_polytope(game, "hannan", 0.1)))

for p in (1, 2, "inf"):
    rep = distance(far, tight, p)
    print(f"  d_{p}(far corner, set) = {rep.value:.6f}  (gap {rep.gap_certificate:.1e}, {rep.iterations} iters)")

bound = regret_to_distance_bound(game, eps=0.1, p=2)
print(f"regret->distance bound at eps=0.1: value {bound.value:.4f}, "
      f"sampled constant >= {bound.const_estimate:.1f}, cap {bound.cap:.4f}")

segment_game = G.top_row_dominant_game(0.1)
seg = build_polytope(segment_game, "hannan")
print("\nsegment game: mixtures of the two top-row corners are members:")
for alpha in (0.0, 0.5, 1.0):
    q = JointDistribution([alpha, 1 - alpha, 0, 0])
    print(f"  alpha={alpha}: member = {membership(q, seg)}")
corner = JointDistribution([0, 0, 0, 1])
print("distance from the bottom-right corner:", distance(corner, seg, 2).value, "~ sqrt(1.5)")

# correlated sets nest inside coarse-correlated ones
pennies = G.matching_pennies()
ce, cce = build_polytope(pennies, "correlated"), build_polytope(pennies, "hannan")
u = JointDistribution.uniform(4)
print("\nmatching pennies, uniform play: CE member:", membership(u, ce), "| CCE member:", membership(u, cce))
