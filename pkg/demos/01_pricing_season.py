"""A two-seller pricing season whose demand sensitivity jumps mid-horizon.

Builds the logit-demand stage games, shows that the dominant price flips
when customers become price sensitive, and inspects the sequence's
variation and batch structure.
"""

import numpy as np

from eqtrack import games as G


def show_game(name, game):
    print(f"\n{name} (M = {game.bound})")
    labels = ["(low, low)", "(low, high)", "(high, low)", "(high, high)"]
    for a in range(4):
        u0, u1 = game.payoffs[0, a], game.payoffs[1, a]
        print(f"  {labels[a]:12s} -> seller 1: {u0:.4f}   seller 2: {u1:.4f}")
    print("  single best replies:", G.single_best_reply(game))


first = G.logit_pricing_game(alpha=4, beta=0.75, customers=1, prices=[1, 2])
second = G.logit_pricing_game(alpha=4, beta=1.75, customers=1, prices=[1, 2])

show_game("low price sensitivity (beta = 3/4)", first)
show_game("high price sensitivity (beta = 7/4)", second)

T = 20
season = G.pricing_season_sequence(T)
print(f"\nseason of length {T}: variation = {season.variation()}, batches = {season.segment_batches()}")
print("payoff at t=3  for seller 1 at (high, high):", G.payoff(season, 3, 0, (1, 1)))
print("payoff at t=15 for seller 1 at (low, low):  ", G.payoff(season, 15, 0, (0, 0)))

# sequences survive a JSON round trip (the CLI's game-file format)
doc = G.sequence_to_json(season)
assert G.sequence_from_json(doc).variation() == 1
print("\nJSON round trip ok; document keys:", sorted(doc))
