"""eqtrack: a simulation laboratory for time-varying repeated matrix games.

Building blocks:

* :mod:`eqtrack.games` - stage games, horizon sequences, variation/batches
* :mod:`eqtrack.learners` - bandit policies (exponential weights with and
  without sharing, the optimistic high-probability variant, doubling-trick
  and restart wrappers, bandit regret matching, trigger and scripted play)
* :mod:`eqtrack.regret` - exact dynamic-benchmark oracles (external and
  internal/swap) and clipped per-batch regret
* :mod:`eqtrack.geometry` - coarse-correlated / correlated equilibrium
  polytopes, p-norm distances, tracking error
* :mod:`eqtrack.welfare` - price of anarchy, smoothness, switch-constrained
  welfare fractions, welfare floors
* :mod:`eqtrack.engine` - seeded episodes, Monte Carlo replication, sweeps
* :mod:`eqtrack.cli` - the ``eqtrack`` command
"""

__version__ = "0.1.0"

from .games import (
    ActionSpace,
    GameSequence,
    NoiseSpec,
    Outcome,
    StageGame,
    pricing_season_sequence,
    logit_pricing_game,
    make_injective,
    matching_pennies,
    segment_batches,
    single_best_reply,
    variation,
)
from .geometry import JointDistribution, build_polytope, distance, membership, tracking_error
from .learners import (
    Exp3P,
    Exp3S,
    RegretMatching,
    RestartWrapper,
    Rexp3P,
    ScriptedPolicy,
    TriggerPolicy,
    exp3,
)
from .regret import (
    GainMatrix,
    clipped_batch_regret,
    external_dynamic_benchmark,
    internal_dynamic_benchmark,
    realized_regret,
)
from .engine import SimConfig, convergence_sweep, monte_carlo, play_episode
from .welfare import WelfareFunction, beta, best_lambda, optimal_welfare, poa, smoothness_check
