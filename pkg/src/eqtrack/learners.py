"""Bandit-feedback policies behind one small interface.

A learner exposes ``act(t) -> list[float]`` (a mixed action over its own K
actions), ``observe(t, own_action, own_payoff)``, and ``reset()``. Feedback
is strictly bandit: a learner sees only its own realized payoff, never the
opponents' actions or counterfactual payoffs.

Raw payoffs live in [-M, M]; the exponential-weights learners rescale them
affinely to [0, 1] internally (the mean-payoff drift is preserved, so regret
orderings are unchanged). The optimistic high-probability learner keeps its
native [-M, M] handling.
"""

from __future__ import annotations

import math

import numpy as np

from .games import StageGame

__all__ = [
    "Exp3S",
    "Exp3P",
    "Rexp3P",
    "RestartWrapper",
    "RegretMatching",
    "TriggerPolicy",
    "ScriptedPolicy",
    "exp3",
    "exp3s_tuning",
    "exp3p_tuning",
    "rexp3p_pull_parameters",
    "default_restart_period",
    "resolve_budget",
    "build_learner",
]

E = math.e
DETECTION_TOL = 1e-9


class Exp3S:
    """Exponential weights with importance-weighted estimates and optional
    uniform weight sharing.

    Mixture: ``p_k = (1 - gamma) w_k / sum(w) + gamma / K``. After acting,
    the played arm's weight is multiplied by ``exp(gamma * rhat / K)`` with
    ``rhat = reward / p_k``, then every weight receives
    ``(e * alpha / K) * sum(w)``. Weights are renormalized by their sum each
    step to avoid overflow; mixtures are scale-invariant so this is free.
    With ``alpha_share = 0`` this is plain Exp3.
    """

    def __init__(self, num_actions: int, bound: float, gamma: float, alpha_share: float = 0.0):
        if not 0 < gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if alpha_share < 0:
            raise ValueError("sharing factor must be non-negative")
        self.k = int(num_actions)
        self.bound = float(bound)
        self.gamma = float(gamma)
        self.alpha_share = float(alpha_share)
        self.weights = [1.0 / self.k] * self.k

    def reset(self):
        self.weights = [1.0 / self.k] * self.k

    def _probs(self):
        w = self.weights
        s = sum(w)
        g = self.gamma
        gk = g / self.k
        out = [(1.0 - g) * wi / s + gk for wi in w]
        return out

    def act(self, t):
        return self._probs()

    def observe(self, t, action, payoff):
        r = (payoff + self.bound) / (2.0 * self.bound)
        w = self.weights
        g = self.gamma
        s = sum(w)
        p = (1.0 - g) * w[action] / s + g / self.k
        if p <= 0.0:
            raise RuntimeError(f"probability underflow: p[{action}] = {p}")
        w[action] *= math.exp(g * (r / p) / self.k)
        if self.alpha_share > 0.0:
            share = (E * self.alpha_share / self.k) * s  # pre-update weight sum
            for i in range(self.k):
                w[i] += share
        s = sum(w)
        for i in range(self.k):
            w[i] /= s


def exp3(num_actions: int, bound: float, gamma: float) -> Exp3S:
    """Classic Exp3: Exp3S without the sharing term."""
    return Exp3S(num_actions, bound, gamma, alpha_share=0.0)


def exp3s_tuning(tuning: str, num_actions: int, T: int, C: int | None = None) -> tuple[float, float]:
    """Named (gamma, alpha) parameterizations.

    * ``fig1``  - classic Exp3: gamma = sqrt(K ln K / ((e-1) T)), alpha = 0
    * ``fig2``  - gamma = sqrt(4 ln T / T), alpha = 2 / T
    * ``lemmaD1`` - budget-aware sharing: alpha = (C+1)/T and
      gamma = sqrt(K (C+1)/T * ln(K T / (C+1))), both capped at 1
    """
    k = num_actions
    if tuning == "fig1":
        return min(1.0, math.sqrt(k * math.log(k) / ((E - 1.0) * T))), 0.0
    if tuning == "fig2":
        return min(1.0, math.sqrt(4.0 * math.log(T) / T)), 2.0 / T
    if tuning == "lemmaD1":
        if C is None:
            raise ValueError("lemmaD1 tuning needs the switch budget C")
        c1 = C + 1
        gamma = min(1.0, math.sqrt(k * c1 / T * math.log(k * T / c1)))
        return gamma, c1 / T
    raise ValueError(f"unknown tuning {tuning!r}")


class Exp3P:
    """High-probability exponential-weights learner with optimistic
    importance-weighted gain estimates.

    Every arm receives ``g~_k = ((g_k 1(a=k) + beta) / p_k + M) / (2M)`` so
    unplayed arms accumulate a small bonus; the mixture blends the softmax
    of the cumulative estimates with uniform exploration, keeping every
    probability at least ``gamma / K``.
    """

    def __init__(self, num_actions: int, bound: float, eta: float, gamma: float, beta: float):
        if eta <= 0:
            raise ValueError("eta must be positive")
        if not 0 <= gamma <= 1 or beta < 0:
            # beta may exceed 1 on the shortest doubling pulls
            raise ValueError("gamma must lie in [0, 1] and beta be non-negative")
        self.k = int(num_actions)
        self.bound = float(bound)
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.beta = float(beta)
        self.cum = [0.0] * self.k

    @classmethod
    def tuned(cls, num_actions: int, bound: float, T: int, S: int) -> "Exp3P":
        eta, gamma, beta = exp3p_tuning(num_actions, T, S)
        return cls(num_actions, bound, eta, gamma, beta)

    def reset(self):
        self.cum = [0.0] * self.k

    def _probs(self):
        m = max(self.cum)
        exps = [math.exp(self.eta * (c - m)) for c in self.cum]
        s = sum(exps)
        g = self.gamma
        gk = g / self.k
        return [(1.0 - g) * e / s + gk for e in exps]

    def act(self, t):
        return self._probs()

    def observe(self, t, action, payoff):
        p = self._probs()
        two_m = 2.0 * self.bound
        for k in range(self.k):
            g = payoff if k == action else 0.0
            self.cum[k] += ((g + self.beta) / p[k] + self.bound) / two_m


def exp3p_tuning(num_actions: int, T: int, S: int) -> tuple[float, float, float]:
    """(eta, gamma, beta) for a horizon-T run against a benchmark with at
    most S switches: s = S ln(3TK/S) + 2 ln K (0 ln 0 = 0), beta = 3
    sqrt(s/(TK)), gamma = min(1/2, sqrt(K s / (2T))), eta = sqrt(s/(TK))/5.
    Natural logarithms throughout.
    """
    k = num_actions
    if S > T - 1:
        raise ValueError(f"switch budget S={S} exceeds T-1={T - 1}")
    s = (S * math.log(3.0 * T * k / S) if S > 0 else 0.0) + 2.0 * math.log(k)
    beta = 3.0 * math.sqrt(s / (T * k))
    gamma = min(0.5, math.sqrt(k * s / (2.0 * T)))
    eta = 0.2 * math.sqrt(s / (T * k))
    return eta, gamma, beta


def rexp3p_pull_parameters(r: int, num_actions: int, budget) -> dict:
    """Parameters of the r-th doubling pull: span [2^(r-1), 2^r - 1],
    switch cap C^r = min(C_{2^r - 1} + 1, 2^(r-1) - 1), and the Exp3P tuning
    computed from c^r = C^r ln(3 * 2^(r-1) K / C^r) + 2 ln K."""
    if r < 1:
        raise ValueError("pull index starts at 1")
    k = num_actions
    length = 2 ** (r - 1)
    c_fn = budget if callable(budget) else (lambda _t: budget)
    cr = max(0, min(c_fn(2**r - 1) + 1, length - 1))
    sr = (cr * math.log(3.0 * length * k / cr) if cr > 0 else 0.0) + 2.0 * math.log(k)
    eta = 0.2 * math.sqrt(sr / (length * k))
    gamma = min(0.5, math.sqrt(k * sr / (2.0 * length)))
    beta = 3.0 * math.sqrt(sr / (length * k))
    return {
        "r": r,
        "span": (length, 2**r - 1),
        "C_r": cr,
        "c_r": sr,
        "eta": eta,
        "gamma": gamma,
        "beta": beta,
    }


class Rexp3P:
    """Doubling-trick wrapper: pull r covers periods [2^(r-1), 2^r - 1] and
    runs a fresh Exp3P tuned for that pull; pull 1 is a single uniform draw.
    Horizon-free: needs only the switch-budget sequence, not T."""

    def __init__(self, num_actions: int, bound: float, budget):
        self.k = int(num_actions)
        self.bound = float(bound)
        self.budget = budget
        self.pull = 0
        self.inner: Exp3P | None = None

    def reset(self):
        self.pull = 0
        self.inner = None

    def _enter(self, t):
        r = int(t).bit_length()  # period t belongs to pull floor(log2 t) + 1
        if r != self.pull:
            self.pull = r
            if r == 1:
                self.inner = None
            else:
                params = rexp3p_pull_parameters(r, self.k, self.budget)
                self.inner = Exp3P(self.k, self.bound, params["eta"], params["gamma"], params["beta"])
        return r

    def act(self, t):
        r = self._enter(t)
        if r == 1:
            return [1.0 / self.k] * self.k
        return self.inner.act(t - 2 ** (r - 1) + 1)

    def observe(self, t, action, payoff):
        r = self._enter(t)
        if r > 1:
            self.inner.observe(t - 2 ** (r - 1) + 1, action, payoff)


def default_restart_period(T: int, C_T: int) -> int:
    """ceil(sqrt(T / (C+1))): grows without bound and is o(T/(C+1)) for any
    sub-linear budget, as the restart argument requires."""
    return max(1, math.ceil(math.sqrt(T / (C_T + 1))))


class RestartWrapper:
    """Transparent wrapper that resets the inner learner entering periods
    {delta+1, 2 delta+1, ...}. The inner learner sees a local clock, so each
    block is a fresh horizon-delta run of the wrapped policy."""

    def __init__(self, inner, restart_period: int):
        if restart_period < 1:
            raise ValueError("restart period must be at least 1")
        self.inner = inner
        self.delta = int(restart_period)
        self._block = 0

    def reset(self):
        self.inner.reset()
        self._block = 0

    def _maybe_restart(self, t):
        block = (t - 1) // self.delta
        if block != self._block:
            self.inner.reset()
            self._block = block

    def act(self, t):
        self._maybe_restart(t)
        return self.inner.act(t - self._block * self.delta)

    def observe(self, t, action, payoff):
        self._maybe_restart(t)
        self.inner.observe(t - self._block * self.delta, action, payoff)


class RegretMatching:
    """Bandit regret matching toward no-internal-regret play.

    Keeps importance-weighted estimates of the pairwise swap regrets
    R[x][y]; the mixed action is the stationary distribution of the row
    switch matrix built from positive parts (damped power iteration to
    1e-10, warm-started), uniform while all estimates are non-positive. A
    vanishing uniform mixing of t^(-1/3) keeps the importance weights
    bounded, as bandit estimation of unplayed swaps requires.
    """

    def __init__(self, num_actions: int, bound: float, exploration: float = 1.0):
        self.k = int(num_actions)
        self.bound = float(bound)
        self.exploration = float(exploration)
        self.R = [[0.0] * self.k for _ in range(self.k)]
        self.n = 0
        self._sigma = [1.0 / self.k] * self.k
        self._last_probs = None

    def reset(self):
        self.R = [[0.0] * self.k for _ in range(self.k)]
        self.n = 0
        self._sigma = [1.0 / self.k] * self.k
        self._last_probs = None

    def stationary(self):
        """Fixed point of sigma = sigma @ M, M the positive-part switch
        matrix; damped iteration sigma <- (sigma + sigma M)/2 shares the
        fixed points and cannot oscillate."""
        k = self.k
        pos = [[max(self.R[x][y], 0.0) if x != y else 0.0 for y in range(k)] for x in range(k)]
        row_sums = [sum(row) for row in pos]
        mu = max(row_sums)
        if mu <= 0.0:
            return [1.0 / k] * k
        sigma = list(self._sigma)
        for _ in range(200_000):
            new = [0.0] * k
            for x in range(k):
                sx = sigma[x]
                if sx == 0.0:
                    continue
                stay = 1.0 - row_sums[x] / mu
                new[x] += sx * stay
                rowx = pos[x]
                for y in range(k):
                    if rowx[y] != 0.0:
                        new[y] += sx * rowx[y] / mu
            diff = 0.0
            for x in range(k):
                new[x] = 0.5 * (new[x] + sigma[x])
                diff += abs(new[x] - sigma[x])
            sigma = new
            if diff <= 1e-10:
                break
        s = sum(sigma)
        sigma = [v / s for v in sigma]
        self._sigma = sigma
        return sigma

    def act(self, t):
        sigma = self.stationary()
        delta = min(1.0, self.exploration / (self.n + 1) ** (1.0 / 3.0))
        dk = delta / self.k
        probs = [(1.0 - delta) * s + dk for s in sigma]
        self._last_probs = probs
        return probs

    def observe(self, t, action, payoff):
        probs = self._last_probs or self.act(t)
        r = (payoff + self.bound) / (2.0 * self.bound)
        v = r / probs[action]
        R = self.R
        for x in range(self.k):
            if x != action:
                R[x][action] += probs[x] * v
                R[action][x] -= r
        self.n += 1
        self._last_probs = None


class ScriptedPolicy:
    """Deterministic schedule; ignores all feedback."""

    def __init__(self, num_actions: int, schedule):
        self.k = int(num_actions)
        self.schedule = schedule if callable(schedule) else (lambda t, s=list(schedule): s[(t - 1) % len(s)])

    def reset(self):
        pass

    def act(self, t):
        a = self.schedule(t)
        probs = [0.0] * self.k
        probs[a] = 1.0
        return probs

    def observe(self, t, action, payoff):
        pass


class TriggerPolicy:
    """Cooperative cycling toward a target joint distribution with
    payoff-based deviation detection and a fallback learner.

    The target must have rational masses ``masses[outcome] / denom``; the
    cooperative cycle visits the support in lexicographic order, each
    outcome for its numerator's worth of periods. While undetected the
    policy plays its own coordinate of the scheduled outcome; detection
    fires when the observed payoff differs from the scheduled cooperative
    payoff by more than 1e-9 (apply the injectivity transform to the game
    first if infallible detection is required). On detection the fallback
    is reset and drives all subsequent play.
    """

    def __init__(self, game: StageGame, player: int, masses: dict[int, int], denom: int, fallback):
        if denom < 1:
            raise ValueError("denominator must be positive")
        if sum(masses.values()) != denom:
            raise ValueError("masses must sum to the denominator")
        if any(m <= 0 for m in masses.values()):
            raise ValueError("target support must carry positive mass")
        self.game = game
        self.player = int(player)
        self.k = game.space.actions_per_player[self.player]
        self.fallback = fallback
        self.denom = int(denom)
        self.schedule_outcomes: list[int] = []
        for outcome in sorted(masses):
            self.schedule_outcomes.extend([int(outcome)] * int(masses[outcome]))
        self.schedule_actions = [game.space.actions_of(o)[self.player] for o in self.schedule_outcomes]
        self.schedule_payoffs = [game.payoff(self.player, o) for o in self.schedule_outcomes]
        self.detected = False
        self.detection_period: int | None = None

    def reset(self):
        self.detected = False
        self.detection_period = None
        self.fallback.reset()

    def act(self, t):
        if self.detected:
            return self.fallback.act(t)
        probs = [0.0] * self.k
        probs[self.schedule_actions[(t - 1) % self.denom]] = 1.0
        return probs

    def observe(self, t, action, payoff):
        if self.detected:
            self.fallback.observe(t, action, payoff)
            return
        expected = self.schedule_payoffs[(t - 1) % self.denom]
        if abs(payoff - expected) > DETECTION_TOL:
            # forget everything learned while cooperating; the fallback
            # starts fresh from the next period
            self.detected = True
            self.detection_period = t
            self.fallback.reset()


def resolve_budget(spec, T: int) -> int:
    """Switch budgets C_T given either a constant or {const}/{power, scale}."""
    if isinstance(spec, (int, np.integer)):
        return int(spec)
    if isinstance(spec, dict):
        if "const" in spec:
            return int(spec["const"])
        if "power" in spec:
            return math.ceil(spec.get("scale", 1.0) * T ** float(spec["power"]))
    raise ValueError(f"cannot resolve switch budget from {spec!r}")


def build_learner(spec: dict, num_actions: int, bound: float, T: int, game: StageGame | None = None):
    """Instantiate a learner from its declarative JSON spec.

    ``{"kind": ..., ...}`` with kinds exp3, exp3s, exp3p, rexp3p, restart,
    regret_matching, trigger and scripted; named tunings select the
    documented parameterizations at horizon T.
    """
    kind = spec["kind"]
    if kind in ("exp3", "exp3s"):
        if "tuning" in spec:
            c = resolve_budget(spec["C"], T) if "C" in spec else None
            gamma, alpha = exp3s_tuning(spec["tuning"], num_actions, T, c)
        else:
            gamma = float(spec["gamma"])
            alpha = float(spec.get("alpha", 0.0))
        if kind == "exp3":
            alpha = 0.0
        return Exp3S(num_actions, bound, gamma, alpha)
    if kind == "exp3p":
        if "S" in spec:
            return Exp3P.tuned(num_actions, bound, T, int(spec["S"]))
        return Exp3P(num_actions, bound, float(spec["eta"]), float(spec["gamma"]), float(spec["beta"]))
    if kind == "rexp3p":
        budget = spec.get("C", 0)
        if isinstance(budget, dict):
            power = float(budget["power"])
            scale = float(budget.get("scale", 1.0))
            return Rexp3P(num_actions, bound, lambda t: math.ceil(scale * t**power))
        return Rexp3P(num_actions, bound, int(budget))
    if kind == "restart":
        c_t = resolve_budget(spec.get("C", 0), T)
        delta = int(spec["delta"]) if "delta" in spec else default_restart_period(T, c_t)
        inner_spec = dict(spec["inner"])
        inner_spec.setdefault("C", c_t)
        inner = build_learner(inner_spec, num_actions, bound, delta, game)
        return RestartWrapper(inner, delta)
    if kind == "regret_matching":
        return RegretMatching(num_actions, bound, float(spec.get("exploration", 1.0)))
    if kind == "trigger":
        if game is None:
            raise ValueError("trigger policies need the stage game")
        masses = {int(k): int(v) for k, v in spec["masses"].items()}
        fallback_spec = spec.get("fallback", {"kind": "restart", "inner": {"kind": "exp3", "tuning": "fig1"}, "C": 0})
        fallback = build_learner(fallback_spec, num_actions, bound, T, game)
        return TriggerPolicy(game, int(spec["player"]), masses, int(spec["denom"]), fallback)
    if kind == "scripted":
        if "actions" in spec:
            return ScriptedPolicy(num_actions, list(spec["actions"]))
        if "segments" in spec:
            segs = [(int(s["until"]), int(s["action"])) for s in spec["segments"]]

            def sched(t, segs=segs):
                for until, a in segs:
                    if t <= until:
                        return a
                return segs[-1][1]

            return ScriptedPolicy(num_actions, sched)
        raise ValueError("scripted spec needs 'actions' or 'segments'")
    raise ValueError(f"unknown learner kind {kind!r}")
