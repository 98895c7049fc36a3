"""Textbook bandit strategies used as comparators.

Each strategy keeps per-machine counts for a batch of ``B`` independent
learners (``B = 1`` for a single player), so single-player benchmarks can run
many learners at once. Every learner plays each machine once, in index
order, before its selection rule applies.
"""

from __future__ import annotations

import numpy as np

from .bombe import select_machines
from .environment import CollisionPolicy
from .errors import InputError
from .metrics import RunRecord, classify_outcome

__all__ = [
    "Strategy",
    "EpsilonGreedy",
    "Softmax",
    "Ucb1Tuned",
    "make_strategy",
    "baseline_select",
    "selfish_cbp_run",
]


class Strategy:
    name = "strategy"

    def __init__(self, n_machines: int, batch: int = 1):
        if n_machines < 2:
            raise InputError("need at least two machines")
        self.n_machines = n_machines
        self.batch = batch
        self.counts = np.zeros((batch, n_machines), dtype=np.int64)
        self.sums = np.zeros((batch, n_machines))
        self.sq_sums = np.zeros((batch, n_machines))

    @property
    def means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)

    def _index(self, t: int, rng) -> np.ndarray:
        raise NotImplementedError

    def select(self, t: int, rng) -> np.ndarray:
        """Machine per learner at step ``t`` (1-based)."""
        if t < 1:
            raise InputError("steps are counted from 1")
        unplayed = self.counts == 0
        first = np.argmax(unplayed, axis=1)
        choice = self._index(t, rng)
        return np.where(unplayed.any(axis=1), first, choice)

    def update(self, arms, rewards) -> None:
        arms = np.asarray(arms).reshape(self.batch)
        r = np.asarray(rewards, dtype=float).reshape(self.batch)
        rows = np.arange(self.batch)
        self.counts[rows, arms] += 1
        self.sums[rows, arms] += r
        self.sq_sums[rows, arms] += r * r


class EpsilonGreedy(Strategy):
    name = "egreedy"

    def __init__(self, n_machines: int, epsilon: float = 0.1, batch: int = 1):
        if not 0.0 <= epsilon <= 1.0:
            raise InputError("epsilon must lie in [0, 1]")
        super().__init__(n_machines, batch)
        self.epsilon = epsilon

    def _index(self, t, rng):
        greedy = select_machines(self.means, rng=rng)
        explore = rng.random(self.batch) < self.epsilon
        uniform = rng.integers(0, self.n_machines, self.batch)
        return np.where(explore, uniform, greedy)


class Softmax(Strategy):
    name = "softmax"

    def __init__(self, n_machines: int, tau: float = 0.1, batch: int = 1):
        if not tau > 0:
            raise InputError("temperature must be positive")
        super().__init__(n_machines, batch)
        self.tau = tau

    def _index(self, t, rng):
        z = self.means / self.tau
        w = np.exp(z - z.max(axis=1, keepdims=True))
        cdf = np.cumsum(w / w.sum(axis=1, keepdims=True), axis=1)
        u = rng.random((self.batch, 1))
        return np.minimum((u > cdf).sum(axis=1), self.n_machines - 1)


class Ucb1Tuned(Strategy):
    name = "ucb1t"

    def _index(self, t, rng):
        n = np.maximum(self.counts, 1)
        mean = self.sums / n
        log_t = np.log(max(t, 2))
        var = np.maximum(self.sq_sums / n - mean**2, 0.0) + np.sqrt(2 * log_t / n)
        bonus = np.sqrt(log_t / n * np.minimum(0.25, var))
        return select_machines(mean + bonus, rng=rng)


def make_strategy(name: str, n_machines: int, batch: int = 1, **params) -> Strategy:
    table = {"egreedy": EpsilonGreedy, "softmax": Softmax, "ucb1t": Ucb1Tuned}
    if name not in table:
        raise InputError(f"unknown baseline {name!r}; choose from {sorted(table)}")
    return table[name](n_machines, batch=batch, **params)


def baseline_select(strategy: Strategy, t: int, rng) -> np.ndarray:
    return strategy.select(t, rng)


def selfish_cbp_run(strategies, env, plays: int, rng, policy=CollisionPolicy.SPLIT_PROBABILITY,
                    window: int = 100, sample: int = 0, seed: int = 0) -> RunRecord:
    """Independent learners sharing the machines, each learning from its own
    (possibly split) rewards with no coupling between them."""
    if plays < 1:
        raise InputError("plays must be at least 1")
    m, n = len(strategies), env.n_machines
    hist = np.zeros((m, n), dtype=np.int64)
    recent = np.zeros((m, n), dtype=np.int64)
    scores = np.zeros(m)
    rows = np.arange(m)
    for t in range(1, plays + 1):
        sel = np.array([s.select(t, rng)[0] for s in strategies])
        rew = np.asarray(env.draw_round(sel, rng, policy), dtype=float)
        for s, k, r in zip(strategies, sel, rew):
            s.update(k, r)
        hist[rows, sel] += 1
        if t > plays - window:
            recent[rows, sel] += 1
        scores += rew
    rec = RunRecord(scores, hist, recent.argmax(axis=1), 0.0, sample, seed, "selfish")
    rec.outcome = classify_outcome(rec, env)
    return rec
