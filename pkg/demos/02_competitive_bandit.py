"""
Three players, five machines
============================

Reward probabilities (0.03, 0.05, 0.1, 0.2, 0.9). Selfish players all end up
on E and share it (0.3 each per round); the best the group can do is to sit
on C, D and E, one each, for a total of 1.2 per round.
"""

import numpy as np

from towbombe import ExperimentConfig, MachineSet, make_strategy, run_experiment
from towbombe.baselines import selfish_cbp_run
from towbombe.environment import CANONICAL_PROBS

env = MachineSet(CANONICAL_PROBS)
print("expected payoff E,E,E:", env.expected_payoff("EEE"))
print("expected payoff D,E,C:", env.expected_payoff("DEC"))

# %%
# The bombe: 200 samples of 1,000 plays, omega = 0.08, internal random fluctuations.
res = run_experiment(ExperimentConfig(samples=200))
s = res.summary
print(f"bombe: SM {s.sm_freq:.2f}, NE {s.ne_freq:.2f}, mean total {s.mean_total:.0f}")
print("cluster centroids (players' scores near each social-maximum point):")
print(np.round(s.cluster_centroids))

# %%
# Independent epsilon-greedy learners for comparison (a handful of runs).
rng = np.random.default_rng(0)
labels = [selfish_cbp_run([make_strategy("egreedy", 5) for _ in range(3)], env, 1000, rng).outcome.label
          for _ in range(10)]
print("selfish epsilon-greedy outcomes:", {k: labels.count(k) for k in set(labels)})
