"""
Single-player tug-of-war on two machines
========================================

One player, machines with reward probabilities 0.9 and 0.2. The player keeps
Q_k = N_k - (1 + omega) L_k per machine and plays A whenever Q_A - Q_B plus
a small uniform noise term is positive.
"""

import numpy as np

from towbombe import omega0, simulate_tow
from towbombe.harness import rng_stream
from towbombe.metrics import regret_curve

p_a, p_b = 0.9, 0.2
w = omega0(p_a + p_b)
print(f"omega0 for gamma = {p_a + p_b:.1f}: {w:.4f}")

# %%
# 1,000 independent players, 5,000 steps each. Regret is (P_A - P_B) E[N_B].
rngs = [rng_stream(0, j) for j in range(1000)]
res = simulate_tow((p_a, p_b), 5000, rngs, omega=w)
curve = regret_curve(res.mean_plays_b, p_a, p_b)
for t in (10, 100, 1000, 5000):
    print(f"t = {t:5d}  regret {curve[t - 1, 1]:.3f}")

# %%
# The regret stops growing: after the first few hundred steps almost no
# player returns to machine B.
print("share of players on A at the end:", np.mean(res.final_choice == 0))

# %%
# Without knowing gamma, omega can be estimated from the player's own counts.
res_auto = simulate_tow((p_a, p_b), 5000, [rng_stream(1, j) for j in range(1000)], omega=None)
print("adaptive omega, final regret:", round(0.7 * res_auto.mean_plays_b[-1], 3))
