"""
Extended prisoner's dilemma
===========================

Three prisoners, five options each. The reward probability of each
prisoner depends on the whole selection pattern (125 rows).
"""

from towbombe import ExperimentConfig, load_epd_table, run_experiment
from towbombe.environment import EpdEnvironment, epd_discrepancies, social_optima

table = load_epd_table()
for pattern in ("AAA", "BBB", "EEE", "BCD"):
    print(pattern, table.row(pattern))

env = EpdEnvironment(table)
print("patterns with the largest total:", ["".join("ABCDE"[k] for k in p) for p in social_optima(env, 3)])

disc = epd_discrepancies(table)
print("worked examples that disagree with the table:", disc["stated_examples"])

# %%
res = run_experiment(ExperimentConfig(game="epd", samples=100))
s = res.summary
print(f"bombe on the EPD: SM {s.sm_freq:.2f}, NE {s.ne_freq:.2f}, mean total {s.mean_total:.0f}")
