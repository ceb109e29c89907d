"""Quadratic loss: defensive forecasting next to the Aggregating Algorithm.

Ten constant experts, a reality that always picks the outcome hurting the
learner most relative to the best expert, and the regret checked against
ln K / 2 after every round.
"""
import math

import numpy as np

from defensor.engine import compare, run
from defensor.games import quadratic_game

# %%
game = quadratic_game()
rng = np.random.default_rng(0)
experts = [{"kind": "constant", "value": float(v)} for v in rng.random(10)]
reality = {"kind": "adversarial_max_regret"}

defensive = run(game, "defensive", 2.0, experts, reality, 2000)
aa = run(game, "aa", 2.0, experts, reality, 2000)

# %%
print(f"bound ln(10)/2 = {math.log(10) / 2:.4f}")
for row in compare([defensive, aa]):
    print(f"{row['learner']:>9}: final regret {row['final_regret']:.4f}, "
          f"max {row['max_regret']:.4f}, {row['max_slack_usage']:.1%} of bound, "
          f"{row['mean_round_seconds'] * 1e6:.0f} us/round")

# the two learners need not agree round by round
gap = np.abs(defensive.p - aa.p)
print(f"largest forecast difference: {gap.max():.3e} at round {gap.argmax() + 1}")

# %%
# S never grows; it starts at K
print("S_0 =", defensive.S0, " S_N =", defensive.S[-1])
print("max increase of S:", np.max(np.diff(np.concatenate([[defensive.S0], defensive.S]))))
