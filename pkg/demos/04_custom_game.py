"""A game built from a sampled set of decisions.

Sample the quadratic loss curve, estimate its mixability constant, and turn
it into a standardized game at a rate below that.  The tabulated game then
plugs into the same forecaster.
"""
import math

import numpy as np

from defensor.engine import run
from defensor.games import DecisionSet, check_one_step_inequality, estimate_eta_star, standardize

decisions = DecisionSet.from_curve(lambda g: g**2, lambda g: (1 - g) ** 2, n=4001)
eta_star = estimate_eta_star(decisions)
print(f"estimated eta* = {eta_star:.4f}")

# %%
game = standardize(decisions, 1.5, grid_size=2001)
report = check_one_step_inequality(game, 1.5)
print("one-step inequality at 1.5:", report.holds, f"(worst slack {report.worst_slack:.2e})")
print("at 2.5:", check_one_step_inequality(game, 2.5).holds)

# %%
rng = np.random.default_rng(4)
experts = [{"kind": "constant", "value": float(v)} for v in rng.random(6)]
t = run(game, "defensive", 1.5, experts, {"kind": "adversarial_max_regret"}, 2000)
print(f"max regret {t.regret.max():.4f}, bound ln 6 / 1.5 = {math.log(6) / 1.5:.4f}")

# the tabulated loss tracks the quadratic it came from
p = np.linspace(0, 1, 5)
print(np.round(np.asarray(game.loss1(p)) - (1 - p) ** 2, 4))
