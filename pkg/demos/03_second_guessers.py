"""Experts that react to the learner's own forecast.

A decategorizer pulls forecasts toward the middle; an internal-regret pair
expert says "whenever you predict about 0.3, predict 0.6 instead".  Both
are continuous maps, and the bound is unchanged.
"""
import math

from defensor.engine import run
from defensor.games import quadratic_game

game = quadratic_game()
experts = [
    {"kind": "constant", "value": 0.25},
    {"kind": "decategorizer", "slope": 0.5},
    {"kind": "internal_regret_pair", "source": 0.3, "target": 0.6},
    {"kind": "shift_map", "shift": 0.1},
]

for kind in ("adversarial_max_loss", "adversarial_max_regret"):
    t = run(game, "defensive", 2.0, experts, {"kind": kind}, 3000)
    print(f"{kind}: max regret {t.regret.max():.4f} (bound {math.log(4) / 2:.4f}), "
          f"last forecasts {t.p[-3:].round(4).tolist()}")

# %%
# the advice the engine records is each map evaluated at the forecast
t = run(game, "defensive", 2.0, experts, {"kind": "adversarial_max_loss"}, 10)
for n in range(3):
    print(f"round {n + 1}: p={t.p[n]:.4f} advice={t.advice[n].round(4).tolist()}")

# %%
# the Aggregating Algorithm has no answer to p-dependent advice
try:
    run(game, "aa", 2.0, experts, {"kind": "adversarial_max_loss"}, 10)
except Exception as exc:
    print(type(exc).__name__ + ":", exc)
