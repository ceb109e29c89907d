"""Log loss with experts that are sometimes certain.

An expert announcing 0 or 1 and being wrong takes an infinite loss and its
weight drops to zero for good.  The learner itself never does.
"""
import math

import numpy as np

from defensor.engine import run
from defensor.games import log_game

game = log_game()
experts = [
    {"kind": "constant", "value": 0.3},
    {"kind": "constant", "value": 0.7},
    {"kind": "fixed_sequence", "values": [0.5, 0.5, 1.0, 0.5, 0.0]},
    {"kind": "frequency"},
]
trace = run(game, "defensive", 1.0, experts, {"kind": "bernoulli", "theta": 0.6, "seed": 1}, 500)

# %%
dead = np.isinf(trace.expert_cum[-1])
print("expert cumulative losses:", np.round(trace.expert_cum[-1], 2))
print("dead experts:", np.flatnonzero(dead).tolist())
print("learner loss:", round(trace.cum_loss[-1], 2))
print(f"max regret {trace.regret.max():.4f} vs ln 4 = {math.log(4):.4f}")

# %%
# with kappa = 1 the forecast is the weighted mean of the advice and S is an
# exact martingale: it stays at K even when an expert dies
print("S at rounds 1, 10, 100, 500:", [round(float(trace.S[i]), 9) for i in (0, 9, 99, 499)])
