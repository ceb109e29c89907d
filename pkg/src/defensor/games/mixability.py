"""Numerical mixability certificates for binary games."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from defensor.errors import ConfigError, NotMixable
from defensor.games.base import DecisionSet, Game
from defensor.games.standardize import exp_frontier, pareto_front

ONE_STEP_TOL = 1e-9


class OneStepReport(NamedTuple):
    holds: bool
    worst_slack: float
    worst_point: tuple[float, float]


def weighted_exp(weight, diff, kappa):
    """``weight * exp(kappa * diff)`` on the extended reals.

    ``inf - inf`` differences count as 0 (both sides lose infinitely), and a
    zero weight kills the term even when the exponent is ``+inf``.
    """
    diff = np.where(np.isnan(diff), 0.0, diff)
    with np.errstate(over="ignore", invalid="ignore"):
        term = weight * np.exp(kappa * diff)
    return np.where(weight == 0, 0.0, term)


def one_step_values(game: Game, kappa: float, p, g):
    """``E(p, g) = p e^{k(l1(p) - l1(g))} + (1-p) e^{k(l0(p) - l0(g))}``.

    ``p`` and ``g`` broadcast against each other.
    """
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    with np.errstate(invalid="ignore"):
        d1 = np.asarray(game.loss1(p)) - np.asarray(game.loss1(g))
        d0 = np.asarray(game.loss0(p)) - np.asarray(game.loss0(g))
    return weighted_exp(p, d1, kappa) + weighted_exp(1.0 - p, d0, kappa)


def check_one_step_inequality(game: Game, kappa: float, grid_size: int = 512,
                              tol: float = ONE_STEP_TOL) -> OneStepReport:
    """Scan ``E(p, g) <= 1`` over a ``grid_size x grid_size`` grid of [0, 1]^2.

    This is the per-expert condition making ``exp(kappa (L - L^k))`` a
    supermartingale.  ``worst_slack`` is ``max E - 1``.
    """
    if not kappa > 0:
        raise ConfigError(f"kappa must be positive, got {kappa!r}")
    if grid_size < 2:
        raise ConfigError("grid_size must be at least 2")
    grid = np.linspace(0.0, 1.0, grid_size)
    e = one_step_values(game, kappa, grid[:, None], grid[None, :])
    i, j = np.unravel_index(np.argmax(e), e.shape)
    worst = float(e[i, j]) - 1.0
    return OneStepReport(worst <= tol, worst, (float(grid[i]), float(grid[j])))


def mixability_defect(decisions: DecisionSet, eta: float) -> float:
    """How far the decisions sit inside their own eta-mixture closure.

    For every non-dominated decision, the loss-1 distance (in loss units)
    between it and the closure boundary at the same loss-0.  Zero iff the
    exp-image of the superprediction set is already convex, i.e. the
    decisions are eta-mixable.
    """
    u, v, x0, y0 = exp_frontier(decisions, eta)
    front = pareto_front(decisions.x, decisions.y)
    pu = np.exp(-eta * (decisions.x[front] - x0))
    pv = np.exp(-eta * (decisions.y[front] - y0))
    # np.interp wants increasing abscissae; u is increasing along the frontier
    vh = np.interp(pu, u, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = (np.log(vh) - np.log(pv)) / eta
    depth = depth[np.isfinite(depth)]
    return float(max(depth.max(initial=0.0), 0.0))


def is_mixable(decisions: DecisionSet, eta: float, tol: float = 1e-8) -> bool:
    return mixability_defect(decisions, eta) <= tol


def estimate_eta_star(decisions: DecisionSet, tol: float = 1e-3, eta_min: float = 1e-3,
                      eta_max: float = 64.0, defect_tol: float = 1e-8) -> float:
    """Bisect for the largest eta at which ``decisions`` are eta-mixable.

    Mixability is monotone in eta, so bisection on the predicate
    ``mixability_defect <= defect_tol`` brackets the supremum.  Returns
    ``eta_max`` when every rate in the bracket passes (e.g. one decision).
    """
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if not 0 < eta_min < eta_max:
        raise ConfigError("need 0 < eta_min < eta_max")
    ok = lambda eta: mixability_defect(decisions, eta) <= defect_tol  # noqa: E731
    if ok(eta_max):
        return eta_max
    if not ok(eta_min):
        raise NotMixable(f"decisions are not mixable for any eta >= {eta_min}")
    lo, hi = eta_min, eta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
