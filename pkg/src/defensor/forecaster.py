"""Learner strategies: defensive forecasting and the Aggregating Algorithm.

The defensive rule picks ``p`` so that neither outcome makes the
supermartingale grow, i.e. ``t(0, p) <= 0`` and ``t(1, p) <= 0``.  A minimax
argument guarantees such a ``p`` exists; here it is found by bisection on
``h(p) = t(1, p) - t(0, p)``.  Both increments are continuous in ``p``,
``h(0) > 0`` and ``h(1) < 0`` whenever the two endpoint shortcuts fail, and
at a zero of ``h`` the mean inequality ``p t(1, p) + (1 - p) t(0, p) <= 0``
forces both increments to be nonpositive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from defensor.errors import (
    AllWeightsZero,
    ConfigError,
    ContinuityViolation,
    NonConstantAdvice,
    SubstitutionFailure,
)
from defensor.games.base import Game
from defensor.martingale import (
    INF,
    Advice,
    WeightState,
    amax,
    asum,
    check_kappa,
    logsumexp,
    relative_increments,
)


@dataclass(frozen=True)
class ForecasterConfig:
    bisect_tol: float = 1e-12
    t_tol: float = 1e-9
    max_iter: int = 200
    # try the game's closed-form root before bisecting (constant advice only)
    use_root_solvers: bool = True

    def __post_init__(self):
        if not self.bisect_tol > 0:
            raise ConfigError("bisect_tol must be positive")
        if not self.t_tol > 0:
            raise ConfigError("t_tol must be positive")
        if self.max_iter < math.ceil(math.log2(1.0 / self.bisect_tol)):
            raise ConfigError("max_iter too small to reach bisect_tol")


DEFAULT_CONFIG = ForecasterConfig()


def _constant_increments(state: WeightState, advice: Advice, game: Game, top: float):
    """Closed form of the relative increments for constant advice.

    With ``A_w = sum_k e^{d_k - kappa l(w, g_k)}`` and ``S = sum_k e^{d_k}``,
    ``t(w, p) = e^{kappa l(w, p)} A_w - S``, so each evaluation costs two
    scalar loss calls.  Returns ``(rel, rel_one, gap)``: ``rel(p)`` gives
    both increments divided by ``e^{max d}``, ``rel_one(omega, p)`` just one
    of them, and ``gap`` is the value of ``l(1, p) - l(0, p)`` at which
    ``t(1, p) = t(0, p)``.
    """
    d = state.log_weights
    if top == -INF or top == INF:
        return (lambda p: (0.0, 0.0)), (lambda omega, p: 0.0), None
    kappa = state.kappa
    dd = d - top
    cached = advice.exp_losses(game, kappa)
    if cached is not None:
        _, w, s = state.scaled
        log_s = math.log(s)
        a0, a1 = (cached @ w).tolist()
        log_a0 = math.log(a0) if a0 > 0 else -INF
        log_a1 = math.log(a1) if a1 > 0 else -INF
    else:
        l0, l1 = advice.losses(game)
        log_s = logsumexp(dd)
        s = math.exp(log_s)
        log_a0 = logsumexp(dd - kappa * l0)
        log_a1 = logsumexp(dd - kappa * l1)
    loss0, loss1 = game.loss0, game.loss1

    def one(lam, log_a):
        if lam == INF:
            # limit: infinite only if some live expert has finite loss
            return INF if log_a > -INF else 0.0
        x = kappa * lam + log_a - log_s
        return INF if x > 709.0 else s * math.expm1(x)

    def rel(p):
        return one(loss0(p), log_a0), one(loss1(p), log_a1)

    def rel_one(omega, p):
        return one(loss1(p), log_a1) if omega else one(loss0(p), log_a0)

    gap = (log_a0 - log_a1) / kappa
    return rel, rel_one, (None if math.isnan(gap) else gap)


# below this many experts a scalar loop beats numpy's per-call overhead
POINTWISE_MAX_K = 32


def _pointwise_increments(state: WeightState, advice: Advice, game: Game, top: float):
    """Relative increments for second-guessing advice, one expert at a time.

    Same values as ``relative_increments``: each expert contributes
    ``e^{d_k - top} expm1(kappa (l(w, p) - l(w, g_k)))``, and constant
    experts have their losses computed once.
    """
    if top == -INF or top == INF:
        return lambda p: (0.0, 0.0)
    kappa = state.kappa
    loss0, loss1 = game.loss0, game.loss1
    fixed, moving = [], []
    for dk, m in zip(state.log_weights.tolist(), advice.maps):
        if dk == -INF:
            continue
        dr = dk - top
        if callable(m):
            moving.append((math.exp(dr), dr, m))
        else:
            g = float(m)
            fixed.append((math.exp(dr), dr, float(loss0(g)), float(loss1(g))))

    def term(w, dr, lp, lg):
        if lp == lg:
            return 0.0
        if lp == INF:
            return INF
        x = kappa * (lp - lg)
        if x > 700.0:
            v = dr + x
            return INF if v > 709.0 else math.exp(v) - w
        return w * math.expm1(x)

    def rel(p):
        lp0, lp1 = float(loss0(p)), float(loss1(p))
        r0 = r1 = 0.0
        for w, dr, l0, l1 in fixed:
            r0 += term(w, dr, lp0, l0)
            r1 += term(w, dr, lp1, l1)
        for w, dr, m in moving:
            g = m(p)
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"expert advised {g!r} at p={p!r}, outside [0, 1]")
            r0 += term(w, dr, lp0, float(loss0(g)))
            r1 += term(w, dr, lp1, float(loss1(g)))
        return r0, r1

    return rel


def defensive_forecast(state: WeightState, advice: Advice, game: Game,
                       cfg: ForecasterConfig = DEFAULT_CONFIG) -> float:
    """Prediction ``p`` with ``t(0, p) <= t_tol`` and ``t(1, p) <= t_tol``.

    Raises ``KappaTooLarge`` if ``state.kappa > game.eta`` and
    ``ContinuityViolation`` if bisection ends at a point that still lets the
    supermartingale grow.
    """
    check_kappa(state.kappa, game)
    if len(advice) != state.n_experts:
        raise ConfigError(f"advice has {len(advice)} experts, state has {state.n_experts}")
    top = state.scaled[0]
    gap = None
    if advice.is_constant:
        rel, rel_one, gap = _constant_increments(state, advice, game, top)
    else:
        if len(advice) <= POINTWISE_MAX_K:
            rel = _pointwise_increments(state, advice, game, top)
        else:
            def rel(p):
                return relative_increments(state, game, p, advice(p))

        def rel_one(omega, p):
            return rel(p)[omega]

    scale = math.exp(min(top, 709.0)) if top > -INF else 0.0
    tol = cfg.t_tol

    def ok(r):
        return r <= 0.0 or (r < INF and r * scale <= tol)

    if ok(rel_one(1, 0.0)):
        return 0.0
    if ok(rel_one(0, 1.0)):
        return 1.0

    if gap is not None and cfg.use_root_solvers and game.gap_root is not None:
        p = min(1.0, max(0.0, float(game.gap_root(gap))))
        r0, r1 = rel(p)
        if ok(r0) and ok(r1):
            return p

    lo, hi = 0.0, 1.0
    it = 0
    p = None
    while it < cfg.max_iter:
        mid = 0.5 * (lo + hi)
        if hi - lo <= cfg.bisect_tol or not lo < mid < hi:
            r0, r1 = rel(mid)
            if ok(r0) and ok(r1):
                return mid
            if not lo < mid < hi:
                p = mid
                break
            # width reached but the tolerance is not met yet: keep halving,
            # since large weights magnify the residual of a 1e-12 bracket
        else:
            r0, r1 = rel(mid)
        it += 1
        h = r1 - r0
        if h > 0:
            lo = mid
        elif h < 0:
            hi = mid
        elif h == 0:
            lo = hi = mid
        else:
            raise ContinuityViolation(f"continuity violation: increment undefined at p={mid!r}")
    if p is None:
        p = 0.5 * (lo + hi)
    # best of the final bracket
    _, p = min((max(rel(x)), x) for x in (p, lo, hi))
    r0, r1 = rel(p)
    if not (ok(r0) and ok(r1)):
        raise ContinuityViolation(
            f"continuity violation: at p={p!r} increments are "
            f"t(0)={r0 * scale!r}, t(1)={r1 * scale!r} (t_tol={tol})")
    return p


def generalized_prediction(state: WeightState, advice: Advice, game: Game):
    """AA mixture ``g(w) = -(1/kappa) ln sum_k q_k e^{-kappa l(w, g_k)}``.

    ``q`` are the normalized weights ``e^{d_k}``.
    """
    d = state.log_weights
    top = amax(d)
    if top == -INF:
        raise AllWeightsZero("all weights zero: every expert has infinite loss")
    kappa = state.kappa
    l0, l1 = advice.losses(game)
    dd = d - top
    log_s = logsumexp(dd)
    g0 = (log_s - logsumexp(dd - kappa * l0)) / kappa
    g1 = (log_s - logsumexp(dd - kappa * l1)) / kappa
    return g0, g1


def aa_forecast(state: WeightState, constant_advice, game: Game,
                cfg: ForecasterConfig = DEFAULT_CONFIG) -> float:
    """Aggregating Algorithm prediction for constant expert advice.

    The feasible predictions ``l(0, p) <= g(0)``, ``l(1, p) <= g(1)`` form
    an interval; its midpoint is returned.  Mixing uses the state's
    ``kappa``, which must not exceed ``game.eta``.
    """
    check_kappa(state.kappa, game)
    if isinstance(constant_advice, Advice):
        advice = constant_advice
        if not advice.is_constant:
            raise NonConstantAdvice()
    else:
        values = list(constant_advice)
        if any(callable(v) for v in values):
            raise NonConstantAdvice()
        advice = Advice.constant(values)
    if len(advice) != state.n_experts:
        raise ConfigError(f"advice has {len(advice)} experts, state has {state.n_experts}")
    g0, g1 = generalized_prediction(state, advice, game)
    tol = cfg.t_tol
    loss0, loss1 = game.loss0, game.loss1
    fast = cfg.use_root_solvers
    # feasible set is [lo, hi]: loss1 falls and loss0 rises in p
    lo = _level_point(loss1, g1, game.loss1_root if fast else None, cfg, increasing=False)
    hi = _level_point(loss0, g0, game.loss0_root if fast else None, cfg, increasing=True)

    def feasible(p):
        return loss0(p) <= g0 + tol and loss1(p) <= g1 + tol

    # the midpoint keeps the symmetry of symmetric games exact
    for p in (0.5 * (lo + hi), lo, hi):
        if feasible(p):
            return float(p)
    raise SubstitutionFailure(
        f"substitution failure: no p has losses below the generalized prediction "
        f"({g0!r}, {g1!r}); best candidates {lo!r}, {hi!r}")


def _level_point(loss, level, root, cfg, increasing):
    """Boundary of ``{p : loss(p) <= level}`` for a monotone ``loss``.

    For decreasing ``loss`` this is the smallest such ``p``, for increasing
    ``loss`` the largest.  Uses ``root`` when given, bisection otherwise.
    """
    inside, outside = (0.0, 1.0) if increasing else (1.0, 0.0)
    if loss(outside) <= level:
        return outside
    if root is not None:
        cand = min(1.0, max(0.0, float(root(level))))
        if loss(cand) <= level + cfg.t_tol:
            return cand
    if not loss(inside) <= level:
        return inside
    for _ in range(cfg.max_iter):
        if abs(outside - inside) <= cfg.bisect_tol:
            break
        mid = 0.5 * (inside + outside)
        if loss(mid) <= level:
            inside = mid
        else:
            outside = mid
    return inside


__all__ = [
    "DEFAULT_CONFIG",
    "ForecasterConfig",
    "aa_forecast",
    "defensive_forecast",
    "generalized_prediction",
]
