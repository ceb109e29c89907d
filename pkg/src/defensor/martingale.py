"""The K-expert exponential supermartingale, tracked in log space.

With learner loss ``L`` and expert losses ``L^k`` the process is
``S = sum_k exp(kappa (L - L^k))``.  Only the log-weights
``d_k = kappa (L - L^k)`` are stored, with ``-inf`` for experts whose
cumulative loss is infinite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from defensor.errors import ConfigError, KappaTooLarge, NonConstantAdvice
from defensor.games.base import Game

INF = math.inf

# ufunc reductions skip numpy's Python-level wrappers; it matters for the
# short per-round arrays
amax = np.maximum.reduce
amin = np.minimum.reduce
asum = np.add.reduce
_any = np.logical_or.reduce


def logsumexp(a: np.ndarray) -> float:
    """``log(sum(exp(a)))`` with ``-inf`` entries allowed."""
    if len(a) == 0:
        return -INF
    m = amax(a)
    if m == -INF or m == INF:
        return float(m)
    return float(m + math.log(asum(np.exp(a - m))))


def check_kappa(kappa: float, game: Game):
    if kappa > game.eta * (1 + 1e-12):
        raise KappaTooLarge(kappa, game.eta)


@dataclass(frozen=True, eq=False)
class WeightState:
    """Cumulative losses and log-weights after ``round`` completed rounds."""

    kappa: float
    log_weights: np.ndarray
    learner_loss: float
    expert_losses: np.ndarray
    round: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa!r}")
        for name in ("log_weights", "expert_losses"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def _trusted(cls, kappa, log_weights, learner_loss, expert_losses, round):
        # fresh float arrays from advance(); skips validation and copying
        obj = object.__new__(cls)
        log_weights.setflags(write=False)
        expert_losses.setflags(write=False)
        for name, val in (("kappa", kappa), ("log_weights", log_weights),
                          ("learner_loss", learner_loss), ("expert_losses", expert_losses),
                          ("round", round)):
            object.__setattr__(obj, name, val)
        return obj

    @classmethod
    def initial(cls, n_experts: int, kappa: float) -> WeightState:
        if n_experts < 1:
            raise ConfigError("need at least one expert")
        return cls(kappa, np.zeros(n_experts), 0.0, np.zeros(n_experts), 0)

    @classmethod
    def from_losses(cls, kappa, learner_loss, expert_losses, round=0) -> WeightState:
        expert_losses = np.asarray(expert_losses, dtype=float)
        return cls(kappa, log_weights_from(kappa, learner_loss, expert_losses),
                   float(learner_loss), expert_losses, round)

    @property
    def n_experts(self) -> int:
        return len(self.log_weights)

    @cached_property
    def scaled(self):
        """``(top, w, s)`` with ``top = max d``, ``w = e^{d - top}``, ``s = sum w``.

        ``w`` is None when ``top`` is infinite.
        """
        top = float(amax(self.log_weights))
        if top == -INF or top == INF:
            return top, None, 0.0
        w = np.exp(self.log_weights - top)
        return top, w, float(asum(w))

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "round": self.round,
            "learner_loss": _enc(self.learner_loss),
            "expert_losses": [_enc(v) for v in self.expert_losses],
            "log_weights": [_enc(v) for v in self.log_weights],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> WeightState:
        try:
            kappa = float(doc["kappa"])
            losses = [_dec(v) for v in doc["expert_losses"]]
            learner = _dec(doc["learner_loss"])
            rnd = int(doc["round"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed weight state: {exc}") from None
        # weights are recomputed from the losses, the stored copy is informational
        return cls.from_losses(kappa, learner, losses, rnd)

    @classmethod
    def from_json(cls, text: str) -> WeightState:
        return cls.from_dict(json.loads(text))


def _enc(v):
    v = float(v)
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return v


def _dec(v):
    return float(v)  # float() parses "inf" and "-inf"


def log_weights_from(kappa, learner_loss, expert_losses) -> np.ndarray:
    """``kappa (L - L^k)``; an expert with infinite loss gets ``-inf``."""
    if learner_loss == INF:
        return np.where(expert_losses == INF, -INF, INF)
    return kappa * (learner_loss - expert_losses)


class Advice:
    """One round of expert advice: ``K`` maps from ``[0, 1]`` to ``[0, 1]``.

    Each entry of ``maps`` is either a number (a constant map) or a callable
    of the learner's prediction (a second-guessing expert).  Callables must
    be continuous and pure within the round.  ``lipschitz`` is an optional
    declared modulus of continuity shared by all maps.
    """

    __slots__ = ("maps", "lipschitz", "_values", "_dynamic", "_loss_cache", "_exp_cache")

    def __init__(self, maps: Sequence[float | Callable[[float], float]], lipschitz=None):
        self.maps = tuple(maps)
        if not self.maps:
            raise ConfigError("advice needs at least one expert")
        self.lipschitz = lipschitz
        self._dynamic = [i for i, m in enumerate(self.maps) if callable(m)]
        base = np.array([0.0 if callable(m) else float(m) for m in self.maps])
        if not (amin(base) >= 0.0 and amax(base) <= 1.0):
            # also catches NaN
            raise ConfigError("advice values must lie in [0, 1]")
        self._values = base
        self._loss_cache = {}
        self._exp_cache = {}

    @classmethod
    def constant(cls, values) -> Advice:
        return cls([float(v) for v in values])

    def __len__(self):
        return len(self.maps)

    @property
    def is_constant(self) -> bool:
        return not self._dynamic

    @property
    def constant_values(self) -> np.ndarray:
        if self._dynamic:
            raise NonConstantAdvice()
        return self._values

    def __call__(self, p: float) -> np.ndarray:
        if not self._dynamic:
            return self._values
        out = self._values.copy()
        for i in self._dynamic:
            g = self.maps[i](p)
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"expert {i} advised {g!r} at p={p!r}, outside [0, 1]")
            out[i] = g
        return out

    def losses(self, game: Game) -> tuple[np.ndarray, np.ndarray]:
        """Per-expert losses on outcomes 0 and 1 (constant advice only)."""
        key = id(game)
        hit = self._loss_cache.get(key)
        if hit is None or hit[0] is not game:
            g = self.constant_values
            hit = (game, np.asarray(game.loss0(g), float), np.asarray(game.loss1(g), float))
            self._loss_cache[key] = hit
        return hit[1], hit[2]

    def exp_losses(self, game: Game, kappa: float):
        """``2 x K`` array with rows ``e^{-kappa l0}`` and ``e^{-kappa l1}``, or
        ``None`` if a finite loss would underflow (callers then fall back to
        log space)."""
        key = (id(game), kappa)
        hit = self._exp_cache.get(key)
        if hit is None or hit[0] is not game:
            l0, l1 = self.losses(game)
            ls = np.array((l0, l1))
            pair = np.exp(-kappa * ls)
            lost = bool(_any(((pair == 0) & (ls < INF)).ravel()))
            hit = (game, None if lost else pair)
            self._exp_cache[key] = hit
        return hit[1]


def _loss_diff(lp: float, lg: np.ndarray) -> np.ndarray:
    # inf - inf means learner and expert both lost everything: no change
    if lp == INF:
        return np.where(lg == INF, 0.0, INF)
    return lp - lg


def relative_increments(state: WeightState, game: Game, p: float, g: np.ndarray):
    """``(t(0, p), t(1, p)) / exp(max_k d_k)`` given the advice ``g`` at ``p``.

    Dividing by the largest weight keeps the sign of the increments intact
    when every weight under- or overflows.  Returns ``(0, 0)`` when all
    weights are zero.
    """
    d = state.log_weights
    active = d > -INF
    if not active.all():
        if not active.any():
            return 0.0, 0.0
        d, g = d[active], g[active]
    top = amax(d)
    if top == INF:
        # S is already infinite; nothing the learner does changes it
        return 0.0, 0.0
    d = d - top
    kappa = state.kappa
    out = []
    for lp, lg in ((game.loss0(p), game.loss0(g)), (game.loss1(p), game.loss1(g))):
        delta = _loss_diff(lp, np.asarray(lg, dtype=float))
        if (delta == INF).any():
            out.append(INF)
        else:
            out.append(_shifted_sum(d, kappa * delta))
    return out[0], out[1]


def _shifted_sum(d, kd):
    """``sum_k e^{d_k + kd_k} - e^{d_k}`` with a common max-shift.

    Small exponents go through ``expm1`` so the sign survives cancellation.
    """
    hi = d + kd
    m = max(float(amax(hi)), 0.0)
    small = kd <= 1.0
    terms = np.exp(d - m) * np.expm1(np.where(small, kd, 0.0))
    if not small.all():
        terms = np.where(small, terms, np.exp(hi - m) - np.exp(d - m))
    return float(asum(terms)) * math.exp(min(m, 709.0))


def increment(state: WeightState, advice: Advice, game: Game, omega: int, p: float) -> float:
    """Change ``S_n - S_{n-1}`` if the learner predicts ``p`` and ``omega`` occurs."""
    check_kappa(state.kappa, game)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    r = relative_increments(state, game, p, advice(p))[1 if omega else 0]
    if r == 0.0 or r == INF:
        return r
    return r * math.exp(min(amax(state.log_weights), 709.0))


def advance(state: WeightState, advice: Advice | np.ndarray, game: Game, p: float,
            omega: int) -> WeightState:
    """Successor state after the learner predicts ``p`` and ``omega`` occurs.

    ``advice`` may also be the advice vector already evaluated at ``p``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if isinstance(advice, Advice):
        if advice.is_constant:
            l0, l1 = advice.losses(game)
            lg = l1 if omega else l0
        else:
            lg = np.asarray(game.loss(omega, advice(p)), dtype=float)
    else:
        lg = np.asarray(game.loss(omega, np.asarray(advice, dtype=float)), dtype=float)
    return advance_by(state, float(game.loss(omega, p)), lg)


def advance_by(state: WeightState, learner_step: float, expert_steps: np.ndarray) -> WeightState:
    """Successor state given this round's learner and per-expert losses."""
    learner = state.learner_loss + learner_step
    experts = state.expert_losses + expert_steps
    return WeightState._trusted(state.kappa, log_weights_from(state.kappa, learner, experts),
                                learner, experts, state.round + 1)


def supermartingale_value(state: WeightState) -> float:
    """``S = sum_k exp(d_k)``, exact when all ``d_k`` are 0."""
    m, _, s = state.scaled
    if m == -INF:
        return 0.0
    if m == INF:
        return INF
    try:
        return math.exp(m) * s
    except OverflowError:
        return INF


def hoeffding_gap(p, h):
    """``p e^{h(1-p)} + (1-p) e^{-hp} - e^{h^2/8}``; nonpositive for p in [0, 1].

    This is the bound behind the quadratic-loss supermartingale.
    """
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    return p * np.exp(h * (1 - p)) + (1 - p) * np.exp(-h * p) - np.exp(h * h / 8)


def geometric_mean_gap(p, g, kappa):
    """``p^{1-k} g^k + (1-p)^{1-k} (1-g)^k - 1``; nonpositive for k in [0, 1].

    Weighted AM-GM, the bound behind the log-loss supermartingale.
    """
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    k = np.asarray(kappa, dtype=float)
    # 0^0 = 1, which numpy's power already follows
    return np.power(p, 1 - k) * np.power(g, k) + np.power(1 - p, 1 - k) * np.power(1 - g, k) - 1
