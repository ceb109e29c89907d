"""Expert and Reality strategies used to drive the protocol.

Strategies are built from plain dict specs, e.g. ``{"kind": "constant",
"value": 0.3}``, so that run configurations can be stored as JSON.  Each
instance carries the history of a single run.
"""
from __future__ import annotations

import math

import numpy as np

from defensor.errors import ConfigError

INF = math.inf
_amin = np.minimum.reduce


def _clip(x):
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def _prob(spec, key, default=None):
    val = spec.get(key, default)
    if val is None:
        raise ConfigError(f"{spec.get('kind')}: missing {key!r}")
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{spec.get('kind')}: {key!r} must be a number") from None
    if not 0.0 <= val <= 1.0:
        raise ConfigError(f"{spec.get('kind')}: {key!r} must lie in [0, 1], got {val}")
    return val


class ExpertStrategy:
    """Base class.  ``advise()`` returns a number or a continuous map of ``p``."""

    kind = "expert"
    # constant across rounds and independent of history
    static = False
    lipschitz: float | None = 0.0

    def __init__(self, spec):
        self.spec = dict(spec)

    def advise(self):
        raise NotImplementedError

    def observe(self, p, omega):
        pass


class Constant(ExpertStrategy):
    kind = "constant"
    static = True

    def __init__(self, spec):
        super().__init__(spec)
        self.value = _prob(spec, "value")

    def advise(self):
        return self.value


class FixedSequence(ExpertStrategy):
    """Constant advice each round, read from a list (cycled when exhausted)."""

    kind = "fixed_sequence"

    def __init__(self, spec):
        super().__init__(spec)
        values = spec.get("values")
        if not values:
            raise ConfigError("fixed_sequence: 'values' must be a nonempty list")
        self.values = [_prob({"kind": self.kind, "v": v}, "v") for v in values]
        self._n = 0

    def advise(self):
        return self.values[self._n % len(self.values)]

    def observe(self, p, omega):
        self._n += 1


class Frequency(ExpertStrategy):
    """Smoothed frequency of ones so far: ``(ones + s) / (n + 2 s)``."""

    kind = "frequency"

    def __init__(self, spec):
        super().__init__(spec)
        self.smoothing = float(spec.get("smoothing", 1.0))
        if self.smoothing <= 0:
            raise ConfigError("frequency: smoothing must be positive")
        self.ones = 0
        self.n = 0

    def advise(self):
        return (self.ones + self.smoothing) / (self.n + 2 * self.smoothing)

    def observe(self, p, omega):
        self.ones += omega
        self.n += 1


class ShiftMap(ExpertStrategy):
    """Second-guesser nudging the learner: ``clip(p + shift)``."""

    kind = "shift_map"
    lipschitz = 1.0

    def __init__(self, spec):
        super().__init__(spec)
        self.shift = float(spec.get("shift", 0.1))
        if not -1.0 <= self.shift <= 1.0:
            raise ConfigError("shift_map: shift must lie in [-1, 1]")

    def advise(self):
        shift = self.shift
        return lambda p: _clip(p + shift)


class Decategorizer(ExpertStrategy):
    """Pulls the learner's forecast toward ``center``: ``clip(c + s (p - 1/2))``.

    With ``s < 1`` this softens too-categorical predictions.
    """

    kind = "decategorizer"

    def __init__(self, spec):
        super().__init__(spec)
        self.slope = float(spec.get("slope", 0.5))
        self.center = _prob(spec, "center", 0.5)
        if not 0.0 < self.slope <= 1.0:
            raise ConfigError("decategorizer: slope must lie in (0, 1]")
        self.lipschitz = self.slope

    def advise(self):
        c, s = self.center, self.slope
        return lambda p: _clip(c + s * (p - 0.5))


class InternalRegretPair(ExpertStrategy):
    """Replaces predictions near ``source`` by ``target``, elsewhere echoes ``p``.

    Within ``radius`` of ``source`` the advice is ``target``; a linear ramp of
    width ``width`` blends back to the identity so the map stays continuous.
    """

    kind = "internal_regret_pair"

    def __init__(self, spec):
        super().__init__(spec)
        self.source = _prob(spec, "source")
        self.target = _prob(spec, "target")
        self.radius = float(spec.get("radius", 0.05))
        self.width = float(spec.get("width", 0.01))
        if self.radius < 0 or self.width <= 0:
            raise ConfigError("internal_regret_pair: need radius >= 0 and width > 0")
        self.lipschitz = 1.0 + 1.0 / self.width

    def advise(self):
        i, j, r, w = self.source, self.target, self.radius, self.width

        def gamma(p):
            dist = abs(p - i)
            if dist <= r:
                lam = 1.0
            elif dist >= r + w:
                return p
            else:
                lam = 1.0 - (dist - r) / w
            return p + lam * (j - p)

        return gamma


EXPERT_KINDS = {
    cls.kind: cls
    for cls in (Constant, FixedSequence, Frequency, ShiftMap, Decategorizer, InternalRegretPair)
}


def make_expert(spec: dict) -> ExpertStrategy:
    if not isinstance(spec, dict) or spec.get("kind") not in EXPERT_KINDS:
        raise ConfigError(f"unknown expert spec {spec!r}")
    return EXPERT_KINDS[spec["kind"]](spec)


def is_constant_kind(spec: dict) -> bool:
    """Whether experts of this spec always give constant (non-second-guessing) advice."""
    return spec.get("kind") in ("constant", "fixed_sequence", "frequency")


class RealityStrategy:
    kind = "reality"

    def __init__(self, spec):
        self.spec = dict(spec)

    def choose(self, p, advice_values, game, state) -> int:
        raise NotImplementedError


class FixedOutcomes(RealityStrategy):
    kind = "fixed_sequence"

    def __init__(self, spec):
        super().__init__(spec)
        outcomes = spec.get("outcomes")
        if not outcomes:
            raise ConfigError("fixed_sequence reality: 'outcomes' must be a nonempty list")
        if any(o not in (0, 1) or isinstance(o, bool) for o in outcomes):
            raise ConfigError("fixed_sequence reality: outcomes must be 0 or 1")
        self.outcomes = list(outcomes)
        self._n = 0

    def choose(self, p, advice_values, game, state):
        if self._n >= len(self.outcomes):
            raise ConfigError(f"fixed_sequence reality ran out after {self._n} outcomes")
        omega = self.outcomes[self._n]
        self._n += 1
        return omega


class Bernoulli(RealityStrategy):
    kind = "bernoulli"

    def __init__(self, spec):
        super().__init__(spec)
        self.theta = _prob(spec, "theta", 0.5)
        self.seed = spec.get("seed")
        if self.seed is None:
            raise ConfigError("bernoulli reality needs an integer 'seed'")
        self._rng = np.random.default_rng(int(self.seed))

    def choose(self, p, advice_values, game, state):
        return int(self._rng.random() < self.theta)


class AdversarialMaxLoss(RealityStrategy):
    """Outcome on which the learner's prediction loses most (ties to 1)."""

    kind = "adversarial_max_loss"

    def choose(self, p, advice_values, game, state):
        return 1 if game.loss1(p) >= game.loss0(p) else 0


class AdversarialMaxRegret(RealityStrategy):
    """Outcome maximizing the learner's regret to the best expert after this round."""

    kind = "adversarial_max_regret"

    def choose(self, p, advice_values, game, state):
        best, best_omega = -INF, 1
        for omega, loss in ((1, game.loss1), (0, game.loss0)):
            learner = state.learner_loss + loss(p)
            leader = float(_amin(state.expert_losses + loss(advice_values)))
            regret = learner - leader
            if math.isnan(regret):
                regret = -INF
            if regret > best:
                best, best_omega = regret, omega
        return best_omega


REALITY_KINDS = {
    cls.kind: cls
    for cls in (FixedOutcomes, Bernoulli, AdversarialMaxLoss, AdversarialMaxRegret)
}


def make_reality(spec: dict) -> RealityStrategy:
    if not isinstance(spec, dict) or spec.get("kind") not in REALITY_KINDS:
        raise ConfigError(f"unknown reality spec {spec!r}")
    return REALITY_KINDS[spec["kind"]](spec)
