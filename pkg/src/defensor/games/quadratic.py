"""Quadratic (Brier) loss on binary outcomes."""
import math

from defensor.games.base import Game


def _loss0(p):
    return p * p


def _loss1(p):
    q = 1.0 - p
    return q * q


def _gap_root(c):
    # loss1 - loss0 = 1 - 2p
    return min(1.0, max(0.0, 0.5 * (1.0 - c)))


def _loss1_root(c):
    if c >= 1.0:
        return 0.0
    if c <= 0.0:
        return 1.0
    return 1.0 - math.sqrt(c)


def _loss0_root(c):
    if c >= 1.0:
        return 1.0
    if c <= 0.0:
        return 0.0
    return math.sqrt(c)


def quadratic_game() -> Game:
    """``(p - omega)**2``, mixable with ``eta = 2``."""
    return Game("quadratic", _loss0, _loss1, 2.0, kind="quadratic",
                gap_root=_gap_root, loss1_root=_loss1_root, loss0_root=_loss0_root)
