"""Logarithmic loss on binary outcomes.

Losses at the endpoints are ``+inf`` (``loss1(0)`` and ``loss0(1)``), never a
large finite sentinel.
"""
import math

import numpy as np

from defensor.games.base import Game

_INF = math.inf


def _loss1(p):
    if isinstance(p, (float, int)):
        return -math.log(p) if p > 0 else _INF
    with np.errstate(divide="ignore"):
        return -np.log(np.asarray(p, dtype=float))


def _loss0(p):
    if isinstance(p, (float, int)):
        return -math.log1p(-p) if p < 1 else _INF
    with np.errstate(divide="ignore"):
        return -np.log1p(-np.asarray(p, dtype=float))


def _gap_root(c):
    # loss1 - loss0 = ln((1 - p) / p)  =>  p = 1 / (1 + e^c)
    if c == _INF:
        return 0.0
    if c == -_INF:
        return 1.0
    if c >= 0:
        e = math.exp(-c)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(c))


def _loss1_root(c):
    if c <= 0:
        return 1.0
    return math.exp(-c)


def _loss0_root(c):
    if c <= 0:
        return 0.0
    return -math.expm1(-c)


def log_game() -> Game:
    """``-ln p`` on outcome 1 and ``-ln(1 - p)`` on outcome 0, ``eta = 1``."""
    return Game("log", _loss0, _loss1, 1.0, kind="log",
                gap_root=_gap_root, loss1_root=_loss1_root, loss0_root=_loss0_root)
