"""Standard form of a game given by a finite decision set.

Decisions are mapped to exp-coordinates ``(u, v) = (exp(-eta x), exp(-eta y))``
where their eta-mixtures become ordinary convex combinations.  The standard
form prediction ``p`` is the point of the mixture closure minimizing
``p*y + (1-p)*x``, i.e. maximizing ``p ln v + (1-p) ln u`` over the hull.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from defensor.errors import ConfigError
from defensor.games.base import DecisionSet, Game, tabulated_game


def orientation(a, b, c) -> int:
    """Sign of the cross product ``(b - a) x (c - a)``.

    The float determinant is trusted only when it clears a forward error
    bound; otherwise it is recomputed exactly in rationals.
    """
    l = (b[0] - a[0]) * (c[1] - a[1])
    r = (b[1] - a[1]) * (c[0] - a[0])
    det = l - r
    bound = 4e-16 * (abs(l) + abs(r))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    fa = [Fraction(v) for v in a]
    l = (Fraction(b[0]) - fa[0]) * (Fraction(c[1]) - fa[1])
    r = (Fraction(b[1]) - fa[1]) * (Fraction(c[0]) - fa[0])
    return (l > r) - (l < r)


def upper_hull(points) -> np.ndarray:
    """Upper convex hull, left to right, without collinear vertices."""
    pts = sorted({(float(u), float(v)) for u, v in points})
    hull: list[tuple[float, float]] = []
    for q in pts:
        while len(hull) >= 2 and orientation(hull[-2], hull[-1], q) >= 0:
            hull.pop()
        hull.append(q)
    return np.array(hull).reshape(-1, 2)


def pareto_front(x, y) -> np.ndarray:
    """Indices of non-dominated decisions, sorted by increasing ``x``."""
    order = np.lexsort((y, x))
    keep = []
    best = np.inf
    for i in order:
        if y[i] < best:
            keep.append(i)
            best = y[i]
    return np.array(keep, dtype=int)


def exp_frontier(decisions: DecisionSet, eta: float):
    """Northeast boundary of the mixture closure in exp-coordinates.

    Returns ``(u, v, x0, y0)``: hull vertices sorted by increasing ``u``
    (hence decreasing ``v``), computed relative to the offsets ``x0 = min x``
    and ``y0 = min y`` so coordinates stay in ``(0, 1]``.
    """
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta!r}")
    x, y = decisions.x, decisions.y
    x0, y0 = float(x.min()), float(y.min())
    front = pareto_front(x, y)
    u = np.exp(-eta * (x[front] - x0))
    v = np.exp(-eta * (y[front] - y0))
    hull = upper_hull(np.column_stack([u, v]))
    # keep the descending part, from the top vertex (largest u among max v)
    top = np.flatnonzero(hull[:, 1] == hull[:, 1].max())[-1]
    hull = hull[top:]
    return hull[:, 0], hull[:, 1], x0, y0


def _best_on_frontier(u, v, p):
    """Maximize ``p ln v + (1-p) ln u`` over the polygonal frontier.

    ``p`` is an array in (0, 1).  The objective is concave, so its maximum
    lies on one of the two edges next to the best vertex; each edge has a
    closed-form stationary point.
    """
    with np.errstate(divide="ignore"):
        lu, lv = np.log(u), np.log(v)
    obj = p[:, None] * lv[None, :] + (1 - p[:, None]) * lu[None, :]
    # ties go to the larger u, i.e. the smaller loss0
    j = len(u) - 1 - np.argmax(obj[:, ::-1], axis=1)
    bu, bv = u[j].copy(), v[j].copy()
    best = obj[np.arange(len(p)), j]
    for k0 in (j - 1, j):
        ok = (k0 >= 0) & (k0 < len(u) - 1)
        k0c = np.clip(k0, 0, max(len(u) - 2, 0))
        k1c = np.minimum(k0c + 1, len(u) - 1)
        u0, v0 = u[k0c], v[k0c]
        du, dv = u[k1c] - u0, v[k1c] - v0
        denom = du * dv
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -(p * dv * u0 + (1 - p) * du * v0) / denom
        s = np.where(ok & (denom != 0) & np.isfinite(s), np.clip(s, 0.0, 1.0), 0.0)
        cu, cv = u0 + s * du, v0 + s * dv
        with np.errstate(divide="ignore"):
            val = p * np.log(cv) + (1 - p) * np.log(cu)
        better = ok & (val > best)
        bu = np.where(better, cu, bu)
        bv = np.where(better, cv, bv)
        best = np.where(better, val, best)
    return bu, bv


def standard_pairs(decisions: DecisionSet, eta: float, p) -> tuple[np.ndarray, np.ndarray]:
    """``(a_p, b_p)`` for each ``p``: the loss pair minimizing ``p y + (1-p) x``
    over the eta-mixture closure of ``decisions``."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    u, v, x0, y0 = exp_frontier(decisions, eta)
    bu = np.empty_like(p)
    bv = np.empty_like(p)
    # p = 0 minimizes loss0 alone: last vertex; p = 1: first vertex
    bu[p == 0], bv[p == 0] = u[-1], v[-1]
    bu[p == 1], bv[p == 1] = u[0], v[0]
    inner = np.flatnonzero((p > 0) & (p < 1))
    step = max(1, 2_000_000 // len(u))
    for s in range(0, len(inner), step):
        idx = inner[s:s + step]
        bu[idx], bv[idx] = _best_on_frontier(u, v, p[idx])
    a = x0 - np.log(bu) / eta
    b = y0 - np.log(bv) / eta
    return a, b


def standardize(decisions: DecisionSet, eta: float, grid_size: int = 1001,
                name: str = "standardized") -> Game:
    """Tabulated standard-form game built from a raw decision set.

    The loss pair is computed exactly at ``grid_size`` equispaced ``p`` and
    interpolated by monotone cubics in between.
    """
    if not eta > 0:
        raise ConfigError(f"eta must be positive, got {eta!r}")
    if grid_size < 2:
        raise ConfigError("grid_size must be at least 2")
    p = np.linspace(0.0, 1.0, grid_size)
    a, b = standard_pairs(decisions, eta, p)
    # enforce the monotone shape the interpolator expects against rounding
    a = np.maximum.accumulate(a)
    b = np.minimum.accumulate(b)
    return tabulated_game(np.column_stack([p, a, b]), eta, name=name)
