"""Piecewise cubic Hermite interpolation with Fritsch-Carlson limiting.

Written by hand rather than taken from scipy because the engine evaluates
tabulated losses one scalar at a time, tens of times per round, and a
Python-level scalar path is an order of magnitude cheaper than a scipy call.
"""
import math
from bisect import bisect_right

import numpy as np


class PiecewiseCubic:
    """Cubic polynomial on each interval ``[x[i], x[i+1]]``.

    ``coef[i] = (c0, c1, c2, c3)`` so that on segment ``i`` the value is
    ``c0 + c1*t + c2*t**2 + c3*t**3`` with ``t = x - x[i]``.  Evaluation
    outside ``[x[0], x[-1]]`` clamps to the end values.
    """

    def __init__(self, x, coef):
        self.x = np.asarray(x, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        if self.coef.shape != (len(self.x) - 1, 4):
            raise ValueError("coef must have shape (len(x) - 1, 4)")
        self._xs = self.x.tolist()
        self._cs = self.coef.tolist()
        h = np.diff(self.x)
        self._last = float(np.polyval(self.coef[-1, ::-1], h[-1]))
        # knot values, used by the root finder
        self._knots = self.coef[:, 0].tolist() + [self._last]
        n = len(self.x) - 1
        step = (self.x[-1] - self.x[0]) / n
        self._uniform = bool(np.allclose(h, step, rtol=0, atol=1e-14 * max(1.0, abs(step))))
        self._x0 = float(self.x[0])
        self._inv_step = 1.0 / step
        self._n = n

    def _segment(self, p):
        if self._uniform:
            i = int((p - self._x0) * self._inv_step)
            # guard against rounding at knot boundaries
            if i < self._n - 1 and p >= self._xs[i + 1]:
                i += 1
            elif i > 0 and p < self._xs[i]:
                i -= 1
        else:
            i = bisect_right(self._xs, p) - 1
        return min(max(i, 0), self._n - 1)

    def _scalar(self, p):
        if p <= self._xs[0]:
            return self._cs[0][0]
        if p >= self._xs[-1]:
            return self._last
        i = self._segment(p)
        c0, c1, c2, c3 = self._cs[i]
        t = p - self._xs[i]
        return c0 + t * (c1 + t * (c2 + t * c3))

    def __call__(self, p):
        if isinstance(p, (float, int)):
            return self._scalar(float(p))
        p = np.clip(np.asarray(p, dtype=float), self.x[0], self.x[-1])
        idx = np.clip(np.searchsorted(self.x, p, side="right") - 1, 0, self._n - 1)
        t = p - self.x[idx]
        c = self.coef[idx]
        return c[..., 0] + t * (c[..., 1] + t * (c[..., 2] + t * c[..., 3]))

    def __sub__(self, other):
        if not np.array_equal(self.x, other.x):
            raise ValueError("knots differ")
        return PiecewiseCubic(self.x, self.coef - other.coef)

    def root_decreasing(self, c):
        """Return ``x`` with ``f(x) = c`` for a nonincreasing ``f``.

        Values of ``c`` above ``f(x[0])`` give ``x[0]``; values below the
        right end value give ``x[-1]``.
        """
        knots = self._knots
        if c >= knots[0]:
            return self._xs[0]
        if c <= knots[-1]:
            return self._xs[-1]
        # largest i with knots[i] >= c (knots are nonincreasing)
        lo, hi = 0, self._n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if knots[mid] >= c:
                lo = mid
            else:
                hi = mid
        i = lo
        c0, c1, c2, c3 = self._cs[i]
        h = self._xs[i + 1] - self._xs[i]
        a, b = 0.0, h
        fa, fb = knots[i] - c, knots[i + 1] - c
        t = h * fa / (fa - fb) if fa != fb else 0.5 * h
        for _ in range(50):
            f = c0 - c + t * (c1 + t * (c2 + t * c3))
            if f > 0:
                a = t
            elif f < 0:
                b = t
            else:
                break
            df = c1 + t * (2.0 * c2 + 3.0 * t * c3)
            nt = t - f / df if df < 0 else 0.5 * (a + b)
            if not a < nt < b:
                nt = 0.5 * (a + b)
            if abs(nt - t) <= 1e-16 * h + 1e-300:
                t = nt
                break
            t = nt
        return self._xs[i] + t


def monotone_cubic(x, y):
    """Fritsch-Carlson monotone cubic interpolant through ``(x, y)``.

    Monotone data stays monotone between knots.  Interior tangents start
    from the three-point (second-order) estimate and are limited to the
    circle of radius 3 in the (alpha, beta) plane.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
        raise ValueError("x and y must be 1-d arrays of equal length >= 2")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    if not np.all(np.isfinite(y)):
        raise ValueError("tabulated values must be finite")
    h = np.diff(x)
    delta = np.diff(y) / h
    n = len(x)
    m = np.empty(n)
    if n == 2:
        m[:] = delta[0]
    else:
        h0, h1 = h[:-1], h[1:]
        d0, d1 = delta[:-1], delta[1:]
        m[1:-1] = (h1 * d0 + h0 * d1) / (h0 + h1)
        m[1:-1][d0 * d1 <= 0] = 0.0
        m[0] = _edge_tangent(h[0], h[1], delta[0], delta[1])
        m[-1] = _edge_tangent(h[-1], h[-2], delta[-1], delta[-2])
    for i in range(n - 1):
        if delta[i] == 0.0:
            m[i] = m[i + 1] = 0.0
            continue
        alpha = m[i] / delta[i]
        beta = m[i + 1] / delta[i]
        if alpha < 0:
            m[i] = alpha = 0.0
        if beta < 0:
            m[i + 1] = beta = 0.0
        # hypot and rescaling m directly stay finite when delta is subnormal
        r = math.hypot(alpha, beta)
        if r > 3.0:
            m[i] = 3.0 * m[i] / r
            m[i + 1] = 3.0 * m[i + 1] / r
    coef = np.empty((n - 1, 4))
    coef[:, 0] = y[:-1]
    coef[:, 1] = m[:-1]
    coef[:, 2] = (3.0 * delta - 2.0 * m[:-1] - m[1:]) / h
    coef[:, 3] = (m[:-1] + m[1:] - 2.0 * delta) / h**2
    return PiecewiseCubic(x, coef)


def _edge_tangent(h0, h1, d0, d1):
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(m) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(m) > 3.0 * abs(d0):
        return 3.0 * d0
    return m
