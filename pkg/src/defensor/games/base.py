"""Binary prediction games in standard form and raw decision sets."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from defensor.errors import ConfigError
from defensor.games._interp import PiecewiseCubic, monotone_cubic

LossFn = Callable[[float | np.ndarray], float | np.ndarray]


@dataclass(frozen=True, eq=False)
class Game:
    """A binary game in standard form.

    ``loss0(p)`` and ``loss1(p)`` are the losses of prediction ``p`` when the
    outcome is 0 and 1.  Both accept a float or an array and may return
    ``inf``.  ``eta`` is the certified mixability rate.

    ``gap_root(c)``, ``loss0_root(c)`` and ``loss1_root(c)`` are optional
    fast solvers for ``loss1(p) - loss0(p) = c``, ``loss0(p) = c`` and
    ``loss1(p) = c``.  Forecasters use them
    when present and fall back to bisection otherwise.
    """

    name: str
    loss0: LossFn
    loss1: LossFn
    eta: float
    kind: str = "custom"
    gap_root: Callable[[float], float] | None = field(default=None, repr=False)
    loss1_root: Callable[[float], float] | None = field(default=None, repr=False)
    loss0_root: Callable[[float], float] | None = field(default=None, repr=False)
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta!r}")

    def loss(self, omega, p):
        return self.loss1(p) if omega else self.loss0(p)

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "eta": self.eta}
        if self.kind == "tabulated":
            d["grid"] = self.table.tolist()
        return d


def tabulated_game(grid, eta, name="tabulated") -> Game:
    """Game from rows ``(p, loss0, loss1)`` with monotone cubic interpolation."""
    table = np.asarray(grid, dtype=float)
    if table.ndim != 2 or table.shape[1] != 3 or len(table) < 2:
        raise ConfigError("grid must be a list of at least two [p, loss0, loss1] rows")
    p, l0, l1 = table.T
    if p[0] != 0.0 or p[-1] != 1.0:
        raise ConfigError("grid must span p = 0 to p = 1")
    if not np.all(np.isfinite(table)):
        raise ConfigError("tabulated losses must be finite")
    if np.any(np.diff(l0) < 0) or np.any(np.diff(l1) > 0):
        raise ConfigError("loss0 must be nondecreasing and loss1 nonincreasing in p")
    try:
        f0 = monotone_cubic(p, l0)
        f1 = monotone_cubic(p, l1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    gap = f1 - f0
    # loss0 is nondecreasing, so its negation can use the decreasing solver
    neg0 = PiecewiseCubic(f0.x, -f0.coef)
    table.setflags(write=False)
    return Game(
        name=name,
        loss0=f0,
        loss1=f1,
        eta=float(eta),
        kind="tabulated",
        gap_root=gap.root_decreasing,
        loss1_root=f1.root_decreasing,
        loss0_root=lambda c: neg0.root_decreasing(-c),
        table=table,
    )


def game_from_dict(doc: dict) -> Game:
    # local imports: quadratic/log modules import this one
    from defensor.games.log import log_game
    from defensor.games.quadratic import quadratic_game

    kind = doc.get("kind")
    if kind == "quadratic":
        game = quadratic_game()
    elif kind == "log":
        game = log_game()
    elif kind == "tabulated":
        if "grid" not in doc or "eta" not in doc:
            raise ConfigError("tabulated game needs 'grid' and 'eta'")
        return tabulated_game(doc["grid"], doc["eta"], name=doc.get("name", "tabulated"))
    else:
        raise ConfigError(f"unknown game kind {kind!r}")
    eta = doc.get("eta")
    if eta is not None and eta != game.eta:
        if not 0 < eta <= game.eta:
            raise ConfigError(f"{kind} game is certified only up to eta={game.eta}")
        game = replace(game, name=doc.get("name", game.name), eta=float(eta))
    return game


def load_game(path) -> Game:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return game_from_dict(doc)


def save_game(game: Game, path):
    Path(path).write_text(json.dumps(game.to_dict(), indent=1))


@dataclass(frozen=True, eq=False)
class DecisionSet:
    """Finite set of raw decisions, each given by its loss pair ``(x, y)``.

    ``x`` is the loss on outcome 0 and ``y`` the loss on outcome 1.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError("decision points must be pairs (loss0, loss1)")
        if len(pts) == 0:
            raise ConfigError("decision set is empty")
        if not np.all(np.isfinite(pts)) or np.any(pts < 0):
            raise ConfigError("decision losses must be finite and nonnegative")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def shifted(self, c: float) -> DecisionSet:
        return DecisionSet(self.points + c)

    @classmethod
    def from_curve(cls, loss0, loss1, n=10001, cap=math.inf) -> DecisionSet:
        """Sample ``(loss0(g), loss1(g))`` at ``n`` equispaced ``g`` in [0, 1].

        Losses above ``cap`` are clipped to it, which lets games with
        infinite losses be approximated by finite decision sets.
        """
        g = np.linspace(0.0, 1.0, n)
        pts = np.column_stack([loss0(g), loss1(g)])
        return cls(np.minimum(pts, cap))

    @classmethod
    def from_csv(cls, path) -> DecisionSet:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["loss0", "loss1"]:
                raise ConfigError(f"{path}: expected header 'loss0,loss1'")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or not "".join(row).strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    raise ConfigError(f"{path}:{lineno}: malformed row {row!r}") from None
        return cls(np.array(rows).reshape(-1, 2))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["loss0", "loss1"])
            for x, y in self.points:
                w.writerow([repr(float(x)), repr(float(y))])
