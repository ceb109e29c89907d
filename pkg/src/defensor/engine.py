"""Protocol loop for prediction with expert advice.

Each round: experts announce advice, the learner predicts, Reality picks an
outcome, losses accumulate.  Two monitors run every round: the regret bound
``L_n <= min_k L_n^k + ln K / kappa`` and monotonicity of the supermartingale
``S_n = sum_k exp(kappa (L_n - L_n^k))`` starting from ``S_0 = K``.
"""
from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from defensor.agents import (
    ExpertStrategy,
    RealityStrategy,
    is_constant_kind,
    make_expert,
    make_reality,
)
from defensor.errors import ConfigError, KappaTooLarge, MonitorViolation, NonConstantAdvice
from defensor.forecaster import DEFAULT_CONFIG, ForecasterConfig, aa_forecast, defensive_forecast
from defensor.games.base import Game
from defensor.martingale import Advice, WeightState, advance_by, amin, supermartingale_value

log = logging.getLogger(__name__)

INF = math.inf
LEARNERS = ("defensive", "aa")


@dataclass(frozen=True)
class EngineConfig:
    forecaster: ForecasterConfig = DEFAULT_CONFIG
    continue_on_violation: bool = False
    # allowed overshoot of the regret bound
    bound_tol: float = 1e-6
    # allowed per-round growth of S; None means forecaster.t_tol
    sm_tol: float | None = None

    @property
    def supermartingale_tol(self) -> float:
        return self.forecaster.t_tol if self.sm_tol is None else self.sm_tol


@dataclass
class Trace:
    """Per-round record of a run plus its metadata.

    Arrays are indexed by round ``n - 1``.  ``expert_cum`` holds the
    cumulative expert losses ``L_n^k`` and ``advice`` the advice evaluated at
    the final ``p_n``.
    """

    meta: dict
    p: np.ndarray
    omega: np.ndarray
    loss: np.ndarray
    cum_loss: np.ndarray
    S: np.ndarray
    slack: np.ndarray
    advice: np.ndarray
    expert_loss: np.ndarray
    expert_cum: np.ndarray
    S0: float
    violations: list = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.p)

    @property
    def n_experts(self) -> int:
        return self.advice.shape[1]

    @property
    def bound(self) -> float:
        return math.log(self.n_experts) / self.meta["kappa"]

    @property
    def regret(self) -> np.ndarray:
        """``L_n - min_k L_n^k`` per round."""
        with np.errstate(invalid="ignore"):
            r = self.cum_loss - self.expert_cum.min(axis=1)
        return np.where(np.isnan(r), -INF, r)

    def truncated(self, n: int) -> Trace:
        return Trace(self.meta, self.p[:n], self.omega[:n], self.loss[:n], self.cum_loss[:n],
                     self.S[:n], self.slack[:n], self.advice[:n], self.expert_loss[:n],
                     self.expert_cum[:n], self.S0, list(self.violations))

    def columns(self) -> list[str]:
        k = self.n_experts
        return ["n", "p", "omega", "loss", "L", "S", "slack"] + [f"L_k_{i + 1}" for i in range(k)]

    def rows(self):
        for i in range(self.rounds):
            yield [i + 1, self.p[i], int(self.omega[i]), self.loss[i], self.cum_loss[i],
                   self.S[i], self.slack[i], *self.expert_cum[i]]

    def to_csv(self, path):
        """CSV with 17 significant digits so values round-trip exactly."""
        lines = [",".join(self.columns())]
        for row in self.rows():
            lines.append(",".join([str(row[0]), _fmt(row[1]), str(row[2])] +
                                  [_fmt(v) for v in row[3:]]))
        atomic_write(path, "\n".join(lines) + "\n")

    def to_jsonl(self, path):
        """Metadata line followed by one JSON object per round."""
        out = [json.dumps({"meta": self.meta, "S0": self.S0, "violations": self.violations})]
        for i in range(self.rounds):
            out.append(json.dumps({
                "n": i + 1,
                "p": self.p[i],
                "omega": int(self.omega[i]),
                "advice": self.advice[i].tolist(),
                "loss": _jnum(self.loss[i]),
                "expert_loss": [_jnum(v) for v in self.expert_loss[i]],
                "L": _jnum(self.cum_loss[i]),
                "L_k": [_jnum(v) for v in self.expert_cum[i]],
                "S": _jnum(self.S[i]),
                "slack": _jnum(self.slack[i]),
            }))
        atomic_write(path, "\n".join(out) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> Trace:
        with open(path) as fh:
            head = json.loads(fh.readline())
            recs = [json.loads(line) for line in fh if line.strip()]
        f = lambda key: np.array([float(r[key]) for r in recs])  # noqa: E731
        g = lambda key: np.array([[float(v) for v in r[key]] for r in recs])  # noqa: E731
        return cls(head["meta"], f("p"), np.array([r["omega"] for r in recs], dtype=np.int8),
                   f("loss"), f("L"), f("S"), f("slack"), g("advice"), g("expert_loss"),
                   g("L_k"), float(head["S0"]), head.get("violations", []))


def _fmt(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _jnum(v):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def atomic_write(path, text: str):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(game: Game, learner: str, kappa: float | None, experts, reality, n_rounds: int,
        cfg: EngineConfig | None = None, meta: dict | None = None) -> Trace:
    """Play ``n_rounds`` of the protocol and return the trace.

    ``experts`` and ``reality`` may be strategy objects or their dict specs.
    ``kappa=None`` uses ``game.eta``.  Monitor violations raise
    ``MonitorViolation`` (carrying the partial trace) unless
    ``cfg.continue_on_violation`` is set, in which case they are logged in
    ``trace.violations``.
    """
    cfg = cfg or EngineConfig()
    if learner not in LEARNERS:
        raise ConfigError(f"learner must be one of {LEARNERS}, got {learner!r}")
    if n_rounds < 1:
        raise ConfigError("need at least one round")
    kappa = game.eta if kappa is None else float(kappa)
    if not kappa > 0:
        raise ConfigError(f"kappa must be positive, got {kappa!r}")
    if kappa > game.eta * (1 + 1e-12):
        raise KappaTooLarge(kappa, game.eta)
    experts = [e if isinstance(e, ExpertStrategy) else make_expert(e) for e in experts]
    if not experts:
        raise ConfigError("need at least one expert")
    reality = reality if isinstance(reality, RealityStrategy) else make_reality(reality)
    if learner == "aa" and not all(is_constant_kind(e.spec) for e in experts):
        raise NonConstantAdvice()

    K, N = len(experts), n_rounds
    bound = math.log(K) / kappa
    fcfg = cfg.forecaster
    sm_tol = cfg.supermartingale_tol
    forecast = defensive_forecast if learner == "defensive" else aa_forecast
    lipschitz = max((e.lipschitz or 0.0) for e in experts)
    static = Advice([e.advise() for e in experts]) if all(e.static for e in experts) else None
    observers = [e for e in experts if not e.static]

    meta = {
        "game": game.name,
        "learner": learner,
        "kappa": kappa,
        "eta": game.eta,
        "K": K,
        "rounds": N,
        "experts": [e.spec for e in experts],
        "reality": reality.spec,
        "forecaster": {"bisect_tol": fcfg.bisect_tol, "t_tol": fcfg.t_tol,
                       "max_iter": fcfg.max_iter},
        **(meta or {}),
    }
    p_arr = np.empty(N)
    om_arr = np.empty(N, dtype=np.int8)
    loss_arr = np.empty(N)
    cum_arr = np.empty(N)
    s_arr = np.empty(N)
    slack_arr = np.empty(N)
    adv_arr = np.empty((N, K))
    el_arr = np.empty((N, K))
    ec_arr = np.empty((N, K))
    trace = Trace(meta, p_arr, om_arr, loss_arr, cum_arr, s_arr, slack_arr, adv_arr,
                  el_arr, ec_arr, float(K))

    state = WeightState.initial(K, kappa)
    s_prev = float(K)
    start = time.perf_counter()
    for i in range(N):
        advice = static if static is not None else \
            Advice([e.advise() for e in experts], lipschitz=lipschitz)
        p = forecast(state, advice, game, fcfg)
        g = advice(p)
        omega = reality.choose(p, g, game, state)
        if advice.is_constant:
            lg = advice.losses(game)[omega]
        else:
            lg = np.asarray(game.loss(omega, g), dtype=float)
        lp = float(game.loss(omega, p))
        state = advance_by(state, lp, lg)
        s_now = supermartingale_value(state)
        L = state.learner_loss
        lead = amin(state.expert_losses)
        if lead == INF:
            slack = INF
        elif L == INF:
            slack = -INF
        else:
            slack = lead + bound - L

        p_arr[i] = p
        om_arr[i] = omega
        loss_arr[i] = lp
        cum_arr[i] = L
        s_arr[i] = s_now
        slack_arr[i] = slack
        adv_arr[i] = g
        el_arr[i] = lg
        ec_arr[i] = state.expert_losses

        problems = []
        if slack < -cfg.bound_tol:
            problems.append(f"round {i + 1}: regret bound violated, slack={slack!r}")
        if s_now > s_prev + sm_tol:
            problems.append(f"round {i + 1}: supermartingale grew {s_prev!r} -> {s_now!r}")
        if problems:
            trace.violations.extend(problems)
            for msg in problems:
                log.warning(msg)
            if not cfg.continue_on_violation:
                trace = trace.truncated(i + 1)
                trace.meta["seconds_per_round"] = (time.perf_counter() - start) / (i + 1)
                raise MonitorViolation("; ".join(problems), trace=trace)
        s_prev = s_now
        for e in observers:
            e.observe(p, omega)
    meta["seconds_per_round"] = (time.perf_counter() - start) / N
    return trace


def replay(trace: Trace, game: Game):
    """Recompute ``L_n`` and ``L_n^k`` from the recorded advice and outcomes."""
    learner = np.empty(trace.rounds)
    experts = np.empty((trace.rounds, trace.n_experts))
    L = 0.0
    Lk = np.zeros(trace.n_experts)
    for i in range(trace.rounds):
        omega = int(trace.omega[i])
        L = L + float(game.loss(omega, float(trace.p[i])))
        Lk = Lk + np.asarray(game.loss(omega, trace.advice[i]), dtype=float)
        learner[i] = L
        experts[i] = Lk
    return learner, experts


def compare(traces: list[Trace]) -> list[dict]:
    """Summary row per trace: final regret, share of the bound used, timing.

    All traces must share game, experts and reality (including its seed).
    """
    if not traces:
        raise ConfigError("nothing to compare")
    ref = traces[0].meta
    for t in traces[1:]:
        for key in ("game", "experts", "reality", "rounds"):
            if t.meta[key] != ref[key]:
                raise ConfigError(f"mismatched run configs: {key!r} differs")
    rows = []
    for t in traces:
        regret = t.regret
        bound = t.bound
        worst = float(regret.max())
        rows.append({
            "learner": t.meta["learner"],
            "game": t.meta["game"],
            "K": t.n_experts,
            "kappa": t.meta["kappa"],
            "rounds": t.rounds,
            "final_regret": float(regret[-1]),
            "max_regret": worst,
            "bound": bound,
            "max_slack_usage": worst / bound if bound > 0 else (0.0 if worst <= 0 else INF),
            "mean_round_seconds": t.meta.get("seconds_per_round", float("nan")),
            "violations": len(t.violations),
        })
    return rows
