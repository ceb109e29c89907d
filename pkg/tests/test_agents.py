import numpy as np
import pytest

from defensor.agents import (
    EXPERT_KINDS,
    REALITY_KINDS,
    is_constant_kind,
    make_expert,
    make_reality,
)
from defensor.errors import ConfigError
from defensor.games import quadratic_game
from defensor.martingale import WeightState

Q = quadratic_game()

# np.random.default_rng(42).random() < 0.5 for the first five draws
BERNOULLI_42_FIXTURE = [0, 1, 0, 0, 1]


class TestExperts:
    def test_constant(self):
        e = make_expert({"kind": "constant", "value": 0.3})
        assert e.static and e.advise() == 0.3

    def test_decategorizer(self):
        gamma = make_expert({"kind": "decategorizer", "slope": 0.5}).advise()
        assert gamma(0.9) == pytest.approx(0.7, abs=1e-15)
        assert gamma(0.5) == 0.5

    def test_frequency_laplace(self):
        e = make_expert({"kind": "frequency"})
        assert e.advise() == 0.5
        for omega in (1, 1, 0):
            e.observe(0.5, omega)
        assert e.advise() == pytest.approx(3 / 5)

    def test_fixed_sequence_cycles(self):
        e = make_expert({"kind": "fixed_sequence", "values": [0.1, 0.9]})
        seen = []
        for _ in range(3):
            seen.append(e.advise())
            e.observe(0.5, 0)
        assert seen == [0.1, 0.9, 0.1]

    def test_shift_map_clamps(self):
        gamma = make_expert({"kind": "shift_map", "shift": 0.2}).advise()
        assert gamma(0.5) == pytest.approx(0.7) and gamma(0.95) == 1.0

    def test_internal_regret_pair(self):
        gamma = make_expert({"kind": "internal_regret_pair", "source": 0.3, "target": 0.6,
                             "radius": 0.05, "width": 0.01}).advise()
        assert gamma(0.3) == 0.6 and gamma(0.34) == 0.6
        assert gamma(0.8) == 0.8
        # halfway along the ramp
        assert gamma(0.355) == pytest.approx(0.355 + 0.5 * (0.6 - 0.355))

    @pytest.mark.parametrize("spec", [
        {"kind": "shift_map", "shift": 0.3},
        {"kind": "decategorizer", "slope": 0.7, "center": 0.4},
        {"kind": "internal_regret_pair", "source": 0.2, "target": 0.9},
        {"kind": "internal_regret_pair", "source": 0.5, "target": 0.0, "width": 0.002},
    ])
    def test_declared_modulus(self, spec):
        e = make_expert(spec)
        gamma = e.advise()
        step = 1 / 4096
        p = np.linspace(0, 1, 8 * 4096 + 1)
        vals = np.array([gamma(x) for x in p])
        assert np.all((vals >= 0) & (vals <= 1))
        # oscillation over windows of width 1/4096
        w = 8
        osc = max(np.ptp(vals[i:i + w + 1]) for i in range(len(vals) - w))
        assert osc <= e.lipschitz * step + 1e-9

    @pytest.mark.parametrize("spec", [
        {"kind": "constant"},
        {"kind": "constant", "value": 1.5},
        {"kind": "constant", "value": "x"},
        {"kind": "fixed_sequence", "values": []},
        {"kind": "decategorizer", "slope": 0},
        {"kind": "internal_regret_pair", "source": 0.2},
        {"kind": "internal_regret_pair", "source": 0.2, "target": 0.4, "width": 0},
        {"kind": "oracle"},
        "constant",
    ])
    def test_malformed(self, spec):
        with pytest.raises(ConfigError):
            make_expert(spec)

    def test_constant_kinds(self):
        assert set(EXPERT_KINDS) == {"constant", "fixed_sequence", "frequency", "shift_map",
                                     "decategorizer", "internal_regret_pair"}
        for kind in ("constant", "fixed_sequence", "frequency"):
            assert is_constant_kind({"kind": kind})
        for kind in ("shift_map", "decategorizer", "internal_regret_pair"):
            assert not is_constant_kind({"kind": kind})


class TestReality:
    def test_kinds(self):
        assert set(REALITY_KINDS) == {"fixed_sequence", "bernoulli", "adversarial_max_loss",
                                      "adversarial_max_regret"}

    def test_max_loss(self):
        r = make_reality({"kind": "adversarial_max_loss"})
        assert r.choose(0.4, None, Q, None) == 1
        assert r.choose(0.5, None, Q, None) == 1
        assert r.choose(0.6, None, Q, None) == 0

    def test_bernoulli_fixture(self):
        r = make_reality({"kind": "bernoulli", "theta": 0.5, "seed": 42})
        assert [r.choose(0.5, None, Q, None) for _ in range(5)] == BERNOULLI_42_FIXTURE

    def test_bernoulli_reproducible(self):
        draws = []
        for _ in range(2):
            r = make_reality({"kind": "bernoulli", "theta": 0.3, "seed": 9})
            draws.append([r.choose(0.5, None, Q, None) for _ in range(200)])
        assert draws[0] == draws[1]
        assert 30 < sum(draws[0]) < 90

    def test_fixed_sequence(self):
        r = make_reality({"kind": "fixed_sequence", "outcomes": [1, 0]})
        assert [r.choose(0.5, None, Q, None) for _ in range(2)] == [1, 0]
        with pytest.raises(ConfigError):
            r.choose(0.5, None, Q, None)

    def test_max_regret(self):
        s = WeightState.from_losses(2.0, 0.0, [0.0, 0.0])
        r = make_reality({"kind": "adversarial_max_regret"})
        # learner at 0.3, experts at 0 and 1: outcome 1 costs the learner more
        # relative to the best expert
        assert r.choose(0.3, np.array([0.0, 1.0]), Q, s) == 1
        assert r.choose(0.7, np.array([0.0, 1.0]), Q, s) == 0
        # tie goes to 1
        assert r.choose(0.5, np.array([0.0, 1.0]), Q, s) == 1

    @pytest.mark.parametrize("spec", [
        {"kind": "bernoulli", "theta": 0.5},
        {"kind": "bernoulli", "theta": 2, "seed": 1},
        {"kind": "fixed_sequence", "outcomes": [0, 2]},
        {"kind": "fixed_sequence", "outcomes": [True]},
        {"kind": "coin"},
        None,
    ])
    def test_malformed(self, spec):
        with pytest.raises(ConfigError):
            make_reality(spec)
