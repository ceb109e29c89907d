import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defensor.errors import ConfigError, NotMixable
from defensor.games import (
    DecisionSet,
    check_one_step_inequality,
    estimate_eta_star,
    game_from_dict,
    load_game,
    log_game,
    mixability_defect,
    one_step_values,
    quadratic_game,
    save_game,
    standard_pairs,
    standardize,
    tabulated_game,
)
from defensor.games._interp import monotone_cubic
from defensor.games.standardize import orientation, pareto_front, upper_hull


@pytest.fixture(scope="module")
def quad_decisions():
    return DecisionSet.from_curve(lambda g: g**2, lambda g: (1 - g) ** 2, n=10001)


@pytest.fixture(scope="module")
def log_decisions():
    with np.errstate(divide="ignore"):
        return DecisionSet.from_curve(lambda g: -np.log1p(-g), lambda g: -np.log(g),
                                      n=10001, cap=30.0)


class TestBuiltinGames:
    def test_quadratic_values(self):
        q = quadratic_game()
        assert q.loss(1, 0.5) == 0.25
        assert q.loss(0, 0.0) == 0.0
        assert q.loss(1, 0.2) == pytest.approx(0.64, abs=1e-15)
        assert q.eta == 2

    def test_log_values(self):
        lg = log_game()
        assert lg.loss(1, 0.5) == pytest.approx(math.log(2), abs=1e-15)
        assert lg.loss(1, 1.0) == 0.0
        assert lg.loss(1, 0.0) == math.inf
        assert lg.loss(0, 1.0) == math.inf
        assert lg.eta == 1

    def test_log_array_path_matches_scalar(self):
        lg = log_game()
        p = np.array([0.0, 1e-300, 0.3, 0.999, 1.0])
        for omega in (0, 1):
            arr = lg.loss(omega, p)
            assert list(arr) == [lg.loss(omega, float(x)) for x in p]

    @pytest.mark.parametrize("make", [quadratic_game, log_game])
    def test_standard_form_monotone(self, make):
        g = make()
        p = np.linspace(0, 1, 1001)
        with np.errstate(invalid="ignore"):
            assert np.all(np.diff(g.loss0(p)) >= 0)
            assert np.all(np.diff(g.loss1(p)) <= 0)
        assert g.loss0(0.0) == 0 and g.loss1(1.0) == 0

    @pytest.mark.parametrize("make", [quadratic_game, log_game])
    def test_gap_root_solves_gap(self, make):
        g = make()
        for c in np.linspace(-5, 5, 41):
            p = g.gap_root(c)
            if 0 < p < 1:
                assert g.loss1(p) - g.loss0(p) == pytest.approx(c, abs=1e-12)

    @pytest.mark.parametrize("make", [quadratic_game, log_game])
    def test_loss1_root(self, make):
        g = make()
        for c in np.linspace(0.01, 0.99, 25):
            assert g.loss1(g.loss1_root(c)) == pytest.approx(c, abs=1e-12)

    def test_json_roundtrip(self, tmp_path):
        for game in (quadratic_game(), log_game()):
            path = tmp_path / f"{game.name}.json"
            save_game(game, path)
            back = load_game(path)
            assert back.eta == game.eta and back.loss1(0.3) == game.loss1(0.3)

    def test_eta_override_only_downward(self):
        assert game_from_dict({"kind": "quadratic", "eta": 1.0}).eta == 1.0
        with pytest.raises(ConfigError):
            game_from_dict({"kind": "quadratic", "eta": 3.0})
        with pytest.raises(ConfigError):
            game_from_dict({"kind": "hinge"})


class TestTabulated:
    def test_reproduces_nodes_and_interpolates(self):
        p = np.linspace(0, 1, 101)
        game = tabulated_game(np.column_stack([p, p**2, (1 - p) ** 2]), eta=2.0)
        assert np.allclose(game.loss0(p), p**2, atol=1e-15)
        q = np.linspace(0, 1, 9973)
        assert np.max(np.abs(game.loss0(q) - q**2)) < 1e-5
        # scalar and vector paths agree
        assert game.loss1(0.1234) == pytest.approx(float(game.loss1(np.array([0.1234]))[0]))

    def test_json_roundtrip(self, tmp_path):
        p = np.linspace(0, 1, 11)
        game = tabulated_game(np.column_stack([p, p**2, (1 - p) ** 2]), eta=1.5, name="t")
        save_game(game, tmp_path / "t.json")
        back = load_game(tmp_path / "t.json")
        assert back.kind == "tabulated" and back.eta == 1.5
        assert back.loss0(0.37) == game.loss0(0.37)

    @pytest.mark.parametrize("grid", [
        [[0, 0, 1]],
        [[0.1, 0, 1], [1, 1, 0]],
        [[0, 0, 1], [1, math.nan, 0]],
        [[0, 1, 1], [1, 0, 0]],
    ])
    def test_rejects_bad_grids(self, grid):
        with pytest.raises(ConfigError):
            tabulated_game(grid, eta=1.0)

    def test_root_decreasing(self):
        p = np.linspace(0, 1, 51)
        game = tabulated_game(np.column_stack([p, p**2, (1 - p) ** 2]), eta=2.0)
        for c in (0.01, 0.25, 0.8):
            assert game.loss1(game.loss1_root(c)) == pytest.approx(c, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=3, max_size=30))
    def test_monotone_cubic_preserves_monotonicity(self, steps):
        y = np.cumsum(steps)
        x = np.linspace(0, 1, len(y))
        f = monotone_cubic(x, y)
        vals = f(np.linspace(0, 1, 2001))
        assert np.all(np.diff(vals) >= -1e-12 * (1 + abs(y[-1])))


class TestDecisionSet:
    def test_validation(self):
        with pytest.raises(ConfigError):
            DecisionSet(np.empty((0, 2)))
        with pytest.raises(ConfigError):
            DecisionSet([(1.0, -0.1)])
        with pytest.raises(ConfigError):
            DecisionSet([(1.0, math.inf)])

    def test_csv_roundtrip(self, tmp_path):
        d = DecisionSet([(0.1, 0.7), (1 / 3, 0.2)])
        d.to_csv(tmp_path / "d.csv")
        assert np.array_equal(DecisionSet.from_csv(tmp_path / "d.csv").points, d.points)

    def test_csv_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("loss0,loss1\n0.1,0.2\n0.3,oops\n")
        with pytest.raises(ConfigError, match=":3:"):
            DecisionSet.from_csv(bad)
        bad.write_text("a,b\n0.1,0.2\n")
        with pytest.raises(ConfigError, match="header"):
            DecisionSet.from_csv(bad)


class TestHull:
    def test_orientation(self):
        assert orientation((0, 0), (1, 0), (0, 1)) == 1
        assert orientation((0, 0), (1, 0), (0, -1)) == -1
        assert orientation((0, 0), (1, 1), (2, 2)) == 0
        # nearly collinear points where float cross products are unreliable
        assert orientation((0.1, 0.1), (0.3, 0.3), (0.7, 0.7000000000000001)) == 1

    def test_upper_hull_square(self):
        pts = np.array([(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)], dtype=float)
        hull = upper_hull(pts)
        assert {tuple(r) for r in hull} >= {(0.0, 1.0), (1.0, 1.0)}
        assert (0.5, 0.5) not in {tuple(r) for r in hull}

    def test_pareto_front(self):
        x = np.array([0.0, 1.0, 0.5, 0.6])
        y = np.array([1.0, 0.0, 0.5, 0.6])
        front = pareto_front(x, y)
        assert sorted(front.tolist()) == [0, 1, 2]


class TestStandardize:
    def test_quadratic_at_03(self, quad_decisions):
        a, b = standard_pairs(quad_decisions, 2.0, np.array([0.3]))
        assert a[0] == pytest.approx(0.09, abs=1e-6)
        assert b[0] == pytest.approx(0.49, abs=1e-6)

    def test_against_sampled_mixture_oracle(self, quad_decisions):
        # minimize p y + (1-p) x over 10^5 random eta-mixtures of two decisions
        rng = np.random.default_rng(11)
        eta, p = 2.0, 0.3
        pts = quad_decisions.points
        i, j = rng.integers(0, len(pts), size=(2, 100_000))
        alpha = rng.random(100_000)
        x = -np.log(alpha * np.exp(-eta * pts[i, 0]) + (1 - alpha) * np.exp(-eta * pts[j, 0])) / eta
        y = -np.log(alpha * np.exp(-eta * pts[i, 1]) + (1 - alpha) * np.exp(-eta * pts[j, 1])) / eta
        oracle = np.min(p * y + (1 - p) * x)
        a, b = standard_pairs(quad_decisions, eta, np.array([p]))
        ours = p * b[0] + (1 - p) * a[0]
        assert ours <= oracle + 1e-9
        assert ours == pytest.approx(oracle, abs=1e-4)

    def test_symmetric_at_half(self, quad_decisions):
        a, b = standard_pairs(quad_decisions, 2.0, np.array([0.5]))
        assert a[0] == pytest.approx(b[0], abs=1e-12)

    def test_two_point_log(self):
        d = DecisionSet([(0.0, 30.0), (30.0, 0.0)])
        a, b = standard_pairs(d, 1.0, np.array([0.5]))
        assert a[0] == pytest.approx(math.log(2), abs=1e-9)
        assert b[0] == pytest.approx(math.log(2), abs=1e-9)

    def test_reproduces_quadratic_curve(self, quad_decisions):
        game = standardize(quad_decisions, 2.0, grid_size=1001)
        p = np.linspace(0, 1, 777)
        assert np.max(np.abs(game.loss0(p) - p**2)) < 1e-5
        assert np.max(np.abs(game.loss1(p) - (1 - p) ** 2)) < 1e-5

    def test_shift_invariance(self, quad_decisions):
        p = np.linspace(0, 1, 101)
        a, b = standard_pairs(quad_decisions, 1.5, p)
        a2, b2 = standard_pairs(quad_decisions.shifted(1.0), 1.5, p)
        m, m2 = min(a.min(), b.min()), min(a2.min(), b2.min())
        assert np.allclose(a - m, a2 - m2, atol=1e-12)
        assert np.allclose(b - m, b2 - m2, atol=1e-12)

    def test_rejects_bad_eta(self, quad_decisions):
        with pytest.raises(ConfigError):
            standardize(quad_decisions, 0.0)


class TestOneStep:
    def test_quadratic_kappa2_holds(self):
        rep = check_one_step_inequality(quadratic_game(), 2.0, 512)
        assert rep.holds and rep.worst_slack <= 1e-9

    def test_log_kappa1_holds(self):
        rep = check_one_step_inequality(log_game(), 1.0, 512)
        assert rep.holds and rep.worst_slack <= 1e-9

    def test_quadratic_kappa25_fails(self):
        rep = check_one_step_inequality(quadratic_game(), 2.5, 512)
        assert not rep.holds and rep.worst_slack > 1e-3
        # independent scan of the same grid
        g = np.linspace(0, 1, 512)
        P, G = np.meshgrid(g, g, indexing="ij")
        E = P * np.exp(2.5 * ((1 - P) ** 2 - (1 - G) ** 2)) + (1 - P) * np.exp(2.5 * (P**2 - G**2))
        assert rep.worst_slack == pytest.approx(E.max() - 1, abs=1e-12)

    @pytest.mark.parametrize("make", [quadratic_game, log_game])
    def test_identity_is_equality(self, make):
        p = np.linspace(0, 1, 101)
        assert np.allclose(one_step_values(make(), make().eta, p, p), 1.0, atol=1e-15)

    @pytest.mark.parametrize("make", [quadratic_game, log_game])
    def test_monotone_in_kappa(self, make):
        g = make()
        assert check_one_step_inequality(g, g.eta / 2, 256).holds

    def test_extended_real_limits(self):
        lg = log_game()
        # p = 0, g = 0: the loss1 term has weight 0, the loss0 term is e^0
        assert one_step_values(lg, 1.0, 0.0, 0.0) == 1.0
        # g = 0 while p > 0: the outcome-1 term vanishes (e^{-inf}), the
        # outcome-0 term is 0.5 e^{ln 2}
        assert one_step_values(lg, 1.0, 0.5, 0.0) == pytest.approx(1.0, abs=1e-15)


class TestEtaStar:
    def test_quadratic(self, quad_decisions):
        eta = estimate_eta_star(quad_decisions, tol=1e-3)
        assert abs(eta - 2.0) <= 0.01
        # oracle: mixable just below, not mixable just above
        assert mixability_defect(quad_decisions, 2.0 - 0.01) <= 1e-8
        assert mixability_defect(quad_decisions, 2.0 + 0.01) > 1e-8

    def test_capped_log(self, log_decisions):
        assert abs(estimate_eta_star(log_decisions, tol=1e-3) - 1.0) <= 0.01

    def test_single_point(self):
        assert estimate_eta_star(DecisionSet([(0.4, 0.4)]), eta_max=64.0) == 64.0

    def test_shift_invariant(self, quad_decisions):
        assert estimate_eta_star(quad_decisions) == estimate_eta_star(quad_decisions.shifted(1.0))

    def test_not_mixable_raises(self, quad_decisions):
        with pytest.raises(NotMixable):
            estimate_eta_star(quad_decisions, eta_min=5.0, eta_max=10.0)

    def test_standardized_game_certified(self, quad_decisions):
        game = standardize(quad_decisions, 1.5, grid_size=501)
        assert check_one_step_inequality(game, 1.5, 256).holds
        assert json.loads(json.dumps(game.to_dict()))["kind"] == "tabulated"
