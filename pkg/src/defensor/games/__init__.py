"""Binary prediction games: built-in losses, standardization, mixability."""
from defensor.games.base import (
    DecisionSet,
    Game,
    game_from_dict,
    load_game,
    save_game,
    tabulated_game,
)
from defensor.games.log import log_game
from defensor.games.mixability import (
    OneStepReport,
    check_one_step_inequality,
    estimate_eta_star,
    is_mixable,
    mixability_defect,
    one_step_values,
)
from defensor.games.quadratic import quadratic_game
from defensor.games.standardize import standard_pairs, standardize

__all__ = [
    "DecisionSet",
    "Game",
    "OneStepReport",
    "check_one_step_inequality",
    "estimate_eta_star",
    "game_from_dict",
    "is_mixable",
    "load_game",
    "log_game",
    "mixability_defect",
    "one_step_values",
    "quadratic_game",
    "save_game",
    "standard_pairs",
    "standardize",
    "tabulated_game",
]
