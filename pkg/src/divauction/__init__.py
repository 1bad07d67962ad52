"""Repeated second-price auctions with personal reserves and strategic
buyers: the divPRRFES seller, buyer models, and regret measurement."""

from .numerics import ONE, ZERO, Dyadic, Ordering, combine, compare, from_decimal, from_fraction, to_float
from .auction import GameTrace, RoundOutcome, RoundRecord, play_game, revenue, run_round
from .pricing_tree import left_increment, reinforce, verify_right_consistent
from .prrfes import PrrfesState, phase_params, prrfes_init, prrfes_step, r_gamma, zeta
from .div import barrage_price, divprrfes, make_div, stopping_rule_prrfes
from .buyers import EnvelopeBuyer, TruthfulBuyer, dp_optimal, envelope_bid, realized_surplus
from .regret import (
    RegretReport,
    decompose,
    lemma2_bound,
    lemma3_bound,
    strategic_regret,
    theorem1_bound,
)

__version__ = "0.1.0"
