from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divauction import Dyadic, TruthfulBuyer, barrage_price, divprrfes, make_div, play_game, prrfes_init, stopping_rule_prrfes
from divauction.auction import buyer_rngs
from divauction.buyers import EnvelopeBuyer
from divauction.div import PrrfesStoppingRule, valuation_upper_bound
from divauction.experiment import GameSpec, grid_valuations, run_game
from divauction.numerics import ONE, from_decimal
from divauction.pricing_tree import price_sequence
from divauction.prrfes import ConfigError

D = from_decimal
HALF = Dyadic(1, -1)


def node(q, l):
    return SimpleNamespace(q=D(q), l=l)


@pytest.mark.parametrize("gamma0,price", [(0.5, Dyadic(2)), (0.9, Dyadic(10)), (0.8, Dyadic(5)), (0.75, Dyadic(4))])
def test_barrage_price_examples(gamma0, price):
    assert barrage_price(gamma0) == price


@given(st.floats(0.001, 0.999))
def test_barrage_price_exceeds_one_and_rounds_up(g):
    p = barrage_price(g)
    assert p > ONE
    exact = 1 / (1 - Fraction(repr(g)))
    assert 0 <= p.as_fraction() - exact < Fraction(1, 2**64)


def test_barrage_price_domain():
    for bad in (0, 1, -0.1, 2):
        with pytest.raises(ValueError):
            barrage_price(bad)


def test_stopping_rule_examples():
    subs = [node("0.5", 3), node("0.9", 2)]
    assert valuation_upper_bound(subs[0]) == D("0.625")
    assert stopping_rule_prrfes(0, subs) is True
    assert stopping_rule_prrfes(1, subs) is False


def test_stopping_rule_single_buyer_never_fires():
    for q, l in [("0", 0), ("0.5", 3), ("1", 5)]:
        assert stopping_rule_prrfes(0, [node(q, l)]) is False


def test_stopping_rule_phase_zero_bound_is_one():
    assert valuation_upper_bound(node("0", 0)) == ONE
    assert not stopping_rule_prrfes(0, [node("0", 0), node("1", 4)])


def test_stopping_rule_is_strict():
    # bound 0.5 + 2/4 = 1 equals the rival's q
    assert not stopping_rule_prrfes(0, [node("0.5", 2), node("1", 3)])


def test_single_buyer_division_is_the_subalgorithm():
    rng = np.random.default_rng(3)
    path = [bool(x) for x in rng.integers(0, 2, size=300)]
    seller = divprrfes(1, 0.5)
    seen = []
    for a in path:
        (p,) = seller.reserves()
        seen.append(p)
        seller.observe((p if a else Dyadic(0),))
    assert seen == price_sequence(prrfes_init(2), path)[:-1]
    assert seller.r == 2


def test_three_buyers_first_period():
    seller = divprrfes(3, 0.5)
    trace = play_game(seller, [TruthfulBuyer(D("0.3"))] * 3, T=3)
    for t, rec in enumerate(trace.records):
        assert rec.active_buyer == t
        assert rec.period == 1
        assert [res == Dyadic(2) for res in rec.reserves] == [m != t for m in range(3)]


def test_two_buyers_first_reserves():
    seller = divprrfes(2, 0.5)
    rows = []
    for _ in range(4):
        rows.append(seller.reserves())
        seller.observe((Dyadic(0), Dyadic(0)))
    bar = Dyadic(2)
    assert rows[:2] == [(HALF, bar), (bar, HALF)]
    assert seller.state.period == 3
    assert rows[2] == (ONE, bar)


def test_default_r_and_minimum():
    assert divprrfes(2, 0.8).r == 11
    assert divprrfes(2, 0.5, r=5).r == 5
    with pytest.raises(ConfigError, match="r_gamma"):
        divprrfes(2, 0.8, r=10)


def test_make_div_guards():
    with pytest.raises(ValueError):
        make_div(lambda: prrfes_init(2), PrrfesStoppingRule(), 0, Dyadic(2))
    with pytest.raises(ValueError):
        make_div(lambda: prrfes_init(2), PrrfesStoppingRule(), 2, ONE)


class StopAfter:
    """Stops buyer ``who`` once its subalgorithm has seen ``n`` rounds."""

    def __init__(self, who, n):
        self.who, self.n, self.seen = who, n, {}

    def __call__(self, m, substates):
        self.seen[m] = self.seen.get(m, 0) + 1
        return m == self.who and self.seen[m] >= self.n


def test_stopped_buyer_gets_only_barrage_afterwards():
    seller = make_div(lambda: prrfes_init(2), StopAfter(1, 4), 3, Dyadic(2))
    trace = play_game(seller, [TruthfulBuyer(D("0.6"))] * 3, T=40)
    assert seller.state.subhorizons[1] == 4
    assert seller.state.suspected == [0, 2]
    for rec in trace.records:
        if rec.period >= 5:
            assert rec.reserves[1] == Dyadic(2)
            assert rec.active_buyer != 1
    ev = [e for e in trace.events if e.stopped]
    assert ev[0].period == 4 and ev[0].stopped == (1,)


def test_emptying_the_suspected_set_is_an_error():
    seller = make_div(lambda: prrfes_init(2), lambda m, subs: True, 2, Dyadic(2))
    with pytest.raises(RuntimeError, match="emptied"):
        play_game(seller, [TruthfulBuyer(HALF)] * 2, T=4)


def test_substate_changes_only_when_active():
    seller = divprrfes(3, 0.5)
    buyers = [EnvelopeBuyer(v, 0.5, 2, Dyadic(2), 0.5) for v in (D("0.3"), D("0.6"), D("0.9"))]
    rngs = buyer_rngs(1, 3)
    for _ in range(200):
        before = list(seller.state.substates)
        active = seller.active
        reserves = seller.reserves()
        bids = tuple(b.bid(p, g) for b, p, g in zip(buyers, reserves, rngs))
        for b, p, x in zip(buyers, reserves, bids):
            b.observe(p, x, x >= p, p if x >= p else Dyadic(0))
        seller.observe(bids)
        after = seller.state.substates
        assert all(after[m] == before[m] for m in range(3) if m != active)
        assert sum(p <= ONE for p in reserves) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10**6), st.integers(1, 3000),
       st.sampled_from(["envelope_always_reject", "envelope_always_accept", "envelope_coin:0.5"]))
def test_partition_periods_and_elimination(M, seed, T, mode):
    vals = tuple(grid_valuations(seed, M))
    res = run_game(GameSpec(M, T, 0.5, vals, (mode,) * M, seed, keep_trace=True))
    assert sum(res.report.subhorizons) == T
    top = max(vals)
    suspected = list(range(M))
    for ev in res.trace.events:
        assert list(ev.suspected) == suspected
        for m in ev.stopped:
            assert vals[m] < top
        suspected = [m for m in suspected if m not in ev.stopped]
        assert suspected
    periods = {}
    for rec in res.trace:
        periods[rec.period] = periods.get(rec.period, 0) + 1
    sizes = {ev.period: len(ev.suspected) for ev in res.trace.events}
    last = max(periods)
    for i, n in periods.items():
        if i in sizes:
            assert n == sizes[i]
    assert periods[last] <= M


def test_lemma3_counterexample_is_reproduced():
    # the buyer valued 0.328125 can only be stopped once its phase 3 closes:
    # before that its interval width 2 eps_2 = 1/8 equals the gap to the top
    # valuation, and phase 3 alone holds 256 exploitation rounds
    vals = tuple(grid_valuations(4, 3))
    assert vals == (D("0.390625"), D("0.328125"), D("0.453125"))
    res = run_game(GameSpec(3, 2**12, 0.5, vals, ("envelope_always_reject",) * 3, 4, keep_trace=True))
    rep = res.report
    assert rep.subhorizons[:2] == [310, 309]
    assert rep.bound_lemma3[1] == 272
    assert [(e.period, e.stopped) for e in res.trace.events if e.stopped] == [(309, (1,)), (310, (0,))]
    assert rep.pass_flags["lemma3"] is False
    assert rep.pass_flags["theorem1"] and rep.pass_flags["lemma2"]
