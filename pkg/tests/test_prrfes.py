import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from divauction import Dyadic, phase_params, prrfes_init, prrfes_step, r_gamma, zeta
from divauction.numerics import ONE, ZERO
from divauction.pricing_tree import price_sequence, replay
from divauction.prrfes import ABSORBED, EXPLOIT, EXPLORE, PENALIZE, ConfigError, phase_log
from oracle import reinforced_prrfes_prices

HALF = Dyadic(1, -1)


def test_phase_params_examples():
    p0 = phase_params(0)
    assert (p0.epsilon, p0.g_rounds) == (HALF, 2)
    p2 = phase_params(2)
    assert (p2.epsilon, p2.g_rounds) == (Dyadic(1, -4), 16)
    for l in range(7):
        p = phase_params(l)
        assert p.epsilon * p.g_rounds == ONE


def test_phase_guard():
    phase_params(8)
    with pytest.raises(ConfigError):
        phase_params(9)


def test_first_price_is_one_half_for_any_r():
    assert prrfes_init(2).price() == HALF
    assert prrfes_init(11).price() == HALF
    assert prrfes_init(3) == prrfes_init(3)


def test_reject_first_offer_walkthrough():
    # reject 1/2 -> one penalization round at 1 -> two exploitation rounds at 0 -> explore 1/4
    prices = price_sequence(prrfes_init(2), [False, False, True, True])
    assert prices == [HALF, ONE, ZERO, ZERO, Dyadic(1, -2)]
    s = replay(prrfes_init(2), [False, False, True, True])
    assert (s.l, s.mode, s.k, s.q) == (1, EXPLORE, 1, ZERO)


def test_accept_first_offer_moves_up_one_step():
    s = prrfes_step(prrfes_init(2), True)
    assert s.price() == ONE
    assert s.mode == EXPLORE and s.k == 2


def test_accepting_a_penalization_price_pins_price_at_one():
    s = replay(prrfes_init(3), [False, True])
    assert s.mode == ABSORBED
    assert all(p == ONE for p in price_sequence(s, [False, True] * 10))


def test_r_one_skips_penalization():
    s = prrfes_step(prrfes_init(1), False)
    assert s.mode == EXPLOIT and s.x == 2


def test_exploitation_decisions_only_count_down():
    s = replay(prrfes_init(2), [True, False, False])
    assert s.mode == EXPLOIT and s.q == HALF
    a = replay(s, [True])
    b = replay(s, [False])
    assert a == b and a.x == s.x - 1


def test_state_text():
    # phase 0: reject 1/2; phase 1: accept 1/4, reject 1/2; phase 2 from q=1/4
    s = replay(prrfes_init(2), [False, False, True, True, True, False, False] + [True] * 4 + [True, True, True])
    assert s.l == 2 and s.q == Dyadic(1, -2)
    assert str(s) == "l=2 q=1/4 mode=explore k=4"
    assert s.price() == Dyadic(1, -2) + Dyadic(4, -4)
    assert str(prrfes_init(2)) == "l=0 q=0 mode=explore k=1"


@pytest.mark.parametrize("gamma,r", [(0.5, 2), (0.8, 11), (0.01, 1), (0.3, 1), (0.7, 6), (0.9, 29)])
def test_r_gamma_examples(gamma, r):
    assert r_gamma(gamma) == r


@pytest.mark.parametrize("gamma", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_r_gamma_is_the_smallest_admissible_length(gamma):
    g = Fraction(str(gamma))
    r = r_gamma(gamma)
    assert g**r <= (1 - g) / 2
    assert r == 1 or g ** (r - 1) > (1 - g) / 2
    assert zeta(r, gamma) <= 1


def test_r_gamma_domain():
    for bad in (0, 1, -0.5, 1.5):
        with pytest.raises(ValueError):
            r_gamma(bad)


def test_zeta_examples():
    assert zeta(2, 0.5) == pytest.approx(1.0)
    assert zeta(3, 0.5) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        zeta(1, 0.5)


def test_prices_match_reference_machine():
    rng = random.Random(5)
    for r in (1, 2, 3, 11):
        for _ in range(200):
            path = [rng.random() < 0.6 for _ in range(rng.randint(0, 80))]
            mine = [p.as_fraction() for p in price_sequence(prrfes_init(r), path)]
            assert mine == reinforced_prrfes_prices(path, r)


@given(st.integers(1, 5), st.lists(st.booleans(), max_size=120))
def test_state_invariants_along_any_path(r, path):
    # q only moves up for buyers who never take prices above 1
    s = prrfes_init(r)
    q_prev = ZERO
    for a in path:
        a = a and s.price() <= ONE
        if s.mode == EXPLORE:
            assert s.k >= 1 and s.price() == s.q + phase_params(s.l).epsilon * s.k
        elif s.mode == PENALIZE:
            assert s.price() == ONE and 1 <= s.x <= r - 1
        elif s.mode == EXPLOIT:
            assert s.price() == s.q and 1 <= s.x <= phase_params(s.l).g_rounds
        assert s.q >= q_prev
        q_prev = s.q
        s = s.step(a)


def _valuation_path(r, v, length):
    """Decisions of a buyer who accepts exactly the prices at most ``v``
    and rejects exploration as soon as the step would leave less than one
    step of surplus."""
    s, path = prrfes_init(r), []
    for _ in range(length):
        p = s.price()
        if s.mode == EXPLORE:
            a = v - p >= phase_params(s.l).epsilon
        else:
            a = p <= v and s.mode != PENALIZE
        path.append(a)
        s = s.step(a)
    return path


@given(st.integers(1, 3), st.integers(0, 256))
def test_valuation_stays_located_and_exploration_is_short(r, k):
    v = Dyadic(k, -8)
    path = _valuation_path(r, v, 2000)
    _, phases = phase_log(r, [(a, 1) for a in path])
    for ph in phases:
        if ph.closed:
            assert ph.q_end <= v < ph.q_end + 2 * phase_params(ph.l).epsilon
        if ph.l >= 1:
            assert ph.accepted_explorations < 2 * 2 ** (2 ** (ph.l - 1))


def test_phase_log_counts_rounds():
    path = [False, False, True, True] + [True, False, False, True, True, True, True]
    _, phases = phase_log(2, [(a, 1) for a in path])
    assert [(p.l, p.accepted_explorations, p.penalize_rounds, p.exploit_rounds) for p in phases[:2]] == [
        (0, 0, 1, 2),
        (1, 1, 1, 4),
    ]
    assert phases[1].q_end == Dyadic(1, -2)


def test_phase_log_tracks_absorption():
    _, phases = phase_log(2, [(False, 1), (True, 50)])
    assert phases[0].penalize_rounds == 1
    assert phases[0].absorbed_rounds == 49
