"""Buyer policies against divided (one-active-buyer) PRRFES sellers.

``EnvelopeBuyer`` plays any behavior a rational discounted buyer could
play: it never accepts a price above its valuation, it must accept an
exploration price whose surplus is large compared with the left
increment (``v - p >= zeta * delta``), it always takes exploitation
prices it can afford, and everywhere else it follows its free-choice
mode.  ``dp_optimal`` solves the single-buyer game exactly by backward
induction and is used to check that the optimal buyer stays inside that
envelope.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .numerics import ONE, ZERO, Dyadic
from .prrfes import ABSORBED, EXPLOIT, EXPLORE, PENALIZE, exact_gamma, prrfes_init, zeta
from .pricing_tree import replay

__all__ = [
    "ALWAYS_ACCEPT",
    "ALWAYS_REJECT",
    "MUST_ACCEPT",
    "MUST_REJECT",
    "FREE",
    "TruthfulBuyer",
    "EnvelopeBuyer",
    "DpBuyer",
    "DpPolicy",
    "MirrorDesync",
    "exploration_region",
    "allowed_decisions",
    "envelope_bid",
    "dp_optimal",
    "brute_force_value",
    "realized_surplus",
]

ALWAYS_ACCEPT = "always_accept"
ALWAYS_REJECT = "always_reject"

MUST_ACCEPT = "must_accept"
MUST_REJECT = "must_reject"
FREE = "free"

MAX_DP_HORIZON = 22


class MirrorDesync(RuntimeError):
    """The buyer's replica of the seller state disagrees with the offer."""


class TruthfulBuyer:
    """Bids its valuation every round."""

    def __init__(self, valuation: Dyadic):
        self.valuation = valuation

    def bid(self, reserve: Dyadic, rng) -> Dyadic:
        return self.valuation

    def observe(self, reserve, bid, won, payment) -> None:
        pass

    def steady_bids(self, reserves, n):
        return [self.valuation] * len(reserves)

    def advance_steady(self, reserves, bids, outcomes, n) -> None:
        pass


def exploration_region(v: Dyadic, p: Dyadic, last_accepted: Dyadic, zeta_value: float) -> str:
    """Where an exploration offer ``p`` falls for a buyer valued ``v``.

    Rejecting is only rational when ``v - p < zeta * (p - last_accepted)``;
    accepting above ``v`` never is.
    """
    if p > v:
        return MUST_REJECT
    if float(v - p) >= zeta_value * float(p - last_accepted):
        return MUST_ACCEPT
    return FREE


def allowed_decisions(state, v: Dyadic, zeta_value: float) -> frozenset:
    """Decisions the envelope permits at a (reinforced) PRRFES node."""
    p = state.price()
    if p > v:
        return frozenset({False})
    if state.mode == EXPLORE:
        region = exploration_region(v, p, state.last_accepted(), zeta_value)
        return frozenset({True}) if region == MUST_ACCEPT else frozenset({False, True})
    if state.mode in (EXPLOIT, ABSORBED):
        # the decision cannot move future prices, so an affordable offer is taken
        return frozenset({True})
    # penalization price 1 with v == 1
    return frozenset({False, True})


@dataclass
class EnvelopeBuyer:
    """A buyer inside the rationality envelope of a divPRRFES seller.

    ``free_choice`` is ``always_accept``, ``always_reject`` or a float
    ``p_reject`` for a coin flip.  ``mirror`` replicates the seller's
    tracking state for this buyer; it advances only in rounds where the
    offer is not the barrage price.
    """

    valuation: Dyadic
    gamma: float
    r: int
    p_bar: Dyadic
    free_choice: object = ALWAYS_REJECT
    mirror: object = None
    zeta_value: float = field(init=False)

    def __post_init__(self):
        if self.mirror is None:
            self.mirror = prrfes_init(self.r)
        self.zeta_value = zeta(self.r, self.gamma)

    def _is_active(self, reserve: Dyadic) -> bool:
        expected = self.mirror.price()
        if reserve == self.p_bar:
            if expected == self.p_bar:
                raise MirrorDesync(f"offer {reserve} is both the barrage price and the mirrored price")
            return False
        if reserve != expected:
            raise MirrorDesync(f"offered {reserve}, mirror {self.mirror} expects {expected}")
        return True

    def _free(self, rng) -> bool:
        fc = self.free_choice
        if fc == ALWAYS_ACCEPT:
            return True
        if fc == ALWAYS_REJECT:
            return False
        return not rng.random() < float(fc)

    def decide(self, reserve: Dyadic, rng) -> bool:
        if not self._is_active(reserve):
            return False
        allowed = allowed_decisions(self.mirror, self.valuation, self.zeta_value)
        if len(allowed) == 1:
            return next(iter(allowed))
        return self._free(rng)

    def bid(self, reserve: Dyadic, rng) -> Dyadic:
        return reserve if self.decide(reserve, rng) else ZERO

    def observe(self, reserve, bid, won, payment) -> None:
        if reserve == self.p_bar:
            return
        self.mirror = self.mirror.step(bid >= reserve)

    def steady_bids(self, reserves, n):
        bids = []
        for res in reserves:
            if res == self.p_bar:
                bids.append(ZERO)
                continue
            st = self.mirror
            if res != st.price() or st.steady_rounds() < n:
                return None
            bids.append(res if res <= self.valuation else ZERO)
        return bids

    def advance_steady(self, reserves, bids, outcomes, n) -> None:
        for res in reserves:
            if res != self.p_bar:
                self.mirror = self.mirror.advance(n)


def envelope_bid(buyer: EnvelopeBuyer, reserve: Dyadic, rng) -> Dyadic:
    """Canonical bid of ``buyer`` for ``reserve``; advances its mirror."""
    b = buyer.bid(reserve, rng)
    buyer.observe(reserve, b, b >= reserve, reserve if b >= reserve else ZERO)
    return b


# -- exact single-buyer optimum ---------------------------------------------


@dataclass
class DpPolicy:
    """Optimal single-buyer play against a posted-price algorithm.

    ``table`` maps ``(t, state)`` to ``(accept?, value)`` where ``value`` is
    the optimal discounted surplus from round ``t`` on, in units of the
    round-1 discount.
    """

    algo: object
    valuation: Dyadic
    gamma: Fraction
    T: int
    table: dict

    @property
    def value(self) -> Fraction:
        return self.table[(1, self.algo)][1]

    def decision(self, path: Sequence[bool]) -> bool:
        return self.table[(len(path) + 1, replay(self.algo, path))][0]

    def optimal_path(self) -> list:
        path, state = [], self.algo
        for t in range(1, self.T + 1):
            a = self.table[(t, state)][0]
            path.append(a)
            state = state.step(a)
        return path

    def nodes(self):
        """Every ``(t, state, accept?, value)`` the solver visited."""
        for (t, state), (a, val) in self.table.items():
            yield t, state, a, val

    def to_csv(self, depth: Optional[int] = None) -> str:
        """One row per decision path up to ``depth`` (default ``T``):
        path bit-string, optimal decision, value."""
        depth = self.T if depth is None else min(depth, self.T)
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["path", "decision", "value"])
        for d in range(depth):
            for bits in itertools.product((False, True), repeat=d):
                a, val = self.table[(d + 1, replay(self.algo, bits))]
                w.writerow(["".join("1" if b else "0" for b in bits), "accept" if a else "reject", f"{float(val):.17g}"])
        return out.getvalue()


def dp_optimal(algo, v: Dyadic, gamma: float, T: int) -> DpPolicy:
    """Backward induction over the decision tree, memoized on state.

    ``value(t, node) = max(g**(t-1) (v - p) + value(t+1, right),
    value(t+1, left))`` with ties going to accept.  Exact rationals.
    """
    if not 1 <= T <= MAX_DP_HORIZON:
        raise ValueError(f"DP horizon must be in [1, {MAX_DP_HORIZON}], got {T}")
    g = exact_gamma(gamma)
    vf = v.as_fraction()
    disc = [g**i for i in range(T + 1)]
    table: dict = {}

    def solve(t: int, state) -> Fraction:
        if t > T:
            return Fraction(0)
        key = (t, state)
        hit = table.get(key)
        if hit is not None:
            return hit[1]
        p = state.price().as_fraction()
        acc = disc[t - 1] * (vf - p) + solve(t + 1, state.step(True))
        rej = solve(t + 1, state.step(False))
        best = (True, acc) if acc >= rej else (False, rej)
        table[key] = best
        return best[1]

    solve(1, algo)
    return DpPolicy(algo, v, g, T, table)


def brute_force_value(algo, v: Dyadic, gamma: float, T: int) -> tuple:
    """Enumerate all ``2**T`` decision sequences; return ``(value, path)``
    of the best one (earliest in accept-first order on ties)."""
    g = exact_gamma(gamma)
    vf = v.as_fraction()
    best, best_path = None, None
    for bits in itertools.product((True, False), repeat=T):
        state, total, d = algo, Fraction(0), Fraction(1)
        for a in bits:
            if a:
                total += d * (vf - state.price().as_fraction())
            state = state.step(a)
            d *= g
        if best is None or total > best:
            best, best_path = total, list(bits)
    return best, best_path


class DpBuyer:
    """Follows a ``DpPolicy`` in a one-buyer game."""

    def __init__(self, policy: DpPolicy):
        self.policy = policy
        self.state = policy.algo
        self.t = 1

    def bid(self, reserve: Dyadic, rng) -> Dyadic:
        if reserve != self.state.price():
            raise MirrorDesync(f"offered {reserve}, policy state {self.state} expects {self.state.price()}")
        return reserve if self.policy.table[(self.t, self.state)][0] else ZERO

    def observe(self, reserve, bid, won, payment) -> None:
        self.state = self.state.step(bid >= reserve)
        self.t += 1


def realized_surplus(trace, m: int, v: Dyadic, gamma: float) -> float:
    """Discounted surplus ``sum_t gamma**(t-1) * won_t * (v - paid_t)``."""
    g = exact_gamma(gamma)
    vf = v.as_fraction()
    total = Fraction(0)
    for rec in trace:
        if rec.outcome.winner == m:
            total += g ** (rec.t - 1) * (vf - rec.outcome.payment.as_fraction())
    return float(total)
