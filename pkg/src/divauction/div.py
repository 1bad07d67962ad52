"""Dividing sellers: one meaningful buyer per round, everyone else barraged.

``DivSeller`` cycles through the suspected buyers in periods (ascending
buyer id within a period).  The active buyer gets the price of its own
single-buyer subalgorithm state; every rival gets the barrage price.
After each period a stopping rule may drop buyers from the suspected set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .numerics import ONE, Dyadic, from_fraction
from .prrfes import ConfigError, epsilon, exact_gamma, prrfes_init, r_gamma
from .auction import PeriodEvent

__all__ = [
    "DivState",
    "DivSeller",
    "barrage_price",
    "make_div",
    "stopping_rule_prrfes",
    "PrrfesStoppingRule",
    "divprrfes",
]

_BARRAGE_BITS = 64


def barrage_price(gamma0: float) -> Dyadic:
    """``1 / (1 - gamma0)`` rounded up onto the ``2**-64`` grid."""
    if not 0 < gamma0 < 1:
        raise ValueError(f"gamma0 must lie in (0, 1), got {gamma0}")
    return from_fraction(1 / (1 - exact_gamma(gamma0)), _BARRAGE_BITS, "up")


def valuation_upper_bound(state) -> Dyadic:
    """Upper end of the valuation location interval ``q + 2 eps_{l-1}``;
    1 while phase 0 is still running."""
    if state.l == 0:
        return ONE
    return state.q + epsilon(state.l - 1) * 2


def stopping_rule_prrfes(m: int, substates: Sequence) -> bool:
    """True iff some rival's ``q`` beats buyer ``m``'s valuation upper bound."""
    bound = valuation_upper_bound(substates[m])
    return any(s.q > bound for i, s in enumerate(substates) if i != m)


class PrrfesStoppingRule:
    """Callable wrapper that also declares countdown-independence, which
    lets the seller fast-forward exploitation stretches."""

    steady_safe = True

    def __call__(self, m: int, substates: Sequence) -> bool:
        return stopping_rule_prrfes(m, substates)


@dataclass
class DivState:
    M: int
    substates: list
    p_bar: Dyadic
    period: int = 1
    suspected: list = field(default_factory=list)
    cursor: int = 0
    subhorizons: list = field(default_factory=list)

    def __post_init__(self):
        if not self.suspected:
            self.suspected = list(range(self.M))
        if not self.subhorizons:
            self.subhorizons = [0] * self.M


class DivSeller:
    """``div_M(A_1, sr)`` as a seller algorithm (buyers indexed from 0)."""

    def __init__(self, sub_factory: Callable, sr: Callable, M: int, p_bar: Dyadic):
        if M < 1:
            raise ValueError(f"need at least one buyer, got M={M}")
        if not p_bar > ONE:
            raise ValueError(f"barrage price must exceed 1, got {p_bar}")
        self.M = M
        self.sr = sr
        self.state = DivState(M=M, substates=[sub_factory() for _ in range(M)], p_bar=p_bar)
        self._events: list = []
        self._bar_row = (p_bar,) * M

    @property
    def active(self) -> int:
        st = self.state
        return st.suspected[st.cursor]

    def reserves(self) -> tuple:
        st = self.state
        m = st.suspected[st.cursor]
        row = list(self._bar_row)
        row[m] = st.substates[m].price()
        return tuple(row)

    def annotation(self) -> tuple:
        return self.active, self.state.period

    def observe(self, bids: Sequence[Dyadic]) -> None:
        st = self.state
        m = st.suspected[st.cursor]
        sub = st.substates[m]
        st.substates[m] = sub.step(bids[m] >= sub.price())
        st.subhorizons[m] += 1
        st.cursor += 1
        if st.cursor == len(st.suspected):
            self._end_period(1)

    def _end_period(self, span: int) -> None:
        st = self.state
        old = list(st.suspected)
        stopped = tuple(m for m in old if self.sr(m, st.substates))
        if stopped:
            st.suspected = [m for m in old if m not in stopped]
            if not st.suspected:
                raise RuntimeError(f"stopping rule emptied the suspected set after period {st.period}")
        self._events.append(PeriodEvent(st.period, tuple(old), stopped, span))
        st.period += 1
        st.cursor = 0

    def drain_events(self) -> list:
        ev, self._events = self._events, []
        return ev

    # -- fast-forward -----------------------------------------------------

    def steady_plan(self, rounds_left: int):
        """At a period boundary, if every suspected buyer sits in a
        decision-independent stretch, return one period's reserves, their
        annotations, and how many whole periods can be skipped."""
        st = self.state
        if st.cursor != 0 or not getattr(self.sr, "steady_safe", False):
            return None
        width = len(st.suspected)
        n = rounds_left // width
        for m in st.suspected:
            hook = getattr(st.substates[m], "steady_rounds", None)
            if hook is None:
                return None
            n = min(n, hook())
        n = int(n)
        if n < 2:
            return None
        pattern, notes = [], []
        for m in st.suspected:
            row = list(self._bar_row)
            row[m] = st.substates[m].price()
            pattern.append(tuple(row))
            notes.append((m, st.period))
        return pattern, notes, n

    def advance_steady(self, n: int) -> None:
        st = self.state
        for m in st.suspected:
            st.substates[m] = st.substates[m].advance(n)
            st.subhorizons[m] += n
        st.period += n - 1
        self._end_period(n)


def make_div(sub_factory: Callable, sr: Callable, M: int, p_bar: Dyadic) -> DivSeller:
    return DivSeller(sub_factory, sr, M, p_bar)


def divprrfes(M: int, gamma0: float, r: Optional[int] = None) -> DivSeller:
    """divPRRFES: reinforced PRRFES per buyer, the valuation-interval
    stopping rule, and barrage price ``1/(1 - gamma0)``."""
    r_min = r_gamma(gamma0)
    if r is None:
        r = r_min
    elif r < r_min:
        raise ConfigError(f"r={r} is below the minimum r_gamma({gamma0}) = {r_min}")
    seller = make_div(lambda: prrfes_init(r), PrrfesStoppingRule(), M, barrage_price(gamma0))
    seller.r = r
    seller.gamma0 = gamma0
    return seller
