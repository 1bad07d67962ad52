"""The PRRFES phase machine and its closed-form constants.

Phase ``l`` explores prices ``q + k * eps_l`` (``eps_l = 2**-2**l``) until
a rejection, then spends ``r - 1`` rounds penalizing and ``g(l) = 1/eps_l``
rounds exploiting the last accepted price before moving to phase ``l+1``.

``PrrfesState`` is the reinforced machine by default: penalization rounds
offer price 1, and accepting one pins the price at 1 forever.  With
``reinforced=False`` it is the plain machine whose penalization rounds
repeat the rejected price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional

from .numerics import ONE, ZERO, Dyadic

__all__ = [
    "EXPLORE",
    "PENALIZE",
    "EXPLOIT",
    "ABSORBED",
    "MAX_PHASE",
    "PhaseParams",
    "PrrfesState",
    "PhaseSummary",
    "phase_params",
    "epsilon",
    "prrfes_init",
    "prrfes_step",
    "r_gamma",
    "zeta",
    "phase_log",
    "exact_gamma",
]

EXPLORE = "explore"
PENALIZE = "penalize"
EXPLOIT = "exploit"
ABSORBED = "absorbed_at_one"

MAX_PHASE = 8
_INFINITE = float("inf")


class ConfigError(ValueError):
    pass


def epsilon(l: int) -> Dyadic:
    return Dyadic.pow2(-(1 << l))


@dataclass(frozen=True)
class PhaseParams:
    epsilon: Dyadic
    g_rounds: int


def phase_params(l: int) -> PhaseParams:
    if not 0 <= l <= MAX_PHASE:
        raise ConfigError(f"phase {l} outside the supported range 0..{MAX_PHASE}")
    return PhaseParams(epsilon(l), 1 << (1 << l))


def exact_gamma(gamma: float) -> Fraction:
    """The decimal reading of ``gamma`` (``0.8`` -> ``4/5``)."""
    return Fraction(repr(float(gamma)))


def r_gamma(gamma: float) -> int:
    """Smallest ``r`` with ``gamma**r <= (1 - gamma) / 2``, i.e. the ceiling
    of ``log_gamma((1 - gamma) / 2)``, computed in exact rationals."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    g = exact_gamma(gamma)
    target = (1 - g) / 2
    r = max(1, math.ceil(math.log(float(target)) / math.log(float(g))) - 1)
    while g**r > target:
        r += 1
    while r > 1 and g ** (r - 1) <= target:
        r -= 1
    return r


def zeta(r: int, gamma: float) -> float:
    denom = 1.0 - gamma - gamma**r
    if denom <= 0:
        raise ValueError(f"zeta undefined: 1 - gamma - gamma^r = {denom} <= 0 for r={r}, gamma={gamma}")
    return gamma**r / denom


@dataclass(frozen=True, slots=True)
class PrrfesState:
    """One buyer's position in the PRRFES tree.

    ``q`` is the last accepted price before the current phase; once the
    phase's exploration ends (entering exploitation) it already holds the
    phase's final accepted price.  ``k`` indexes the next exploration
    price in explore mode and the rejected one in penalize mode;
    ``x`` counts the remaining penalize/exploit rounds.
    """

    r: int
    l: int = 0
    q: Dyadic = ZERO
    mode: str = EXPLORE
    k: int = 1
    x: int = 0
    reinforced: bool = True

    def price(self) -> Dyadic:
        mode = self.mode
        if mode == EXPLORE:
            return self.q + epsilon(self.l) * self.k
        if mode == EXPLOIT:
            return self.q
        if mode == PENALIZE:
            return ONE if self.reinforced else self.q + epsilon(self.l) * self.k
        return ONE

    def step(self, accepted: bool) -> "PrrfesState":
        return prrfes_step(self, accepted)

    def penalization_info(self) -> Optional[tuple]:
        """``(r, position)`` inside a penalization sequence, else None."""
        if self.mode == EXPLORE:
            return (self.r, 1)
        if self.mode == PENALIZE:
            return (self.r, self.r - self.x + 1)
        return None

    def left_increment(self) -> Optional[Dyadic]:
        # left subtree bottoms out at the exploitation price q + (k-1) eps
        return epsilon(self.l) if self.mode == EXPLORE else None

    def last_accepted(self) -> Dyadic:
        """Most recent accepted price on the path (0 if none)."""
        if self.mode == EXPLORE:
            return self.q + epsilon(self.l) * (self.k - 1)
        if self.mode == PENALIZE:
            return self.q + epsilon(self.l) * (self.k - 1)
        return self.q if self.mode == EXPLOIT else ONE

    def steady_rounds(self) -> float:
        """Rounds ahead whose price and transitions ignore the decisions."""
        if self.mode == EXPLOIT:
            return self.x
        if self.mode == ABSORBED:
            return _INFINITE
        return 0

    def advance(self, n: int) -> "PrrfesState":
        """Skip ``n <= steady_rounds()`` decision-independent rounds."""
        if n <= 0:
            return self
        if self.mode == ABSORBED:
            return self
        if self.mode != EXPLOIT or n > self.x:
            raise ValueError(f"cannot fast-forward {n} rounds from {self}")
        if n == self.x:
            return replace(self, l=self.l + 1, mode=EXPLORE, k=1, x=0)
        return replace(self, x=self.x - n)

    def __str__(self) -> str:
        s = f"l={self.l} q={self.q.fraction_str()} mode={self.mode}"
        if self.mode == EXPLORE:
            return f"{s} k={self.k}"
        if self.mode in (PENALIZE, EXPLOIT):
            return f"{s} x={self.x}"
        return s


def prrfes_init(r: int, reinforced: bool = True) -> PrrfesState:
    if r < 1:
        raise ValueError(f"penalization length must be >= 1, got {r}")
    return PrrfesState(r=r, reinforced=reinforced)


def _enter_exploit(state: PrrfesState) -> PrrfesState:
    q = state.q + epsilon(state.l) * (state.k - 1)
    return replace(state, q=q, mode=EXPLOIT, x=1 << (1 << state.l))


def prrfes_step(state: PrrfesState, accepted: bool) -> PrrfesState:
    mode = state.mode
    if mode == EXPLORE:
        if accepted:
            return replace(state, k=state.k + 1)
        if state.r == 1:
            return _enter_exploit(state)
        return replace(state, mode=PENALIZE, x=state.r - 1)
    if mode == PENALIZE:
        if accepted:
            if state.reinforced:
                return replace(state, q=ONE, mode=ABSORBED, x=0)
            # same right subtree as accepting at the start of the sequence
            return replace(state, mode=EXPLORE, k=state.k + 1, x=0)
        if state.x > 1:
            return replace(state, x=state.x - 1)
        return _enter_exploit(state)
    if mode == EXPLOIT:
        if state.x > 1:
            return replace(state, x=state.x - 1)
        return replace(state, l=state.l + 1, mode=EXPLORE, k=1, x=0)
    return state


@dataclass
class PhaseSummary:
    """What one buyer did in one phase.

    ``accepted_explorations`` is ``K_l`` once the phase's exploration has
    closed (``closed``), or the running count otherwise.  The rejected
    exploration offer that closes a phase is not counted there; it is the
    first round of the penalization sequence.  ``absorbed_rounds`` counts
    the price-1 rounds after an accepted penalization price.
    """

    l: int
    q_start: Dyadic
    accepted_explorations: int = 0
    closed: bool = False
    penalize_rounds: int = 0
    exploit_rounds: int = 0
    q_end: Optional[Dyadic] = None
    absorbed_rounds: int = 0


def phase_log(r: int, decision_runs: Iterable[tuple]) -> tuple:
    """Replay run-length decisions through a fresh reinforced machine.

    Returns ``(final_state, [PhaseSummary, ...])``.
    """
    state = prrfes_init(r)
    phases = [PhaseSummary(0, ZERO)]
    for accepted, count in decision_runs:
        while count > 0:
            cur = phases[-1]
            if state.mode == EXPLOIT:
                n = min(count, state.x)
                cur.exploit_rounds += n
                state = state.advance(n)
                count -= n
            elif state.mode == ABSORBED:
                cur.absorbed_rounds += count
                count = 0
            else:
                if state.mode == EXPLORE:
                    if accepted:
                        cur.accepted_explorations += 1
                    else:
                        cur.closed = True
                else:
                    cur.penalize_rounds += 1
                state = state.step(accepted)
                count -= 1
                if state.mode == EXPLOIT and cur.q_end is None:
                    cur.q_end = state.q
            if state.mode == EXPLORE and state.l != phases[-1].l:
                phases.append(PhaseSummary(state.l, state.q))
    return state, phases
