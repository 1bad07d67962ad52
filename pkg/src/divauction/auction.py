"""Second-price auctions with personal reserves, and the repeated game loop.

One round: every buyer whose bid meets its own reserve participates; the
highest participating bid wins (uniform tie-break from the game's
generator) and pays the larger of its own reserve and the best rival
participating bid.  ``play_game`` couples a seller algorithm to ``M``
buyer policies for ``T`` rounds and records everything in a
``GameTrace``.

Long stretches where nothing but countdowns change (exploitation rounds)
can be fast-forwarded when the seller and every buyer agree that the
stretch is decision-independent; the trace then stores one period pattern
plus a repeat count instead of every round.  Expanding a trace always
yields exactly ``T`` per-round records.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .numerics import ZERO, Dyadic

__all__ = [
    "RoundOutcome",
    "RoundRecord",
    "TraceBlock",
    "PeriodEvent",
    "GameTrace",
    "SellerAlgorithm",
    "BuyerPolicy",
    "run_round",
    "play_game",
    "revenue",
    "buyer_rngs",
]


@dataclass(frozen=True, slots=True)
class RoundOutcome:
    participants: frozenset
    winner: Optional[int]
    payment: Dyadic
    allocations: tuple
    participation_flags: tuple


def run_round(reserves: Sequence[Dyadic], bids: Sequence[Dyadic], rng) -> RoundOutcome:
    """Apply the second-price rule with personal reserves to one round.

    Buyers are indexed from 0.  ``rng`` is consulted only when two or more
    participants tie for the highest bid.
    """
    M = len(reserves)
    if len(bids) != M or M < 1:
        raise ValueError(f"reserves/bids length mismatch: {len(reserves)} vs {len(bids)}")
    flags = tuple(bids[m] >= reserves[m] for m in range(M))
    participants = [m for m in range(M) if flags[m]]
    if not participants:
        return RoundOutcome(frozenset(), None, ZERO, (False,) * M, flags)
    if len(participants) == 1:
        w = participants[0]
        # the rival max is over an empty set; the winner pays its reserve
        payment = reserves[w]
    else:
        top = max(bids[m] for m in participants)
        leaders = [m for m in participants if bids[m] == top]
        w = leaders[0] if len(leaders) == 1 else leaders[int(rng.integers(len(leaders)))]
        rival = max(bids[m] for m in participants if m != w)
        payment = max(reserves[w], rival)
    alloc = tuple(m == w for m in range(M))
    return RoundOutcome(frozenset(participants), w, payment, alloc, flags)


def _needs_tiebreak(reserves: Sequence[Dyadic], bids: Sequence[Dyadic]) -> bool:
    part = [b for b, p in zip(bids, reserves) if b >= p]
    if len(part) < 2:
        return False
    top = max(part)
    return sum(1 for b in part if b == top) > 1


@dataclass(frozen=True, slots=True)
class RoundRecord:
    t: int
    reserves: tuple
    bids: tuple
    outcome: RoundOutcome
    active_buyer: Optional[int] = None
    period: Optional[int] = None


@dataclass(frozen=True, slots=True)
class TraceBlock:
    """``repeats`` consecutive copies of a one-period pattern of rounds.

    ``pattern[j]`` carries ``t`` and ``period`` of its first occurrence;
    copy ``i`` shifts them by ``i * len(pattern)`` and ``i``.
    """

    pattern: tuple
    repeats: int

    def __len__(self) -> int:
        return len(self.pattern) * self.repeats

    def expand(self) -> Iterator[RoundRecord]:
        width = len(self.pattern)
        for i in range(self.repeats):
            for rec in self.pattern:
                period = None if rec.period is None else rec.period + i
                yield replace(rec, t=rec.t + i * width, period=period)


@dataclass(frozen=True, slots=True)
class PeriodEvent:
    """Stopping-rule evaluation at the end of ``period``.

    ``span`` > 1 means the periods ``period - span + 1 .. period`` were
    fast-forwarded and share the same suspected set.
    """

    period: int
    suspected: tuple
    stopped: tuple
    span: int = 1


@dataclass
class GameTrace:
    T: int
    M: int
    seed: int
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    n_rounds: int = 0

    def append(self, item) -> None:
        self.segments.append(item)
        self.n_rounds += len(item) if isinstance(item, TraceBlock) else 1

    def __len__(self) -> int:
        return self.n_rounds

    def __iter__(self) -> Iterator[RoundRecord]:
        for seg in self.segments:
            if isinstance(seg, TraceBlock):
                yield from seg.expand()
            else:
                yield seg

    @property
    def records(self) -> list:
        return list(self)

    def weighted(self) -> Iterator[tuple]:
        """Yield ``(record, multiplicity)`` without expanding blocks."""
        for seg in self.segments:
            if isinstance(seg, TraceBlock):
                for rec in seg.pattern:
                    yield rec, seg.repeats
            else:
                yield seg, 1

    def decision_runs(self, m: int) -> list:
        """Run-length list ``[(accepted, count), ...]`` of buyer ``m``'s
        active-round decisions, in play order."""
        runs: list = []
        for rec, w in self.weighted():
            if rec.active_buyer != m:
                continue
            a = rec.outcome.participation_flags[m]
            if runs and runs[-1][0] == a:
                runs[-1] = (a, runs[-1][1] + w)
            else:
                runs.append((a, w))
        return runs

    def to_csv(self, fh=None) -> str:
        """Columns: t, period, active_buyer, then reserve_m, bid_m, alloc_m
        per buyer (1-based), then payment.  Buyer ids are 1-based."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        header = ["t", "period", "active_buyer"]
        for m in range(1, self.M + 1):
            header += [f"reserve_{m}", f"bid_{m}", f"alloc_{m}"]
        header.append("payment")
        w.writerow(header)
        for rec in self:
            row = [
                rec.t,
                "" if rec.period is None else rec.period,
                "" if rec.active_buyer is None else rec.active_buyer + 1,
            ]
            for m in range(self.M):
                row += [str(rec.reserves[m]), str(rec.bids[m]), int(rec.outcome.allocations[m])]
            row.append(str(rec.outcome.payment))
            w.writerow(row)
        return out.getvalue() if fh is None else ""


@runtime_checkable
class SellerAlgorithm(Protocol):
    """Deterministic pricing algorithm facing ``M`` buyers.

    Optional hooks used by ``play_game`` when present: ``annotation()``
    returning ``(active_buyer, period)`` for the upcoming round,
    ``drain_events()``, and the fast-forward pair ``steady_plan`` /
    ``advance_steady``.
    """

    M: int

    def reserves(self) -> tuple: ...

    def observe(self, bids: Sequence[Dyadic]) -> None: ...


@runtime_checkable
class BuyerPolicy(Protocol):
    """A buyer that sees only its own reserves, bids and outcomes."""

    def bid(self, reserve: Dyadic, rng) -> Dyadic: ...

    def observe(self, reserve: Dyadic, bid: Dyadic, won: bool, payment: Dyadic) -> None: ...


def buyer_rngs(seed: int, M: int) -> list:
    """Independent generator per buyer, derived from (seed, buyer id)."""
    return [np.random.default_rng([seed, m + 1]) for m in range(M)]


def _try_steady(seller, buyers, t: int, T: int, trace: GameTrace) -> int:
    plan = seller.steady_plan(T - t + 1)
    if plan is None:
        return 0
    pattern_reserves, annotations, n = plan
    M = len(buyers)
    width = len(pattern_reserves)
    per_buyer = [[res[m] for res in pattern_reserves] for m in range(M)]
    bids_by_buyer = []
    for m, buyer in enumerate(buyers):
        hook = getattr(buyer, "steady_bids", None)
        bids = hook(per_buyer[m], n) if hook is not None else None
        if bids is None:
            return 0
        bids_by_buyer.append(bids)
    pattern_bids = [tuple(bids_by_buyer[m][j] for m in range(M)) for j in range(width)]
    if any(_needs_tiebreak(r, b) for r, b in zip(pattern_reserves, pattern_bids)):
        return 0
    pattern = []
    for j in range(width):
        outcome = run_round(pattern_reserves[j], pattern_bids[j], None)
        active, period = annotations[j]
        pattern.append(RoundRecord(t + j, tuple(pattern_reserves[j]), pattern_bids[j], outcome, active, period))
    for m, buyer in enumerate(buyers):
        outcomes = [
            (rec.outcome.winner == m, rec.outcome.payment if rec.outcome.winner == m else ZERO)
            for rec in pattern
        ]
        buyer.advance_steady(per_buyer[m], bids_by_buyer[m], outcomes, n)
    seller.advance_steady(n)
    trace.append(TraceBlock(tuple(pattern), n))
    return width * n


def play_game(seller, buyers: Sequence, T: int, seed: int = 0, compress: bool = True) -> GameTrace:
    """Play ``T`` rounds.  Fully determined by ``seed`` and the inputs.

    ``compress=False`` forces the plain per-round loop; the expanded trace
    is identical either way.
    """
    M = seller.M
    if len(buyers) != M:
        raise ValueError(f"seller expects {M} buyers, got {len(buyers)}")
    if T < 1:
        raise ValueError(f"horizon must be positive, got {T}")
    tie_rng = np.random.default_rng([seed, 0])
    rngs = buyer_rngs(seed, M)
    trace = GameTrace(T=T, M=M, seed=seed)
    annotate = getattr(seller, "annotation", None)
    drain = getattr(seller, "drain_events", None)
    can_steady = compress and hasattr(seller, "steady_plan")
    rng_range = range(M)
    t = 1
    while t <= T:
        if can_steady:
            done = _try_steady(seller, buyers, t, T, trace)
            if done:
                t += done
                if drain is not None:
                    trace.events.extend(drain())
                continue
        reserves = seller.reserves()
        active, period = annotate() if annotate is not None else (None, None)
        bids = tuple(buyers[m].bid(reserves[m], rngs[m]) for m in rng_range)
        outcome = run_round(reserves, bids, tie_rng)
        seller.observe(bids)
        w = outcome.winner
        for m in rng_range:
            won = w == m
            buyers[m].observe(reserves[m], bids[m], won, outcome.payment if won else ZERO)
        trace.append(RoundRecord(t, tuple(reserves), bids, outcome, active, period))
        if drain is not None:
            trace.events.extend(drain())
        t += 1
    return trace


def revenue(trace: GameTrace) -> Dyadic:
    total = ZERO
    for rec, w in trace.weighted():
        if rec.outcome.winner is not None:
            total = total + rec.outcome.payment * w
    return total
