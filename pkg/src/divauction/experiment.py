"""Building and running single games and parameter sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .auction import GameTrace, play_game
from .buyers import ALWAYS_ACCEPT, ALWAYS_REJECT, DpBuyer, EnvelopeBuyer, TruthfulBuyer, dp_optimal
from .div import divprrfes
from .numerics import Dyadic
from .prrfes import prrfes_init
from .regret import RegretReport, decompose, exploration_counts

__all__ = [
    "BUYER_MODES",
    "GameSpec",
    "GameResult",
    "make_buyer",
    "grid_valuations",
    "run_game",
    "run_many",
]

BUYER_MODES = ("truthful", "envelope_always_reject", "envelope_always_accept", "envelope_coin", "dp_optimal")


def parse_mode(mode: str):
    """``envelope_coin:0.3`` -> ("envelope_coin", 0.3)."""
    name, _, arg = mode.partition(":")
    if name not in BUYER_MODES:
        raise ValueError(f"unknown buyer mode {mode!r}")
    if name == "envelope_coin":
        p = float(arg) if arg else 0.5
        if not 0 <= p <= 1:
            raise ValueError(f"coin probability must lie in [0, 1], got {arg!r}")
        return name, p
    if arg:
        raise ValueError(f"mode {name} takes no argument, got {mode!r}")
    return name, None


def make_buyer(mode: str, v: Dyadic, gamma: float, seller, T: int):
    name, arg = parse_mode(mode)
    if name == "truthful":
        return TruthfulBuyer(v)
    if name == "dp_optimal":
        if seller.M != 1:
            raise ValueError("dp_optimal buyers need a single-buyer game")
        return DpBuyer(dp_optimal(prrfes_init(seller.r), v, gamma, T))
    free = {"envelope_always_reject": ALWAYS_REJECT, "envelope_always_accept": ALWAYS_ACCEPT}.get(name, arg)
    return EnvelopeBuyer(v, gamma, seller.r, seller.state.p_bar, free)


def grid_valuations(seed: int, M: int, grid_bits: int = 6, stream: int = 0) -> list:
    """``M`` valuations ``k / 2**grid_bits`` with ``k`` uniform on
    ``0..2**grid_bits``, drawn from a stream derived from ``(stream, seed)``."""
    rng = np.random.default_rng([stream, seed, 0x7A1])
    ks = rng.integers(0, (1 << grid_bits) + 1, size=M)
    return [Dyadic(int(k), -grid_bits) for k in ks]


@dataclass(frozen=True)
class GameSpec:
    M: int
    T: int
    gamma0: float
    valuations: tuple
    modes: tuple
    seed: int = 0
    r: Optional[int] = None
    gammas: Optional[tuple] = None
    keep_trace: bool = False
    with_phases: bool = False
    compress: bool = True


@dataclass
class GameResult:
    spec: GameSpec
    r: int
    report: RegretReport
    trace: Optional[GameTrace] = None
    phases: Optional[list] = None
    final_substates: list = field(default_factory=list)
    events: list = field(default_factory=list)


def run_game(spec: GameSpec) -> GameResult:
    if len(spec.valuations) != spec.M or len(spec.modes) != spec.M:
        raise ValueError("valuations and modes must have one entry per buyer")
    seller = divprrfes(spec.M, spec.gamma0, spec.r)
    gammas = spec.gammas or (spec.gamma0,) * spec.M
    buyers = [make_buyer(spec.modes[m], spec.valuations[m], gammas[m], seller, spec.T) for m in range(spec.M)]
    trace = play_game(seller, buyers, spec.T, spec.seed, compress=spec.compress)
    report = decompose(trace, list(spec.valuations), seller.r)
    result = GameResult(spec, seller.r, report, final_substates=list(seller.state.substates), events=trace.events)
    if spec.with_phases:
        result.phases = exploration_counts(trace, seller.r)
    if spec.keep_trace:
        result.trace = trace
    return result


def run_many(specs: Sequence[GameSpec], workers: Optional[int] = None) -> list:
    """Run independent games, results in input order."""
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(specs) < 2:
        return [run_game(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_game, specs, chunksize=max(1, len(specs) // (4 * workers))))
