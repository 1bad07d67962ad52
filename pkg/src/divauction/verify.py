"""Built-in invariant suites: each returns a list of named checks with
pass/fail, a short detail line and (where meaningful) the worst margin.

The grids here are the ones the command line ``verify`` runs; tests call
the same functions with smaller grids.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .auction import run_round
from .buyers import EnvelopeBuyer, allowed_decisions, dp_optimal
from .experiment import GameSpec, grid_valuations, run_game, run_many
from .numerics import Dyadic
from .prrfes import EXPLORE, prrfes_init, r_gamma, zeta
from .regret import BOUND_SLACK

__all__ = [
    "Check",
    "SUITES",
    "oracle_outcomes",
    "mechanics_checks",
    "prop1_checks",
    "bound_grid",
    "run_bound_grid",
    "bound_checks",
    "run_suite",
]

ZETA_SLACK = 1e-12

GRID_T = (2**8, 2**12, 2**16)
GRID_M = (1, 2, 3, 5)
GRID_GAMMA0 = (0.5, 0.8)
GRID_MODES = ("envelope_always_reject", "envelope_always_accept", "envelope_coin:0.5")
GRID_SEEDS = range(100)

PROP1_GAMMAS = (0.3, 0.5, 0.7)
PROP1_T = (8, 12, 16)
PROP1_GRID_BITS = 5

MECHANICS_VALUES = tuple(Dyadic(k, -2) for k in range(5))


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    worst_margin: Optional[float] = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        margin = "" if self.worst_margin is None else f" (worst margin {self.worst_margin:.6g})"
        return f"{tag} {self.name}: {self.detail}{margin}"


# -- mechanics --------------------------------------------------------------


def oracle_outcomes(reserves: Sequence[Dyadic], bids: Sequence[Dyadic]) -> dict:
    """Every outcome the round rule allows, keyed by winner.

    Follows the rule text literally: a buyer takes part when its bid is at
    least its reserve; a highest participating bidder wins; the winner pays
    the largest of its own reserve and the other participants' bids.
    ``{None: 0}`` when nobody takes part.
    """
    taking_part = []
    for m in range(len(reserves)):
        if bids[m] >= reserves[m]:
            taking_part.append(m)
    if not taking_part:
        return {None: Dyadic(0)}
    best = taking_part[0]
    for m in taking_part:
        if bids[m] > bids[best]:
            best = m
    outcomes = {}
    for w in taking_part:
        if bids[w] != bids[best]:
            continue
        pay = reserves[w]
        for m in taking_part:
            if m != w and bids[m] > pay:
                pay = bids[m]
        outcomes[w] = pay
    return outcomes


def mechanics_checks(values: Sequence[Dyadic] = MECHANICS_VALUES, sizes: Iterable[int] = (1, 2, 3)) -> list:
    """``run_round`` against ``oracle_outcomes`` on every reserve/bid
    combination drawn from ``values``."""
    checks = []
    total = 0
    bad = []
    rng = np.random.default_rng(0)
    for M in sizes:
        for combo in itertools.product(values, repeat=2 * M):
            reserves, bids = combo[:M], combo[M:]
            total += 1
            out = run_round(reserves, bids, rng)
            allowed = oracle_outcomes(reserves, bids)
            ok = out.winner in allowed and out.payment == allowed[out.winner]
            ok &= out.participation_flags == tuple(bids[m] >= reserves[m] for m in range(M))
            ok &= out.participants == frozenset(m for m in range(M) if out.participation_flags[m])
            ok &= out.allocations == tuple(m == out.winner for m in range(M))
            if not ok and len(bad) < 3:
                bad.append((tuple(map(str, reserves)), tuple(map(str, bids))))
            elif not ok:
                bad.append(None)
    detail = f"{total} reserve/bid combinations, {len(bad)} mismatches"
    if bad:
        detail += f", first {bad[0]}"
    checks.append(Check("mechanics.oracle", not bad, detail))
    checks.append(_determinism_check())
    return checks


def _determinism_check() -> Check:
    cases = [
        GameSpec(3, 2000, 0.5, tuple(grid_valuations(s, 3)), ("envelope_coin:0.5",) * 3, s, keep_trace=True)
        for s in range(3)
    ]
    ok = True
    for spec in cases:
        a = run_game(spec).trace.to_csv()
        b = run_game(spec).trace.to_csv()
        plain = run_game(GameSpec(**{**spec.__dict__, "compress": False})).trace.to_csv()
        ok &= a == b == plain
    return Check("mechanics.determinism", ok, f"{len(cases)} games replayed, compressed and per-round traces byte-identical")


# -- optimal single buyer vs. the rejection inequality ----------------------


def prop1_instance(gamma: float, T: int, v: Dyadic) -> tuple:
    """Check every node the optimal single-buyer policy decides.

    Returns ``(violations, worst_margin, nodes, outside_envelope)`` where a
    violation is an optimal reject of an exploration price with
    ``v - p >= zeta * (p - q)`` or an optimal accept above ``v``; the
    margin is ``zeta * (p - q) - (v - p)`` over optimal exploration rejects.
    ``outside_envelope`` counts optimal-path decisions the envelope forbids.
    """
    r = r_gamma(gamma)
    z = zeta(r, gamma)
    root = prrfes_init(r)
    policy = dp_optimal(root, v, gamma, T)
    violations, worst, nodes = [], None, 0
    for t, state, accept, _ in policy.nodes():
        nodes += 1
        p = state.price()
        if accept and p > v:
            violations.append((t, str(state), "accepted above valuation"))
        if not accept and state.mode == EXPLORE:
            surplus = float(v - p)
            cap = z * float(p - state.last_accepted())
            worst = cap - surplus if worst is None else min(worst, cap - surplus)
            if not surplus < cap + ZETA_SLACK:
                violations.append((t, str(state), f"rejected with v-p={v - p} zeta*delta={cap:.6g}"))
    outside = 0
    state = root
    for a in policy.optimal_path():
        if a not in allowed_decisions(state, v, z):
            outside += 1
        state = state.step(a)
    return violations, worst, nodes, outside


def prop1_checks(gammas=PROP1_GAMMAS, horizons=PROP1_T, grid_bits: int = PROP1_GRID_BITS) -> list:
    n = 1 << grid_bits
    violations, outside, instances, nodes = [], 0, 0, 0
    worst = None
    for gamma, T, k in itertools.product(gammas, horizons, range(n + 1)):
        v = Dyadic(k, -grid_bits)
        bad, w, cnt, out = prop1_instance(gamma, T, v)
        instances += 1
        nodes += cnt
        outside += out
        violations += [(gamma, T, str(v)) + b for b in bad]
        if w is not None:
            worst = w if worst is None else min(worst, w)
    detail = f"{instances} instances, {nodes} decision nodes, {len(violations)} violations"
    if violations:
        detail += f", first {violations[0]}"
    return [
        Check("prop1.optimal_rejects", not violations, detail, worst),
        Check("prop1.envelope_contains_optimum", outside == 0, f"{outside} optimal-path decisions outside the envelope"),
    ]


# -- bound sweeps -----------------------------------------------------------


def bound_grid(Ts=GRID_T, Ms=GRID_M, gammas=GRID_GAMMA0, modes=GRID_MODES, seeds=GRID_SEEDS,
               grid_bits: int = 6, with_phases: bool = True) -> list:
    specs = []
    for T, M, g0, mode, s in itertools.product(Ts, Ms, gammas, modes, seeds):
        vals = tuple(grid_valuations(s, M, grid_bits))
        specs.append(GameSpec(M, T, g0, vals, (mode,) * M, s, with_phases=with_phases))
    return specs


def run_bound_grid(specs: Sequence[GameSpec], workers: Optional[int] = None) -> list:
    return run_many(specs, workers)


def _margin(bound: float, measured) -> float:
    return bound - float(measured)


def bound_checks(results: Sequence, which: Iterable[str]) -> list:
    """Checks named in ``which`` (lemma1, lemma2, lemma3, theorem1,
    exploration) over finished games."""
    which = set(which)
    checks = []
    n = len(results)
    if "lemma1" in which:
        ident = [res for res in results if not res.report.identity_holds]
        part = [res for res in results if sum(res.report.subhorizons) != res.spec.T]
        checks.append(Check("lemma1.identity", not ident, f"{n} games, {len(ident)} inexact decompositions"))
        checks.append(Check("lemma1.round_partition", not part, f"{n} games, {len(part)} with sum of subhorizons != T"))
    if "theorem1" in which:
        bad, worst = [], None
        for res in results:
            rep = res.report
            if rep.bound_theorem1 is None:
                continue
            m = _margin(rep.bound_theorem1, rep.total)
            worst = m if worst is None else min(worst, m)
            if not rep.pass_flags["theorem1"]:
                bad.append(res)
        checks.append(Check("theorem1.total_regret", not bad, _describe(n, bad, "theorem1"), worst))
    if "lemma2" in which:
        bad, worst, tested = [], None, 0
        for res in results:
            rep = res.report
            for m, b in enumerate(rep.bound_lemma2):
                if b is None:
                    continue
                tested += 1
                mg = _margin(b, rep.individual[m])
                worst = mg if worst is None else min(worst, mg)
            if not rep.pass_flags.get("lemma2", True):
                bad.append(res)
        checks.append(Check("lemma2.individual_regret", not bad, _describe(n, bad, "lemma2", tested), worst))
    if "lemma3" in which:
        bad, worst, tested = [], None, 0
        for res in results:
            rep = res.report
            for m, b in enumerate(rep.bound_lemma3):
                if b is None:
                    continue
                tested += 1
                mg = b - rep.subhorizons[m]
                worst = mg if worst is None else min(worst, mg)
            if not rep.pass_flags.get("lemma3", True):
                bad.append(res)
        checks.append(Check("lemma3.subhorizon", not bad, _describe(n, bad, "lemma3", tested), worst))
    if "exploration" in which:
        viol, phases_seen = [], 0
        for res in results:
            for m, phases in enumerate(res.phases or []):
                for ph in phases:
                    if ph.l < 1:
                        continue
                    phases_seen += 1
                    if not ph.accepted_explorations < 2 * 2 ** (2 ** (ph.l - 1)):
                        viol.append((res.spec.seed, m, ph.l, ph.accepted_explorations))
        detail = f"{phases_seen} phases, {len(viol)} with K_l >= 2*2^(2^(l-1))"
        checks.append(Check("exploration.count", not viol, detail))
    return checks


def _describe(n: int, bad: list, flag: str, tested: Optional[int] = None) -> str:
    head = f"{n} games" + ("" if tested is None else f", {tested} buyers tested")
    head += f", {len(bad)} violating games"
    if bad:
        s = bad[0].spec
        head += f", first: T={s.T} M={s.M} gamma0={s.gamma0} mode={s.modes[0]} seed={s.seed}"
    return head


SUITES = ("prop1", "lemma1", "lemma2", "lemma3", "theorem1", "mechanics", "all")


def run_suite(name: str, workers: Optional[int] = None, grid: Optional[list] = None) -> list:
    """Run one named suite (or ``all``) with its built-in grid."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    checks = []
    if name in ("mechanics", "all"):
        checks += mechanics_checks()
    if name in ("prop1", "all"):
        checks += prop1_checks()
    bound_suites = {"lemma1", "lemma2", "lemma3", "theorem1"}
    wanted = bound_suites if name == "all" else {name} & bound_suites
    if wanted:
        specs = grid if grid is not None else bound_grid(with_phases=name == "all")
        results = run_bound_grid(specs, workers)
        if name == "all":
            wanted = wanted | {"exploration"}
        checks += bound_checks(results, wanted)
    return checks
