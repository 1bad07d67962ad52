"""Regret measurement on game traces and the closed-form bounds it is
checked against.

Measured quantities are exact dyadics.  Bounds involve logarithms and are
floats; a measured value passes when it is at most ``bound + BOUND_SLACK``
(compared exactly after converting the float bound to a rational).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .auction import GameTrace, revenue
from .numerics import ZERO, Dyadic
from .prrfes import phase_log

__all__ = [
    "BOUND_SLACK",
    "UnsupportedTrace",
    "RegretReport",
    "strategic_regret",
    "decompose",
    "theorem1_bound",
    "lemma2_bound",
    "lemma3_bound",
    "within",
    "exploration_counts",
    "report_csv_header",
]

BOUND_SLACK = 1e-9


class UnsupportedTrace(ValueError):
    pass


def within(measured, bound: float, slack: float = BOUND_SLACK) -> bool:
    lhs = measured.as_fraction() if isinstance(measured, Dyadic) else Fraction(measured)
    return lhs <= Fraction(bound + slack)


def theorem1_bound(M: int, r: int, v_bar: float, T: int) -> float:
    """``M (r v_bar + 4)(log2 log2 T + 2) + (24 + 5r)(M - 1)``."""
    if T < 2:
        raise ValueError(f"the bound needs T >= 2, got {T}")
    return M * (r * v_bar + 4) * (math.log2(math.log2(T)) + 2) + (24 + 5 * r) * (M - 1)


def lemma2_bound(r: int, v: float, I: int) -> float:
    """Individual-regret bound ``(r v + 4)(log2 log2 I + 2)``, for ``I >= 2``."""
    if I < 2:
        raise ValueError(f"the individual bound needs a subhorizon >= 2, got {I}")
    return (r * v + 4) * (math.log2(math.log2(I)) + 2)


def lemma3_bound(r: int, v_bar: float, v: float) -> float:
    """Subhorizon bound ``(24 + 5r) / (v_bar - v)`` for a non-maximal buyer."""
    if not v < v_bar:
        raise ValueError(f"needs v < v_bar, got v={v}, v_bar={v_bar}")
    return (24 + 5 * r) / (v_bar - v)


def strategic_regret(trace: GameTrace, valuations: Sequence[Dyadic]) -> Dyadic:
    if len(valuations) != trace.M:
        raise ValueError(f"{len(valuations)} valuations for {trace.M} buyers")
    return max(valuations) * len(trace) - revenue(trace)


@dataclass
class RegretReport:
    total: Dyadic
    individual: list
    deviation: Dyadic
    subhorizons: list
    v_bar: Dyadic
    r: Optional[int] = None
    bound_theorem1: Optional[float] = None
    bound_lemma2: list = field(default_factory=list)
    bound_lemma3: list = field(default_factory=list)
    pass_flags: dict = field(default_factory=dict)

    @property
    def identity_holds(self) -> bool:
        return self.total == sum(self.individual, ZERO) + self.deviation

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def failures(self) -> list:
        return [name for name, ok in self.pass_flags.items() if not ok]


def decompose(trace: GameTrace, valuations: Sequence[Dyadic], r: Optional[int] = None) -> RegretReport:
    """Split the strategic regret into per-buyer and deviation parts.

    ``individual[m]`` sums ``v_m - a_m p_m`` over buyer ``m``'s active
    rounds (``a_m`` its participation flag, ``p_m`` its reserve);
    ``deviation`` is ``sum_m I_m (v_bar - v_m)``.  With ``r`` given, the
    bounds are evaluated and checked too.
    """
    M = trace.M
    if len(valuations) != M:
        raise ValueError(f"{len(valuations)} valuations for {M} buyers")
    v_bar = max(valuations)
    sub = [0] * M
    paid = [ZERO] * M
    for rec, w in trace.weighted():
        m = rec.active_buyer
        if m is None:
            raise UnsupportedTrace(f"round {rec.t} has no active buyer; not a dividing trace")
        sub[m] += w
        if rec.outcome.participation_flags[m]:
            paid[m] = paid[m] + rec.reserves[m] * w
    individual = [valuations[m] * sub[m] - paid[m] for m in range(M)]
    deviation = sum(((v_bar - valuations[m]) * sub[m] for m in range(M)), ZERO)
    report = RegretReport(
        total=strategic_regret(trace, valuations),
        individual=individual,
        deviation=deviation,
        subhorizons=sub,
        v_bar=v_bar,
        r=r,
    )
    report.pass_flags["lemma1_identity"] = report.identity_holds
    report.pass_flags["round_partition"] = sum(sub) == len(trace)
    if r is not None:
        _attach_bounds(report, valuations, len(trace))
    return report


def _attach_bounds(report: RegretReport, valuations: Sequence[Dyadic], T: int) -> None:
    r = report.r
    M = len(valuations)
    vb = float(report.v_bar)
    if T >= 2:
        report.bound_theorem1 = theorem1_bound(M, r, vb, T)
        report.pass_flags["theorem1"] = within(report.total, report.bound_theorem1)
    report.bound_lemma2 = []
    report.bound_lemma3 = []
    ok2, ok3 = True, True
    for m in range(M):
        I = report.subhorizons[m]
        if I >= 2:
            b = lemma2_bound(r, float(valuations[m]), I)
            ok2 &= within(report.individual[m], b)
        else:
            b = None
        report.bound_lemma2.append(b)
        if valuations[m] < report.v_bar:
            b3 = lemma3_bound(r, vb, float(valuations[m]))
            ok3 &= I <= b3 + BOUND_SLACK
        else:
            b3 = None
        report.bound_lemma3.append(b3)
    report.pass_flags["lemma2"] = ok2
    report.pass_flags["lemma3"] = ok3


def exploration_counts(trace: GameTrace, r: int) -> list:
    """Per buyer, the phase summaries obtained by replaying its active-round
    decisions through a fresh PRRFES machine."""
    return [phase_log(r, trace.decision_runs(m))[1] for m in range(trace.M)]


REPORT_COLUMNS = [
    "config_hash", "seed", "T", "M", "r", "gamma0", "mode", "valuations",
    "total", "individual_sum", "deviation", "subhorizons",
    "bound_theorem1", "bound_lemma2", "bound_lemma3",
    "lemma1_identity", "theorem1", "lemma2", "lemma3",
]


def report_csv_header() -> list:
    return list(REPORT_COLUMNS)


def report_row(report: RegretReport, *, config_hash: str, seed: int, T: int, M: int,
               r: int, gamma0: float, mode: str, valuations: Sequence[Dyadic]) -> list:
    def opt(x):
        return "" if x is None else repr(x)

    flags = report.pass_flags
    return [
        config_hash, seed, T, M, r, gamma0, mode,
        ";".join(str(v) for v in valuations),
        str(report.total),
        str(sum(report.individual, ZERO)),
        str(report.deviation),
        ";".join(str(i) for i in report.subhorizons),
        opt(report.bound_theorem1),
        ";".join(opt(b) for b in report.bound_lemma2),
        ";".join(opt(b) for b in report.bound_lemma3),
        int(flags.get("lemma1_identity", False)),
        int(flags.get("theorem1", True)),
        int(flags.get("lemma2", True)),
        int(flags.get("lemma3", True)),
    ]
