"""Single-buyer posted-price algorithms as lazily walked binary trees.

An algorithm state is an immutable value with ``price()`` and
``step(accepted)``; ``step`` returns the child state (right child on
accept, left child on reject).  Trees are never materialized: the
validators below walk decision paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Sequence, runtime_checkable

from .numerics import ONE, Dyadic

__all__ = [
    "RppaAlgorithm",
    "ConsistencyResult",
    "UnsupportedAlgorithm",
    "verify_right_consistent",
    "reinforce",
    "Reinforced",
    "left_increment",
    "replay",
    "price_sequence",
]

MAX_VERIFY_DEPTH = 22


class UnsupportedAlgorithm(TypeError):
    pass


@runtime_checkable
class RppaAlgorithm(Protocol):
    def price(self) -> Dyadic: ...

    def step(self, accepted: bool) -> "RppaAlgorithm": ...


@dataclass(frozen=True)
class ConsistencyResult:
    ok: bool
    violating_path: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def replay(algo, path: Iterable[bool]):
    for a in path:
        algo = algo.step(bool(a))
    return algo


def price_sequence(algo, path: Sequence[bool]) -> list:
    """Prices offered along ``path``; one more than ``len(path)``."""
    prices = [algo.price()]
    for a in path:
        algo = algo.step(bool(a))
        prices.append(algo.price())
    return prices


def verify_right_consistent(algo, depth: int, accept_cap: Optional[Dyadic] = None) -> ConsistencyResult:
    """Check that no offered price drops below the highest accepted one.

    Walks all ``2**depth`` decision paths.  With ``accept_cap`` set, accept
    branches are only followed at prices ``<= accept_cap`` (buyers with
    valuations in ``[0, cap]`` never take the others without a loss).
    """
    if not 1 <= depth <= MAX_VERIFY_DEPTH:
        raise ValueError(f"depth must be in [1, {MAX_VERIFY_DEPTH}], got {depth}")
    stack = [(algo, None, ())]
    while stack:
        node, best, path = stack.pop()
        p = node.price()
        if best is not None and p < best:
            return ConsistencyResult(False, path)
        if len(path) == depth:
            continue
        stack.append((node.step(False), best, path + (False,)))
        if accept_cap is None or p <= accept_cap:
            stack.append((node.step(True), p if best is None or p > best else best, path + (True,)))
    return ConsistencyResult(True)


@dataclass(frozen=True, slots=True)
class Reinforced:
    """``<algo>``: positions 2..r of every penalization sequence offer 1,
    and accepting such a reinforced price pins the price at 1 forever."""

    inner: object
    absorbed: bool = False

    def _reinforced_here(self) -> bool:
        info = self.inner.penalization_info()
        return info is not None and info[0] >= 2 and info[1] >= 2

    def price(self) -> Dyadic:
        if self.absorbed or self._reinforced_here():
            return ONE
        return self.inner.price()

    def step(self, accepted: bool) -> "Reinforced":
        if self.absorbed:
            return self
        if self._reinforced_here():
            if accepted:
                return Reinforced(self.inner, True)
            return Reinforced(self.inner.step(False))
        return Reinforced(self.inner.step(accepted))

    def penalization_info(self):
        return None if self.absorbed else self.inner.penalization_info()


def reinforce(algo) -> Reinforced:
    if not hasattr(algo, "penalization_info"):
        raise UnsupportedAlgorithm(f"{type(algo).__name__} exposes no penalization metadata")
    return Reinforced(algo)


def left_increment(algo, path: Sequence[bool] = (), depth: int = 12) -> Dyadic:
    """``p(node) - inf`` of prices in the node's left subtree.

    States that know their left increment analytically (``left_increment``
    method returning a value) short-circuit the search; otherwise the left
    subtree is explored ``depth`` levels deep, which can only overstate
    the increment.
    """
    node = replay(algo, path)
    exact = getattr(node, "left_increment", None)
    if exact is not None:
        value = exact()
        if value is not None:
            return value
    p = node.price()
    low = None
    frontier = [node.step(False)]
    for _ in range(depth):
        nxt = []
        for n in frontier:
            q = n.price()
            if low is None or q < low:
                low = q
            nxt.append(n.step(False))
            nxt.append(n.step(True))
        frontier = nxt
    return p - low
