"""Phase 2: explicit exploration interleaved with state elimination.

The partial chain holds, for every state discovered so far, its current
outgoing distribution, its reward pair and its predecessors in the current
(rewired) graph.  As soon as a state and all of its original predecessors
are fully explored, it is eliminated: its transitions are merged into its
predecessors and, unless it is the initial state or has only a self-loop,
it is dropped.  Whether all original predecessors are explored is decided
by comparing the number explored so far with the count from phase 1.

When the exploration ends only the initial state, goal states and one
self-loop state per non-goal bottom SCC remain, and the value is read off
the initial state's transitions.
"""

from __future__ import annotations

import logging
import math
import sys
import time
from collections import deque
from typing import Any, Callable, Iterable, Optional, TextIO

from .dd import UNSEEN
from .errors import EngineError, RangeExceeded
from .explore import ExploreResult
from .model import AnalysisModel

__all__ = [
    "INFINITY",
    "StateRecord",
    "PartialChain",
    "eliminate_state",
    "explore_eliminate",
    "finalize",
    "read_reach_prob",
    "read_exp_reward",
    "read_lra",
]

log = logging.getLogger(__name__)

INFINITY = math.inf
TRACE_LIMIT = 50
FLOAT_SUM_TOL = 1e-6


class StateRecord:
    """Explicit data of one live state."""

    __slots__ = ("out", "ru", "rl", "preds", "npre", "done")

    def __init__(self, ru: Any = None, rl: Any = None):
        self.out: dict[int, Any] = {}
        self.ru = ru
        self.rl = rl
        self.preds: set[int] = set()  # current graph, without the state itself
        self.npre = 0  # fully explored predecessors in the original graph
        self.done = False

    def __repr__(self) -> str:
        return (
            f"StateRecord(out={self.out!r}, ru={self.ru!r}, rl={self.rl!r}, "
            f"preds={sorted(self.preds)!r}, npre={self.npre}, done={self.done})"
        )


class PartialChain:
    """Live states of the partial state space plus run statistics.

    ``debug`` turns on the invariant sweep after every elimination and the
    tombstone set that catches re-insertion of removed states.
    """

    def __init__(self, model_arith: Any, initial: int, *, dual: bool = False,
                 debug: bool = False, trace: Optional[TextIO] = None,
                 format_state: Callable[[int], str] = str):
        self.arith = model_arith
        self.initial = initial
        self.dual = dual
        self.records: dict[int, StateRecord] = {}
        self.transitions = 0
        self.peak_states = 0
        self.peak_transitions = 0
        self.eliminations = 0
        self.debug = debug
        self.tombstones: set[int] = set()
        self.trace = trace
        self.format_state = format_state
        self.expanded = 0
        self.seconds = 0.0

    # -- bookkeeping ------------------------------------------------------

    def add_state(self, s: int) -> StateRecord:
        if self.debug and s in self.tombstones:
            raise EngineError(f"state {self.format_state(s)} re-inserted after removal")
        rec = StateRecord()
        self.records[s] = rec
        n = len(self.records)
        if n > self.peak_states:
            self.peak_states = n
        return rec

    def note_transitions(self) -> None:
        if self.transitions > self.peak_transitions:
            self.peak_transitions = self.transitions

    def remove_state(self, s: int) -> None:
        rec = self.records.pop(s)
        for t in rec.out:
            if t != s:
                self.records[t].preds.discard(s)
        self.transitions -= len(rec.out)
        if self.debug:
            self.tombstones.add(s)

    def __contains__(self, s: int) -> bool:
        return s in self.records

    def __len__(self) -> int:
        return len(self.records)

    def record(self, s: int) -> StateRecord:
        return self.records[s]

    # -- checks and dumps -------------------------------------------------

    def check_invariants(self) -> None:
        """Raise ``EngineError`` if reverse adjacency or a distribution is off."""
        ar = self.arith
        exact = ar.name == "rational"
        expected: dict[int, set[int]] = {s: set() for s in self.records}
        count = 0
        for s, rec in self.records.items():
            count += len(rec.out)
            for t in rec.out:
                if t not in self.records:
                    raise EngineError(f"edge {s} -> {t} into a removed state")
                if t != s:
                    expected[t].add(s)
            if rec.done:
                total = ar.zero
                for w in rec.out.values():
                    total = total + w
                if exact:
                    ok = total == 1
                else:
                    ok = abs(float(total) - 1.0) <= FLOAT_SUM_TOL
                if not ok:
                    raise EngineError(
                        f"distribution of {self.format_state(s)} sums to {ar.render(total)}"
                    )
        for s, rec in self.records.items():
            if rec.preds != expected[s]:
                raise EngineError(f"predecessor set of {self.format_state(s)} is stale")
            if rec.done:
                for x in rec.preds:
                    if not self.records[x].done:
                        raise EngineError(
                            f"{self.format_state(s)} has an unexplored predecessor"
                        )
        if count != self.transitions:
            raise EngineError(f"transition counter {self.transitions} != {count}")

    def dump(self) -> str:
        """The live chain, one state per line, in the style of a worked example."""
        ar = self.arith
        lines = []
        for s in sorted(self.records):
            rec = self.records[s]
            mark = "*" if s == self.initial else " "
            mark += " " if rec.done else "?"
            succ = ", ".join(
                f"{self.format_state(t)} -> {ar.render(w)}" for t, w in rec.out.items()
            )
            rew = "" if rec.ru is None else f"  r_u={ar.render(rec.ru)}"
            if self.dual and rec.rl is not None:
                rew += f" r_l={ar.render(rec.rl)}"
            lines.append(f"{mark}{self.format_state(s)}: {{{succ}}}{rew}")
        return "\n".join(lines)


def eliminate_state(chain: PartialChain, s: int, keep: Iterable[int] = ()) -> bool:
    """Eliminate ``s``; returns ``True`` if it was removed from the chain.

    The self-loop of ``s`` (if it has other transitions as well) is spread
    over the remaining transitions and its expected repetitions are added to
    the rewards; then every predecessor takes over the transitions and the
    reward of ``s``, weighted by the probability of its edge into ``s``.
    """
    records = chain.records
    rec = records.get(s)
    if rec is None or not rec.done:
        raise EngineError(f"cannot eliminate {chain.format_state(s)}: not fully explored")
    out = rec.out
    dual = chain.dual
    loop = out.get(s)
    if loop is not None and len(out) > 1:
        # 1 - p_c is taken as the mass of the other edges: identical in exact
        # arithmetic and free of cancellation when p_c is close to one.
        rest = None
        for t, w in out.items():
            if t != s:
                rest = w if rest is None else rest + w
        del out[s]
        chain.transitions -= 1
        for t in out:
            out[t] = out[t] / rest
        factor = loop / rest
        rec.ru = rec.ru + rec.ru * factor
        if dual:
            rec.rl = rec.rl + rec.rl * factor
    ru, rl = rec.ru, rec.rl
    items = list(out.items())
    for x in list(rec.preds):
        xr = records[x]
        if chain.debug and not xr.done:
            raise EngineError(
                f"predecessor {chain.format_state(x)} of {chain.format_state(s)} "
                "is not fully explored"
            )
        xo = xr.out
        p = xo.pop(s)
        rec.preds.discard(x)
        added = -1
        for t, q in items:
            v = p * q
            old = xo.get(t)
            if old is None:
                xo[t] = v
                added += 1
                if t != x:
                    records[t].preds.add(x)
            else:
                xo[t] = old + v
        chain.transitions += added
        xr.ru = xr.ru + p * ru
        if dual:
            xr.rl = xr.rl + p * rl
    chain.note_transitions()
    chain.eliminations += 1
    removed = False
    if s not in keep and s not in out:
        chain.remove_state(s)
        removed = True
    if chain.debug:
        chain.check_invariants()
    if chain.trace is not None and len(records) <= TRACE_LIMIT:
        verb = "eliminated" if removed else "eliminated (kept)"
        chain.trace.write(f"-- {verb} {chain.format_state(s)}\n{chain.dump()}\n")
    return removed


def explore_eliminate(
    model: AnalysisModel,
    pre: ExploreResult,
    *,
    debug: bool = False,
    trace: Optional[TextIO] = None,
    progress_every: int = 0,
) -> PartialChain:
    """Second breadth-first pass, eliminating states as soon as they are eligible."""
    t0 = time.perf_counter()
    mgr, root = pre.manager, pre.root
    lookup = mgr.lookup
    s_init = model.initial
    keep = (s_init,)
    chain = PartialChain(
        model.arith, s_init, dual=model.dual, debug=debug, trace=trace,
        format_state=model.format_state,
    )
    records = chain.records
    chain.add_state(s_init)
    agenda = deque([s_init])
    expand = model.expand
    merge = model.merge_goal_targets if pre.merged else None
    dual = model.dual
    expanded = 0
    while agenda:
        s = agenda.popleft()
        rec = records[s]
        succ, ru, rl = expand(s)
        if merge is not None:
            succ = merge(succ)[0]
        rec.ru = ru
        rec.rl = rl if dual else None
        out = rec.out
        for t, w in succ:
            out[t] = w
            trec = records.get(t)
            if trec is None:
                if lookup(root, t) is UNSEEN:
                    raise EngineError(
                        f"state {model.format_state(t)} was not reached in phase 1"
                    )
                trec = chain.add_state(t)
                agenda.append(t)
            if t != s:
                trec.preds.add(s)
                trec.npre += 1
        chain.transitions += len(succ)
        chain.note_transitions()
        rec.done = True
        # candidates: s and its successors, provided they are fully explored
        cands = [t for t, _ in succ if t != s and records[t].done]
        cands.append(s)
        for e in cands:
            erec = records.get(e)
            if erec is None:
                continue
            target = lookup(root, e)
            if erec.npre == target:
                eliminate_state(chain, e, keep)
            elif erec.npre > target:
                raise EngineError(
                    f"state {model.format_state(e)} has more predecessors than counted"
                )
        expanded += 1
        if progress_every and expanded % progress_every == 0:
            log.info(
                "eliminate: %d states expanded, %d live, %d queued",
                expanded, len(records), len(agenda),
            )
    chain.seconds = time.perf_counter() - t0
    chain.expanded = expanded
    if expanded != pre.states:
        raise EngineError(
            f"phase 2 expanded {expanded} states, phase 1 counted {pre.states}"
        )
    return chain


def finalize(chain: PartialChain) -> StateRecord:
    """Spread a residual self-loop of the initial state over its other edges."""
    s = chain.initial
    rec = chain.records[s]
    loop = rec.out.get(s)
    if loop is not None and len(rec.out) > 1:
        rest = None
        for t, w in rec.out.items():
            if t != s:
                rest = w if rest is None else rest + w
        del rec.out[s]
        chain.transitions -= 1
        for t in rec.out:
            rec.out[t] = rec.out[t] / rest
        factor = loop / rest
        rec.ru = rec.ru + rec.ru * factor
        if chain.dual:
            rec.rl = rec.rl + rec.rl * factor
    return rec


def read_reach_prob(chain: PartialChain, goal: Callable[[int], bool]) -> Any:
    ar = chain.arith
    s = chain.initial
    if goal(s):
        return ar.one
    rec = finalize(chain)
    total = ar.zero
    for t, w in rec.out.items():
        if goal(t):
            total = total + w
    return total


def read_exp_reward(chain: PartialChain, goal: Callable[[int], bool]) -> Any:
    """Expected reward until the goal, or ``INFINITY`` if it is missed with positive probability."""
    ar = chain.arith
    s = chain.initial
    if goal(s):
        return ar.zero
    rec = finalize(chain)
    if any(not goal(t) for t in rec.out):
        return INFINITY
    total = rec.ru
    for t, w in rec.out.items():
        total = total + w * chain.records[t].ru
    return _finite(ar, total)


def read_lra(chain: PartialChain) -> Any:
    """Long-run average from the two reward structures of the survivors."""
    ar = chain.arith
    s = chain.initial
    rec = finalize(chain)
    if set(rec.out) == {s}:
        return _ratio(ar, rec.ru, rec.rl, chain.format_state(s))
    total = ar.zero
    for t, w in rec.out.items():
        trec = chain.records[t]
        if set(trec.out) != {t}:
            raise EngineError(f"survivor {chain.format_state(t)} is not absorbing")
        total = total + w * _ratio(ar, trec.ru, trec.rl, chain.format_state(t))
    return total


def _ratio(ar: Any, u: Any, l: Any, where: str) -> Any:
    _finite(ar, u)
    _finite(ar, l)
    if l == 0:
        raise EngineError(f"zero expected recurrence time in {where}")
    return u / l


def _finite(ar: Any, v: Any) -> Any:
    # Recurrence rewards grow with expected return times and can leave the
    # binary64 range long before the quotient does.
    if v != v or v == INFINITY or v == -INFINITY:
        raise RangeExceeded(
            f"intermediate value {ar.render(v)} is outside the range of {ar.name}; "
            "retry with --arith bigfloat"
        )
    return v


def print_trace(chain: PartialChain, stream: TextIO = sys.stderr) -> None:
    stream.write(chain.dump() + "\n")
