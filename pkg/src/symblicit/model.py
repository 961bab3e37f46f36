"""Analysis view of a model: goal absorption, CTMC embedding and reward pairs.

Both exploration phases and the oracles see a model only through
:class:`AnalysisModel`, whose :meth:`~AnalysisModel.expand` returns the
effective distribution ``P'(s)`` together with the reward pair
``(r_u(s), r_l(s))``:

* goal states are absorbing with reward zero,
* a CTMC is replaced by its embedded DTMC, rates divided by the exit rate
  ``Q(s)``, ``r_u = R/Q`` and ``r_l = 1/Q``,
* for a DTMC ``r_l`` is one (one time unit per step).

:class:`TableModel` is a small explicit chain with the same interface as a
compiled model, used by tests, demos and random instances.
"""

from __future__ import annotations

from typing import Any, Callable, Iterable, Mapping, Optional, Union

from . import arith as _arith
from .lang import EXP_REWARD, LONG_RUN_AVG, REACH_PROB, ModelError, PropertySpec

__all__ = ["AnalysisModel", "TableModel", "absorb_goals", "embed_ctmc", "analysis_model"]

Dist = list[tuple[int, Any]]


class TableModel:
    """Explicit chain given as ``{state: {target: weight}}``.

    States are non-negative integers that double as state codes.  ``kind``
    is ``"dtmc"`` (weights are probabilities) or ``"ctmc"`` (rates).  Rewards
    are dicts ``name -> {state: value}`` (missing states get 0) and labels
    are ``name -> set of states``.
    """

    def __init__(
        self,
        transitions: Mapping[int, Mapping[int, Any]],
        initial: int = 0,
        *,
        kind: str = "dtmc",
        rewards: Optional[Mapping[str, Mapping[int, Any]]] = None,
        labels: Optional[Mapping[str, Iterable[int]]] = None,
        arith: Union[str, _arith.Arith, None] = None,
    ):
        if kind not in ("dtmc", "ctmc"):
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.arith = _arith.get_arith(arith)
        conv = self.arith.convert
        self.transitions = {
            s: [(t, conv(w)) for t, w in row.items() if w != 0]
            for s, row in transitions.items()
        }
        self.initial = initial
        states = set(self.transitions) | {initial}
        for row in self.transitions.values():
            states.update(t for t, _ in row)
        self.nbits = max(states).bit_length() if states else 0
        self.rewards = {
            name: {s: conv(v) for s, v in table.items()}
            for name, table in (rewards or {}).items()
        }
        self.labels = {name: frozenset(v) for name, v in (labels or {}).items()}
        self.deadlocks = 0

    def successors(self, s: int) -> Dist:
        row = self.transitions.get(s)
        if not row:
            self.deadlocks += 1
            return [(s, self.arith.one)]
        return list(row)

    def exit_rate(self, s: int) -> Any:
        total = self.arith.zero
        for _, w in self.successors(s):
            total = total + w
        return total

    def reward_function(self, name: Optional[str]) -> Callable[[int], Any]:
        if name is None:
            if not self.rewards:
                raise ModelError("the model has no reward structure")
            name = next(iter(self.rewards))
        if name not in self.rewards:
            raise ModelError(f"unknown reward structure {name!r}")
        table, zero = self.rewards[name], self.arith.zero
        return lambda s: table.get(s, zero)

    def predicate(self, target: Any) -> Callable[[int], bool]:
        if isinstance(target, str):
            if target not in self.labels:
                raise ModelError(f"unknown label {target!r}")
            return self.labels[target].__contains__
        if callable(target):
            return target
        members = frozenset(target)
        return members.__contains__

    def format_state(self, s: int) -> str:
        return str(s)


class AnalysisModel:
    """Effective chain ``P'`` with rewards ``(r_u, r_l)`` for one property.

    ``goal`` is a state predicate or ``None``; ``reward`` a state reward
    function or ``None`` (all rewards zero).  ``embedded`` selects division
    by the exit rate, used for CTMCs.
    """

    def __init__(
        self,
        model: Any,
        prop: Optional[PropertySpec] = None,
        *,
        goal: Optional[Callable[[int], bool]] = None,
        reward: Optional[Callable[[int], Any]] = None,
        embedded: bool = False,
    ):
        self.model = model
        self.prop = prop
        self.arith: _arith.Arith = model.arith
        self.initial: int = model.initial
        self.nbits: int = model.nbits
        self.goal = goal
        self.reward = reward
        self.embedded = embedded
        self.dual = prop is not None and prop.kind == LONG_RUN_AVG
        self.goal_sink: Optional[int] = None

    @property
    def kind(self) -> str:
        return self.model.kind

    def is_goal(self, s: int) -> bool:
        return self.goal is not None and self.goal(s)

    def expand(self, s: int) -> tuple[Dist, Any, Any]:
        """``(P'(s), r_u(s), r_l(s))`` with goal states made absorbing."""
        ar = self.arith
        if self.goal is not None and self.goal(s):
            return [(s, ar.one)], ar.zero, ar.one
        succ = self.model.successors(s)
        rew = self.reward(s) if self.reward is not None else ar.zero
        if not self.embedded:
            return succ, rew, ar.one
        q = ar.zero
        for _, w in succ:
            q = q + w
        if q == 1:
            return succ, rew, ar.one
        return [(t, w / q) for t, w in succ], rew / q, ar.one / q

    def successors(self, s: int) -> Dist:
        return self.expand(s)[0]

    def merge_goal_targets(self, succ: Dist) -> tuple[Dist, list[int]]:
        """Redirect transitions into goal states to one representative goal.

        The representative is the first goal state ever passed in.  Returns
        the merged distribution and the original goal targets.
        """
        goal = self.goal
        if goal is None:
            return succ, []
        hits = [t for t, _ in succ if goal(t)]
        if not hits:
            return succ, hits
        if self.goal_sink is None:
            self.goal_sink = hits[0]
        sink = self.goal_sink
        if len(hits) == 1 and hits[0] == sink:
            return succ, hits
        out: dict[int, Any] = {}
        for t, w in succ:
            if t in hits:
                t = sink
            out[t] = out[t] + w if t in out else w
        return list(out.items()), hits

    def format_state(self, s: int) -> str:
        return self.model.format_state(s)


def _goal_predicate(model: Any, prop: PropertySpec) -> Optional[Callable[[int], bool]]:
    if prop.goal is None:
        return None
    for name, expr in prop.labels:
        if name == prop.goal:
            return model.predicate(expr)
    return model.predicate(prop.goal)


def absorb_goals(model: Any, goal: Any) -> AnalysisModel:
    """Make every state satisfying ``goal`` absorbing with reward zero.

    ``goal`` is a label name, a predicate, a set of states, or an existing
    :class:`AnalysisModel`'s goal (idempotent when given an AnalysisModel).
    """
    if isinstance(model, AnalysisModel):
        pred = _as_predicate(model.model, goal)
        if model.goal is None:
            combined = pred
        else:
            old = model.goal
            combined = lambda s: old(s) or pred(s)  # noqa: E731
        return AnalysisModel(
            model.model, model.prop, goal=combined, reward=model.reward,
            embedded=model.embedded,
        )
    return AnalysisModel(model, None, goal=_as_predicate(model, goal))


def _as_predicate(model: Any, goal: Any) -> Callable[[int], bool]:
    if callable(goal):
        return goal
    if isinstance(goal, str):
        return model.predicate(goal)
    members = frozenset(goal)
    return members.__contains__


def embed_ctmc(model: Any, prop: PropertySpec) -> AnalysisModel:
    """Embedded-DTMC view of a CTMC for ``prop`` (identity for a DTMC)."""
    reward = None
    if prop.kind in (EXP_REWARD, LONG_RUN_AVG):
        reward = model.reward_function(prop.reward)
    return AnalysisModel(
        model, prop, goal=None, reward=reward, embedded=model.kind == "ctmc"
    )


def analysis_model(model: Any, prop: PropertySpec) -> AnalysisModel:
    """The model every engine analyses for ``prop``: embedded, goals absorbed."""
    if prop.kind not in (REACH_PROB, EXP_REWARD, LONG_RUN_AVG):
        raise ModelError(f"unsupported property kind {prop.kind!r}")
    am = embed_ctmc(model, prop)
    if prop.kind != LONG_RUN_AVG:
        am.goal = _goal_predicate(model, prop)
    return am

