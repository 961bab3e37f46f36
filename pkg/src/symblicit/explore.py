"""Phase 1: breadth-first search with predecessor counting.

Every reachable state is mapped, in one MTBDD, to the number of distinct
states other than itself that have a transition into it.  Unreachable codes
map to ``UNSEEN``, so the diagram also serves as the seen set.

Updates go through a small write buffer that is merged into the diagram
with :meth:`MtbddManager.update_many` once it holds ``batch`` entries at
the end of a state's expansion.

With ``merge_goals`` every transition into a goal state is redirected to
one representative goal state (see :meth:`AnalysisModel.merge_goal_targets`).
The distinct goal states are still recorded, in a second diagram of the
same manager, so that the size of the unmerged state space is known.
"""

from __future__ import annotations

import dataclasses as d
import logging
import time
from collections import deque
from typing import Optional

from .dd import UNSEEN, MtbddManager
from .errors import CapExceeded
from .model import AnalysisModel

__all__ = ["ExploreResult", "explore", "DEFAULT_MAX_STATES"]

log = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 2**40


@d.dataclass
class ExploreResult:
    manager: MtbddManager
    root: int
    states: int  # states of the (possibly goal-merged) chain
    transitions: int  # non-self edges of the reachable chain
    dd_nodes: int
    dd_nodes_peak: int
    seconds: float
    goal_root: int = 0
    goal_states: int = 0  # distinct goal states, counted only when merging
    merged: bool = False

    @property
    def model_states(self) -> int:
        """Reachable states of the goal-absorbed model before merging."""
        if not self.merged or self.goal_states == 0:
            return self.states
        return self.states - 1 + self.goal_states

    def count(self, s: int) -> object:
        return self.manager.lookup(self.root, s)


def explore(
    model: AnalysisModel,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    node_budget: Optional[int] = 4_000_000,
    batch: int = 1024,
    progress_every: int = 0,
    merge_goals: bool = False,
) -> ExploreResult:
    """Count the distinct non-self predecessors of every reachable state."""
    t0 = time.perf_counter()
    mgr = MtbddManager(model.nbits, node_budget)
    s_init = model.initial
    root = mgr.set_count(mgr.unseen, s_init, 0)
    pending: dict[int, int] = {}
    lookup = mgr.lookup
    agenda = deque([s_init])
    states = 1
    edges = 0
    expanded = 0
    peak_nodes = mgr.node_count(root)
    successors = model.successors
    merge = model.merge_goal_targets if merge_goals and model.goal is not None else None
    goal_root = mgr.unseen
    goal_states = 0
    if merge is not None and model.is_goal(s_init):
        model.goal_sink = s_init
    while agenda:
        s = agenda.popleft()
        succ = successors(s)
        if merge is not None:
            succ, hits = merge(succ)
            for g in hits:
                if lookup(goal_root, g) is UNSEEN:
                    goal_root = mgr.set_count(goal_root, g, 0)
                    goal_states += 1
        for t, _ in succ:
            if t == s:
                continue
            edges += 1
            c = pending.get(t)
            if c is None:
                c = lookup(root, t)
                if c is UNSEEN:
                    states += 1
                    if states > max_states:
                        raise CapExceeded(f"more than {max_states} reachable states")
                    agenda.append(t)
                    c = 0
            pending[t] = c + 1
        if len(pending) >= batch:
            root = mgr.update_many(root, pending)
            pending = {}
            if mgr.node_budget is not None and mgr.arena_size() > mgr.node_budget:
                peak_nodes = max(peak_nodes, mgr.node_count(root))
                root, goal_root = mgr.collect([root, goal_root])
        expanded += 1
        if progress_every and expanded % progress_every == 0:
            log.info(
                "explore: %d states expanded, %d seen, %d queued, arena %d",
                expanded, states, len(agenda), mgr.arena_size(),
            )
    root = mgr.update_many(root, pending)
    nodes = mgr.node_count(root)
    return ExploreResult(
        manager=mgr,
        root=root,
        states=states,
        transitions=edges,
        dd_nodes=nodes,
        dd_nodes_peak=max(peak_nodes, nodes),
        seconds=time.perf_counter() - t0,
        goal_root=goal_root,
        goal_states=goal_states,
        merged=merge is not None,
    )
