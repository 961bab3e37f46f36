"""One-call model checking with any engine, returning value and statistics."""

from __future__ import annotations

import dataclasses as d
import math
import resource
import sys
import time
from typing import Any, Mapping, Optional, TextIO, Union

from . import arith as _arith
from .elim import explore_eliminate, read_exp_reward, read_lra, read_reach_prob
from .explore import DEFAULT_MAX_STATES, explore
from .lang import (
    EXP_REWARD,
    LONG_RUN_AVG,
    REACH_PROB,
    CompiledModel,
    PropertySpec,
    load_model,
    parse_model,
    parse_property,
)
from .model import AnalysisModel, analysis_model
from .oracles import build_explicit, linear_solve, lra_solve, value_iteration

__all__ = ["ENGINES", "CheckResult", "check", "check_text", "render_value"]

ENGINES = ("symblicit", "vi", "linear")


@d.dataclass
class CheckResult:
    value: Any
    engine: str
    arith: str
    states_total: int = 0
    peak_states: int = 0
    peak_transitions: int = 0
    dd_nodes_peak: int = 0
    time_explore_ms: float = 0.0
    time_eliminate_ms: float = 0.0
    peak_mem_mb: Optional[float] = None
    deadlocks: int = 0

    @property
    def infinite(self) -> bool:
        return isinstance(self.value, float) and math.isinf(self.value)

    def render(self, ar: Optional[_arith.Arith] = None) -> str:
        return render_value(self.value, ar or _arith.get_arith(self.arith))


def render_value(value: Any, ar: _arith.Arith) -> str:
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return ar.render(value)


def peak_memory_mb() -> Optional[float]:
    try:
        kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    except (AttributeError, ValueError, OSError):
        return None
    scale = 1 / 1024 / 1024 if sys.platform == "darwin" else 1 / 1024
    return round(kb * scale, 1)


def check(
    model: Union[CompiledModel, Any],
    prop: PropertySpec,
    engine: str = "symblicit",
    *,
    epsilon: Any = 1e-10,
    max_states: int = DEFAULT_MAX_STATES,
    node_budget: Optional[int] = 4_000_000,
    trace: Optional[TextIO] = None,
    debug: bool = False,
    merge_goals: bool = True,
) -> CheckResult:
    """Evaluate ``prop`` on ``model`` with the selected engine."""
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")
    am = model if isinstance(model, AnalysisModel) else analysis_model(model, prop)
    ar = am.arith
    result = CheckResult(None, engine, ar.name)
    with ar.activate():
        if engine == "symblicit":
            pre = explore(
                am, max_states=max_states, node_budget=node_budget, merge_goals=merge_goals
            )
            result.time_explore_ms = pre.seconds * 1000
            chain = explore_eliminate(am, pre, debug=debug, trace=trace)
            result.time_eliminate_ms = chain.seconds * 1000
            if prop.kind == REACH_PROB:
                value = read_reach_prob(chain, am.goal or (lambda s: False))
            elif prop.kind == EXP_REWARD:
                value = read_exp_reward(chain, am.goal or (lambda s: False))
            else:
                value = read_lra(chain)
            result.states_total = pre.model_states
            result.peak_states = chain.peak_states
            result.peak_transitions = chain.peak_transitions
            result.dd_nodes_peak = pre.dd_nodes_peak
        else:
            t0 = time.perf_counter()
            cap = min(max_states, 5_000_000)
            chain = build_explicit(am, cap)
            t1 = time.perf_counter()
            if prop.kind == LONG_RUN_AVG:
                # value iteration has no long-run variant; both use the BSCC solver
                value = lra_solve(chain)
            elif engine == "vi":
                value = value_iteration(chain, prop, epsilon)
            else:
                value = linear_solve(chain, prop)
            result.time_explore_ms = (t1 - t0) * 1000
            result.time_eliminate_ms = (time.perf_counter() - t1) * 1000
            result.states_total = chain.size
            result.peak_states = chain.size
            result.peak_transitions = chain.transitions
    result.value = value
    result.deadlocks = getattr(am.model, "deadlocks", 0)
    result.peak_mem_mb = peak_memory_mb()
    return result


def check_text(
    model_text: str,
    prop_text: str,
    engine: str = "symblicit",
    arith: Union[str, _arith.Arith, None] = None,
    constants: Optional[Mapping[str, Any]] = None,
    **kwargs: Any,
) -> CheckResult:
    """Parse, compile and check in one step."""
    ast = parse_model(model_text)
    prop = parse_property(prop_text, ast)
    model = load_model(model_text, constants, arith)
    return check(model, prop, engine, **kwargs)
