"""Memory-efficient analysis of Markov chains by interleaving exploration and state elimination.

A breadth-first pass counts, for every reachable state, its distinct
predecessors in a multi-terminal decision diagram.  A second pass explores
again and eliminates each state as soon as all of its predecessors have been
expanded, so only a small frontier is ever held explicitly.
"""

from .arith import FLOAT64, RATIONAL, Arith, get_arith
from .check import ENGINES, CheckResult, check, check_text
from .dd import UNSEEN, MtbddManager
from .elim import INFINITY, PartialChain, eliminate_state, explore_eliminate
from .errors import CapExceeded, EngineError, RangeExceeded
from .explore import ExploreResult, explore
from .lang import (
    EXP_REWARD,
    LONG_RUN_AVG,
    REACH_PROB,
    ModelError,
    ModelSyntaxError,
    load_model,
    parse_model,
    parse_property,
)
from .model import AnalysisModel, TableModel, absorb_goals, analysis_model, embed_ctmc
from .oracles import build_explicit, linear_solve, lra_solve, value_iteration

__all__ = [
    "Arith", "FLOAT64", "RATIONAL", "get_arith",
    "ENGINES", "CheckResult", "check", "check_text",
    "UNSEEN", "MtbddManager",
    "INFINITY", "PartialChain", "eliminate_state", "explore_eliminate",
    "CapExceeded", "EngineError", "RangeExceeded",
    "ExploreResult", "explore",
    "REACH_PROB", "EXP_REWARD", "LONG_RUN_AVG",
    "ModelError", "ModelSyntaxError", "load_model", "parse_model", "parse_property",
    "AnalysisModel", "TableModel", "absorb_goals", "analysis_model", "embed_ctmc",
    "build_explicit", "linear_solve", "lra_solve", "value_iteration",
    "bundled_model",
]


def bundled_model(name: str) -> str:
    """Source text of a model shipped with the package, e.g. ``"zeroconf"``."""
    from importlib import resources

    if not name.endswith(".pm"):
        name += ".pm"
    return (resources.files(__name__) / "models" / name).read_text()
