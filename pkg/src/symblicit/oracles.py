"""Reference engines on a fully built explicit chain.

These are deliberately conventional: breadth-first materialisation, graph
precomputation of the probability-0 and probability-1 states, Gauss-Seidel
value iteration, direct linear solves, and a bottom-SCC decomposition for
long-run averages.  They share no code with the elimination engine beyond
:class:`~symblicit.model.AnalysisModel`.
"""

from __future__ import annotations

import dataclasses as d
import math
from collections import deque
from typing import Any, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import arith as _arith
from .errors import CapExceeded, EngineError
from .lang import EXP_REWARD, LONG_RUN_AVG, REACH_PROB, PropertySpec
from .model import AnalysisModel

__all__ = [
    "ExplicitChain",
    "build_explicit",
    "prob0",
    "prob1",
    "value_iteration",
    "jacobi_iterates",
    "linear_solve",
    "lra_solve",
    "bottom_sccs",
    "solve_sparse",
    "DEFAULT_EXPLICIT_CAP",
]

DEFAULT_EXPLICIT_CAP = 5_000_000
INFINITY = math.inf


@d.dataclass
class ExplicitChain:
    """Dense indexing of the reachable states; index 0 is the initial state."""

    arith: _arith.Arith
    codes: list[int]
    index: dict[int, int]
    rows: list[list[tuple[int, Any]]]
    ru: list[Any]
    rl: list[Any]
    goal: list[bool]

    @property
    def size(self) -> int:
        return len(self.codes)

    @property
    def transitions(self) -> int:
        return sum(len(r) for r in self.rows)

    def predecessors(self) -> list[list[int]]:
        pre: list[list[int]] = [[] for _ in self.codes]
        for i, row in enumerate(self.rows):
            for j, _ in row:
                pre[j].append(i)
        return pre


def build_explicit(model: AnalysisModel, cap: int = DEFAULT_EXPLICIT_CAP) -> ExplicitChain:
    """Breadth-first materialisation of the reachable part of ``model``."""
    codes = [model.initial]
    index = {model.initial: 0}
    rows: list[list[tuple[int, Any]]] = []
    ru: list[Any] = []
    rl: list[Any] = []
    goal: list[bool] = []
    i = 0
    while i < len(codes):
        s = codes[i]
        succ, u, l = model.expand(s)
        row = []
        for t, w in succ:
            j = index.get(t)
            if j is None:
                j = len(codes)
                if j >= cap:
                    raise CapExceeded(f"more than {cap} reachable states")
                index[t] = j
                codes.append(t)
            row.append((j, w))
        rows.append(row)
        ru.append(u)
        rl.append(l)
        goal.append(model.is_goal(s))
        i += 1
    return ExplicitChain(model.arith, codes, index, rows, ru, rl, goal)


# -- graph analysis -----------------------------------------------------------


def _backward(pre: list[list[int]], start: Sequence[int], through) -> set[int]:
    seen = set(start)
    queue = deque(start)
    while queue:
        j = queue.popleft()
        for i in pre[j]:
            if i not in seen and through(i):
                seen.add(i)
                queue.append(i)
    return seen


def prob0(chain: ExplicitChain, pre: Optional[list[list[int]]] = None) -> set[int]:
    """States that cannot reach a goal state."""
    pre = pre or chain.predecessors()
    goals = [i for i, g in enumerate(chain.goal) if g]
    can = _backward(pre, goals, lambda i: not chain.goal[i])
    return set(range(chain.size)) - can


def prob1(chain: ExplicitChain, pre: Optional[list[list[int]]] = None) -> set[int]:
    """States that reach a goal state with probability one."""
    pre = pre or chain.predecessors()
    zero = prob0(chain, pre)
    bad = _backward(pre, sorted(zero), lambda i: not chain.goal[i])
    return set(range(chain.size)) - bad


# -- value iteration ----------------------------------------------------------


def _check_kind(prop: PropertySpec, allowed: Sequence[str]) -> None:
    if prop.kind not in allowed:
        raise EngineError(f"{prop.kind} is not supported by this engine")


def value_iteration(
    chain: ExplicitChain,
    prop: PropertySpec,
    epsilon: Any = 1e-10,
    max_iterations: int = 1_000_000,
) -> Any:
    """Gauss-Seidel value iteration; returns the value of the initial state.

    Iteration stops once no state changes by ``epsilon`` or more in a sweep.
    For expected rewards the states reaching the goal with probability below
    one are found by graph analysis first; if the initial state is one of
    them the result is ``inf``.
    """
    _check_kind(prop, (REACH_PROB, EXP_REWARD))
    ar = chain.arith
    eps = ar.convert(epsilon)
    pre = chain.predecessors()
    n = chain.size
    if prop.kind == REACH_PROB:
        zero = prob0(chain, pre)
        fixed = {i: (ar.one if chain.goal[i] else ar.zero) for i in range(n)
                 if chain.goal[i] or i in zero}
        reward = None
    else:
        good = prob1(chain, pre)
        if 0 not in good:
            return INFINITY
        fixed = {i: ar.zero for i in range(n) if chain.goal[i]}
        reward = chain.ru
    x = [fixed.get(i, ar.zero) for i in range(n)]
    # Sweep in reverse breadth-first order so values flow towards the start.
    order = [i for i in range(n - 1, -1, -1) if i not in fixed]
    if prop.kind == EXP_REWARD:
        order = [i for i in order if i in good]
    rows = chain.rows
    with ar.activate():
        for _ in range(max_iterations):
            delta = ar.zero
            for i in order:
                v = reward[i] if reward is not None else ar.zero
                for j, p in rows[i]:
                    v = v + p * x[j]
                diff = v - x[i]
                if diff < 0:
                    diff = -diff
                if diff > delta:
                    delta = diff
                x[i] = v
            if delta < eps:
                return x[0]
    raise EngineError(f"value iteration did not converge in {max_iterations} sweeps")


def jacobi_iterates(chain: ExplicitChain, prop: PropertySpec, sweeps: int) -> list[Any]:
    """Vector after ``sweeps`` Jacobi steps of reachability iteration.

    Starts from 1 on goal states and 0 elsewhere; goal states keep value 1.
    """
    _check_kind(prop, (REACH_PROB,))
    ar = chain.arith
    x = [ar.one if g else ar.zero for g in chain.goal]
    for _ in range(sweeps):
        y = list(x)
        for i, row in enumerate(chain.rows):
            if chain.goal[i]:
                continue
            v = ar.zero
            for j, p in row:
                v = v + p * x[j]
            y[i] = v
        x = y
    return x


# -- direct solvers -----------------------------------------------------------


def solve_sparse(ar: _arith.Arith, rows: list[dict[int, Any]], rhs: list[Any]) -> list[Any]:
    """Solve ``M x = rhs`` with ``M`` given as sparse rows.

    Binary64 uses SciPy's sparse LU.  Other backends use sparse Gaussian
    elimination with diagonal pivots in row order, which is stable for the
    M-matrices arising here and exact for rationals.
    """
    n = len(rows)
    if n == 0:
        return []
    if ar.type is float:
        data, ri, ci = [], [], []
        for i, row in enumerate(rows):
            for j, v in row.items():
                ri.append(i)
                ci.append(j)
                data.append(float(v))
        m = sp.csc_matrix((data, (ri, ci)), shape=(n, n))
        b = np.array([float(v) for v in rhs])
        if n == 1:
            if m[0, 0] == 0:
                raise EngineError("singular linear system")
            return [float(b[0] / m[0, 0])]
        x = spla.spsolve(m, b)
        if not np.all(np.isfinite(x)):
            raise EngineError("singular linear system")
        return [float(v) for v in x]
    with ar.activate():
        return _gauss(ar, rows, rhs)


def _gauss(ar: _arith.Arith, rows: list[dict[int, Any]], rhs: list[Any]) -> list[Any]:
    n = len(rows)
    m = [dict(r) for r in rows]
    b = list(rhs)
    # column k -> rows below the diagonal that still have an entry in k
    cols: list[set[int]] = [set() for _ in range(n)]
    for i, row in enumerate(m):
        for j in row:
            if j < i:
                cols[j].add(i)
    for k in range(n):
        piv = m[k].get(k)
        if piv is None or piv == 0:
            raise EngineError("singular linear system")
        prow = m[k]
        for i in cols[k]:
            row = m[i]
            f = row.pop(k) / piv
            for j, v in prow.items():
                if j == k:
                    continue
                old = row.get(j)
                nv = -(f * v) if old is None else old - f * v
                if nv == 0:
                    row.pop(j, None)
                    if j < i:
                        cols[j].discard(i)
                else:
                    row[j] = nv
                    if j < i and old is None:
                        cols[j].add(i)
            b[i] = b[i] - f * b[k]
        cols[k] = set()
    x = [ar.zero] * n
    for k in range(n - 1, -1, -1):
        v = b[k]
        for j, a in m[k].items():
            if j > k:
                v = v - a * x[j]
        x[k] = v / m[k][k]
    return x


def _transient_system(chain: ExplicitChain, unknown: list[int]):
    pos = {i: k for k, i in enumerate(unknown)}
    ar = chain.arith
    rows: list[dict[int, Any]] = []
    for i in unknown:
        row: dict[int, Any] = {pos[i]: ar.one}
        for j, p in chain.rows[i]:
            k = pos.get(j)
            if k is not None:
                row[k] = row[k] - p if k in row else -p
        rows.append(row)
    return pos, rows


def linear_solve(chain: ExplicitChain, prop: PropertySpec) -> Any:
    """Value of the initial state from the standard linear equation system."""
    _check_kind(prop, (REACH_PROB, EXP_REWARD))
    ar = chain.arith
    pre = chain.predecessors()
    if chain.goal[0]:
        return ar.one if prop.kind == REACH_PROB else ar.zero
    if prop.kind == REACH_PROB:
        zero = prob0(chain, pre)
        if 0 in zero:
            return ar.zero
        unknown = [i for i in range(chain.size) if not chain.goal[i] and i not in zero]
        rhs = []
        for i in unknown:
            v = ar.zero
            for j, p in chain.rows[i]:
                if chain.goal[j]:
                    v = v + p
            rhs.append(v)
    else:
        good = prob1(chain, pre)
        if 0 not in good:
            return INFINITY
        unknown = [i for i in range(chain.size) if not chain.goal[i] and i in good]
        rhs = [chain.ru[i] for i in unknown]
    pos, rows = _transient_system(chain, unknown)
    x = solve_sparse(ar, rows, rhs)
    return x[pos[0]]


# -- long-run averages --------------------------------------------------------


def bottom_sccs(chain: ExplicitChain) -> list[list[int]]:
    """Bottom strongly connected components (iterative Tarjan)."""
    n = chain.size
    succ = [[j for j, _ in row] for row in chain.rows]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            if k < len(succ[v]):
                work[-1] = (v, k + 1)
                w = succ[v][k]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                members = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = len(sccs)
                    members.append(w)
                    if w == v:
                        break
                sccs.append(members)
    bottom = []
    for c, members in enumerate(sccs):
        if all(comp[j] == c for i in members for j in succ[i]):
            bottom.append(sorted(members))
    return bottom


def _bscc_average(chain: ExplicitChain, members: list[int]) -> Any:
    """Ratio of the two reward structures under the BSCC's stationary distribution.

    The stationary vector is proportional to the expected number of visits
    to each member between two visits of the first member.
    """
    ar = chain.arith
    ref = members[0]
    others = members[1:]
    pos = {i: k for k, i in enumerate(others)}
    # v(t) = P(ref, t) + sum_u v(u) P(u, t)  for t != ref, i.e. (I - P^T) v = P(ref, .)
    rows: list[dict[int, Any]] = [{k: ar.one} for k in range(len(others))]
    rhs = [ar.zero] * len(others)
    for u in others:
        ku = pos[u]
        for t, p in chain.rows[u]:
            kt = pos.get(t)
            if kt is not None:
                row = rows[kt]
                row[ku] = row[ku] - p if ku in row else -p
    for t, p in chain.rows[ref]:
        kt = pos.get(t)
        if kt is not None:
            rhs[kt] = rhs[kt] + p
    visits = solve_sparse(ar, rows, rhs)
    with ar.activate():
        num = chain.ru[ref]
        den = chain.rl[ref]
        for u, v in zip(others, visits):
            num = num + v * chain.ru[u]
            den = den + v * chain.rl[u]
        if den == 0:
            raise EngineError("zero expected recurrence time")
        return num / den


def lra_solve(chain: ExplicitChain) -> Any:
    """Long-run average reward of the initial state."""
    ar = chain.arith
    bsccs = bottom_sccs(chain)
    value = {}
    for members in bsccs:
        avg = _bscc_average(chain, members)
        for i in members:
            value[i] = avg
    if 0 in value:
        return value[0]
    unknown = [i for i in range(chain.size) if i not in value]
    pos, rows = _transient_system(chain, unknown)
    rhs = []
    with ar.activate():
        for i in unknown:
            v = ar.zero
            for j, p in chain.rows[i]:
                if j in value:
                    v = v + p * value[j]
            rhs.append(v)
    x = solve_sparse(ar, rows, rhs)
    return x[pos[0]]
