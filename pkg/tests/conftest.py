import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from symblicit import TableModel, bundled_model, load_model, parse_model, parse_property
from symblicit.arith import RATIONAL, get_arith
from symblicit.elim import PartialChain
from symblicit.model import analysis_model
from symblicit.oracles import build_explicit, solve_sparse

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

REACH = parse_property('P=? [ F "goal" ]')
REWARD = parse_property('R{"r"}=? [ F "goal" ]')
LRA = parse_property('R{"r"}=? [ S ]')


def random_table(seed, n, *, kind="dtmc", arith="rational", goal_rate=0.1,
                 deadlock_rate=0.03, loop_rate=0.1, jump_rate=0.15):
    """A random chain with mostly local edges and occasional long jumps.

    Locality keeps the fill-in of exact elimination moderate, which is what
    real models look like; the jumps create cycles through the start state.
    """
    rng = random.Random(seed)
    trans = {}
    for s in range(n):
        if rng.random() < deadlock_rate:
            continue
        row = {}
        for _ in range(rng.choice((1, 1, 2, 2, 3, 4))):
            if rng.random() < jump_rate:
                t = rng.randrange(n)
            else:
                t = rng.randint(max(0, s - 3), min(n - 1, s + 4))
            row[t] = row.get(t, 0) + rng.randint(1, 9)
        if rng.random() < loop_rate:
            row[s] = row.get(s, 0) + rng.randint(1, 9)
        if kind == "dtmc":
            total = sum(row.values())
            row = {t: Fraction(w, total) for t, w in row.items()}
        trans[s] = row
    goal = {s for s in range(n) if rng.random() < goal_rate}
    rewards = {s: rng.randint(0, 5) for s in range(n) if rng.random() < 0.7}
    return TableModel(
        trans, 0, kind=kind, rewards={"r": rewards}, labels={"goal": goal}, arith=arith
    )


@st.composite
def chains(draw, max_states=200, kind="dtmc", arith="rational"):
    n = draw(st.integers(1, max_states))
    seed = draw(st.integers(0, 2**32 - 1))
    goal_rate = draw(st.sampled_from((0.0, 0.05, 0.1, 0.3)))
    return random_table(seed, n, kind=kind, arith=arith, goal_rate=goal_rate)


def corpus(name, constants=None, arith="f64"):
    text = bundled_model(name)
    return load_model(text, constants, arith), parse_model(text)


@pytest.fixture
def zeroconf_rational():
    return corpus("zeroconf", arith="rational")[0]


def partial_chain(arith, initial, table, ru, rl=None, *, done=None, dual=False):
    """Hand-built live chain: ``table`` maps state -> {target: weight}.

    States missing from ``table`` but named as targets are added unexplored.
    """
    ar = get_arith(arith)
    conv = ar.convert
    chain = PartialChain(ar, initial, dual=dual)
    states = set(table) | {t for row in table.values() for t in row} | {initial}
    for s in sorted(states):
        chain.add_state(s)
    for s, row in table.items():
        rec = chain.records[s]
        rec.out = {t: conv(w) for t, w in row.items()}
        rec.ru = conv(ru.get(s, 0))
        rec.rl = conv((rl or {}).get(s, 1)) if dual else None
        rec.done = done is None or s in done
        for t in row:
            if t != s:
                chain.records[t].preds.add(s)
        chain.transitions += len(row)
    for s in states - set(table):
        chain.records[s].ru = ar.zero
        chain.records[s].rl = ar.one if dual else None
    chain.note_transitions()
    return chain


def exact_values(chain, goal):
    """Exact reachability probability and expected reward of every live state."""
    states = sorted(chain.records)
    can = {s for s in states if s in goal}
    frontier = list(can)
    while frontier:
        t = frontier.pop()
        for x in chain.records[t].preds:
            if x not in can:
                can.add(x)
                frontier.append(x)
    unknown = [s for s in states if s in can and s not in goal]
    pos = {s: k for k, s in enumerate(unknown)}
    rows, rhs = [], []
    for s in unknown:
        row = {pos[s]: RATIONAL.one}
        b = RATIONAL.zero
        for t, p in chain.records[s].out.items():
            if t in goal:
                b += p
            elif t in pos:
                row[pos[t]] = row.get(pos[t], 0) - p
        rows.append(row)
        rhs.append(b)
    x = solve_sparse(RATIONAL, rows, rhs)
    reach = {s: (1 if s in goal else x[pos[s]] if s in pos else 0) for s in states}
    sure = [s for s in states if reach[s] == 1 and s not in goal]
    pos = {s: k for k, s in enumerate(sure)}
    rows, rhs = [], []
    for s in sure:
        row = {pos[s]: RATIONAL.one}
        for t, p in chain.records[s].out.items():
            if t in pos:
                row[pos[t]] = row.get(pos[t], 0) - p
        rows.append(row)
        rhs.append(chain.records[s].ru)
    y = solve_sparse(RATIONAL, rows, rhs)
    reward = {s: y[pos[s]] for s in sure}
    return reach, reward


def full_partial_chain(tm, prop):
    """Every reachable state of ``tm`` as a fully explored live chain."""
    am = analysis_model(tm, prop)
    ex = build_explicit(am)
    table = {s: {ex.codes[j]: w for j, w in ex.rows[i]} for i, s in enumerate(ex.codes)}
    ru = dict(zip(ex.codes, ex.ru))
    goal = {s for s, g in zip(ex.codes, ex.goal) if g}
    return partial_chain("rational", tm.initial, table, ru), goal
