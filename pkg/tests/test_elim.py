import io
import math
import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    REACH, REWARD, corpus, exact_values, full_partial_chain, partial_chain, random_table,
)
from symblicit import check, explore, explore_eliminate
from symblicit.elim import eliminate_state, read_exp_reward, read_lra, read_reach_prob
from symblicit.errors import EngineError
from symblicit.lang import parse_property
from symblicit.model import analysis_model

q = gmpy2.mpq
# zeroconf numbering used throughout: 1..4 probes, then i, ok, bot
I, OK, BOT = 5, 6, 7


def test_eliminating_last_probe_creates_self_loop():
    chain = partial_chain(
        "rational", I,
        {I: {OK: q(7, 8), 4: q(1, 8)}, 4: {3: q(1, 5), I: q(4, 5)}, OK: {OK: 1}},
        {I: 1},
        done={I, 4, OK},
    )
    assert eliminate_state(chain, 4, keep=(I,))
    assert chain.records[I].out == {OK: q(7, 8), 3: q(1, 40), I: q(1, 10)}
    assert chain.records[I].ru == 1
    assert 4 not in chain
    assert chain.records[3].preds == {I}


def zeroconf_after_first_step(arith):
    return partial_chain(
        arith, I,
        {
            I: {OK: Fraction(875, 1000), 1: Fraction(1, 1000), I: Fraction(124, 1000)},
            1: {BOT: Fraction(1, 5), I: Fraction(4, 5)},
            OK: {OK: 1},
        },
        {I: 1},
        done={I, 1, OK},
    )


def test_eliminating_kept_initial_state_exact():
    chain = zeroconf_after_first_step("rational")
    removed = eliminate_state(chain, I, keep=(I,))
    assert not removed
    assert chain.records[I].out == {OK: q(875, 876), 1: q(1, 876)}
    assert chain.records[I].ru == q(250, 219)
    assert chain.records[1].out == {BOT: q(1, 5), OK: q(175, 219), 1: q(1, 1095)}
    assert chain.records[1].ru == q(200, 219)
    assert chain.records[I].preds == set()
    assert chain.records[1].preds == {I}
    chain.check_invariants()


def test_eliminating_kept_initial_state_float():
    chain = zeroconf_after_first_step("f64")
    eliminate_state(chain, I, keep=(I,))
    ru1 = chain.records[1].ru
    assert abs(ru1 - 200 / 219) <= 2 * math.ulp(200 / 219)
    out = chain.records[1].out
    assert math.isclose(out[OK], 175 / 219, rel_tol=1e-15)
    assert math.isclose(out[1], 1 / 1095, rel_tol=1e-15)


def test_unexplored_predecessor_is_refused():
    chain = partial_chain("rational", 0, {0: {1: 1}, 1: {0: 1}}, {}, done={1})
    with pytest.raises(EngineError):
        eliminate_state(chain, 0)
    chain.debug = True
    with pytest.raises(EngineError, match="not fully explored"):
        eliminate_state(chain, 1)


# -- long-run average readout ---------------------------------------------------


def test_lra_two_absorbing_successors():
    chain = partial_chain(
        "rational", 0,
        {0: {1: q(1, 2), 2: q(1, 2)}, 1: {1: 1}, 2: {2: 1}},
        {0: 0, 1: 4, 2: 6}, {0: 1, 1: 2, 2: 3}, dual=True,
    )
    assert read_lra(chain) == 2


def test_lra_single_state():
    chain = partial_chain("rational", 0, {0: {0: 1}}, {0: 7}, {0: 1}, dual=True)
    assert read_lra(chain) == 7


def test_lra_residual_self_loop_is_spread():
    chain = partial_chain(
        "rational", 0,
        {0: {0: q(1, 2), 1: q(1, 2)}, 1: {1: 1}},
        {0: 3, 1: 5}, {0: 1, 1: 1}, dual=True,
    )
    assert read_lra(chain) == 5


def test_reward_readout_detects_missed_goal():
    goal = {OK}.__contains__
    chain = partial_chain("rational", I, {I: {OK: q(1, 2), BOT: q(1, 2)},
                                          OK: {OK: 1}, BOT: {BOT: 1}}, {I: 1})
    assert read_exp_reward(chain, goal) == math.inf
    assert read_reach_prob(chain, goal) == q(1, 2)


# -- single-step soundness --------------------------------------------------------


@pytest.mark.parametrize("seed", range(500))
def test_single_elimination_preservesexact_values(seed):
    rng = random.Random(seed)
    tm = random_table(seed, rng.randint(1, 20), goal_rate=0.2)
    chain, goal = full_partial_chain(tm, REWARD)
    reach0, reward0 = exact_values(chain, goal)
    s = rng.choice(sorted(chain.records))
    eliminate_state(chain, s, keep=(tm.initial,))
    chain.check_invariants()
    reach1, reward1 = exact_values(chain, goal)
    for t in chain.records:
        assert reach1[t] == reach0[t]
        assert reward1.get(t) == reward0.get(t)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_conservation_during_full_run(seed, n):
    tm = random_table(seed, n)
    res = check(tm, REACH, debug=True)
    assert 0 <= res.value <= 1


def test_exact_zeroconfexact_values(zeroconf_rational):
    ast = corpus("zeroconf")[1]
    p = check(zeroconf_rational, parse_property('P=? [ F "ok" ]', ast))
    assert p.value == q(4375, 4376)
    assert p.peak_states <= 5


def test_trace_prints_steps(zeroconf_rational):
    ast = corpus("zeroconf")[1]
    out = io.StringIO()
    check(zeroconf_rational, parse_property('P=? [ F "ok" ]', ast), trace=out)
    text = out.getvalue()
    assert "eliminated" in text
    assert "4375/4376" in text


def test_phase_two_rejects_stale_counts(zeroconf_rational):
    ast = corpus("zeroconf")[1]
    am = analysis_model(zeroconf_rational, parse_property('P=? [ F "ok" ]', ast))
    pre = explore(am)
    pre.root = pre.manager.set_count(pre.root, am.initial, 0)
    first = [t for t, _ in am.successors(am.initial)][0]
    pre.root = pre.manager.set_count(pre.root, first, 0)
    with pytest.raises(EngineError):
        explore_eliminate(am, pre)


@pytest.mark.slow
def test_peak_memory_is_small_for_large_brp():
    model, ast = corpus("brp", {"N": 512, "MAX": 10})
    res = check(model, parse_property('P=? [ F "error" ]', ast))
    assert res.states_total > 70_000
    assert res.peak_states < 0.01 * res.states_total
