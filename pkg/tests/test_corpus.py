import math

import pytest

from conftest import corpus
from symblicit import check
from symblicit.lang import parse_property

CASES = [
    ("zeroconf", None, 'P=? [ F "ok" ]', "rational"),
    ("zeroconf", {"n": 8, "p": "0.3"}, 'R{"tries"}=? [ F "ok" | "bot" ]', "rational"),
    ("brp", {"N": 16, "MAX": 2}, 'P=? [ F "error" ]', "rational"),
    ("brp", {"N": 64, "MAX": 5}, 'P=? [ F "error" ]', "f64"),
    ("brp", {"N": 32, "MAX": 4}, 'P=? [ F "success" ]', "f64"),
    ("chem", {"N1": 10}, "R=? [ S ]", "rational"),
    ("chem", {"N1": 200}, "R=? [ S ]", "f64"),
    ("cell", {"N": 50}, 'R{"calls"}=? [ S ]', "rational"),
    ("cell", {"N": 2000}, 'R{"calls"}=? [ S ]', "bigfloat:128"),
    ("embedded", {"MAX_COUNT": 2}, 'R{"danger"}=? [ F "down" ]', "rational"),
    ("embedded", {"MAX_COUNT": 8}, 'R{"danger"}=? [ F "down" ]', "f64"),
    ("embedded", {"MAX_COUNT": 8}, 'P=? [ F "down" ]', "f64"),
    ("crowds", None, 'P=? [ F "identified" ]', "rational"),
]


def ids(case):
    name, consts, prop, arith = case
    c = ",".join(f"{k}={v}" for k, v in (consts or {}).items())
    return f"{name}[{c}]-{prop}-{arith}"


@pytest.mark.parametrize("case", CASES, ids=[ids(c) for c in CASES])
def test_engine_matches_oracles(case):
    name, consts, prop_text, arith = case
    model, ast = corpus(name, consts, arith)
    prop = parse_property(prop_text, ast)
    res = check(model, prop)
    assert res.states_total <= 50_000
    lin = check(corpus(name, consts, arith)[0], prop, "linear")
    assert res.states_total == lin.states_total
    if arith == "rational":
        assert res.value == lin.value
    else:
        a, b = float(res.value), float(lin.value)
        assert math.isclose(a, b, rel_tol=1e-8, abs_tol=1e-300)
    # value iteration crawls on the embedded model, whose rates span eight
    # orders of magnitude; the direct solver covers it
    if prop.kind != "LongRunAvg" and name != "embedded":
        vi = check(corpus(name, consts, "f64")[0], prop, "vi", epsilon=1e-12)
        assert math.isclose(float(vi.value), float(lin.value), rel_tol=1e-5, abs_tol=1e-12)
    assert res.peak_states < max(50, res.states_total)


def test_embedded_state_count_formula():
    # 564 states per counter value plus a constant block
    for mc, want in ((1, 1716), (2, 2280), (64, 37_248)):
        model, ast = corpus("embedded", {"MAX_COUNT": mc})
        res = check(model, parse_property('P=? [ F "down" ]', ast), merge_goals=False)
        assert res.states_total == want == 564 * mc + 1152


def test_brp_state_counts():
    for n, mx, want in ((64, 5, 4936), (64, 10, 9101), (128, 10, 18189)):
        model, ast = corpus("brp", {"N": n, "MAX": mx})
        res = check(model, parse_property('P=? [ F "error" ]', ast))
        assert res.states_total == want
