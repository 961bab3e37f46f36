"""
How much of the chain is ever in memory?
========================================

The engine never holds the whole transition matrix.  A decision diagram
counts predecessors, and explicit states are eliminated as soon as they are
no longer needed.  The peak number of explicit states depends on how much
the model "fans back" rather than on its size.
"""

import time

from symblicit import bundled_model, check_text

runs = [
    ("chem", {"N1": 1000}, "R=? [ S ]", "f64"),
    ("cell", {"N": 5000}, 'R{"calls"}=? [ S ]', "bigfloat"),
    ("brp", {"N": 64, "MAX": 5}, 'P=? [ F "error" ]', "f64"),
    ("brp", {"N": 256, "MAX": 5}, 'P=? [ F "error" ]', "f64"),
    ("embedded", {"MAX_COUNT": 16}, 'R{"danger"}=? [ F "down" ]', "f64"),
    # Crowds is the counterexample: its observation counters mix freely and
    # many states stay alive at once.
    ("crowds", None, 'P=? [ F "identified" ]', "f64"),
]

print(f"{'model':<10}{'states':>9}{'peak':>7}{'peak tr':>9}{'dd nodes':>10}{'sec':>7}  value")
for name, consts, prop, arith in runs:
    t0 = time.perf_counter()
    r = check_text(bundled_model(name), prop, arith=arith, constants=consts)
    dt = time.perf_counter() - t0
    print(f"{name:<10}{r.states_total:>9}{r.peak_states:>7}{r.peak_transitions:>9}"
          f"{r.dd_nodes_peak:>10}{dt:>7.2f}  {float(r.value):.6g}")

# Birth-death chains such as chem and cell keep a handful of states alive
# however long they are; the protocol keeps a window proportional to its
# retry bound; crowds keeps a sizeable fraction of its state space.
