"""
Zeroconf address collision, step by step
========================================

A new host picks a random IP address and probes the network n times before
using it.  Each probe may be lost with probability p.  We ask how likely the
host ends up with an address nobody else owns.

Run with ``python demos/01_zeroconf_walkthrough.py``.
"""

import io

from symblicit import bundled_model, check, load_model, parse_model, parse_property

text = bundled_model("zeroconf")
print(text)

# Exact arithmetic keeps every intermediate probability as a fraction.
model = load_model(text, arith="rational")
ast = parse_model(text)
reach_ok = parse_property('P=? [ F "ok" ]', ast)

# The trace shows the live part of the chain after every elimination.  Note
# how few states are alive at any time: states disappear as soon as all
# their predecessors have been explored.
trace = io.StringIO()
result = check(model, reach_ok, trace=trace)
print(trace.getvalue())
print("P(ok)          =", result.render())
print("peak states    =", result.peak_states, "of", result.states_total)

# Expected number of tries until the host is configured, either way.
tries = parse_property('R{"tries"}=? [ F "ok" | "bot" ]', ast)
print("E(tries)       =", check(model, tries).render())

# Asking for tries until "ok" alone diverges: "bot" is absorbing and is
# reached with positive probability.
print("E(tries to ok) =", check(model, parse_property('R{"tries"}=? [ F "ok" ]', ast)).render())

# More probes make a collision less likely, at no cost in memory.
for n in (4, 100, 10_000):
    big = load_model(text, {"n": n}, "rational")
    r = check(big, reach_ok)
    print(f"n={n:>6}  states={r.states_total:>6}  peak={r.peak_states}  "
          f"P(ok)~{float(r.value):.12f}")
