"""
Choosing an arithmetic backend
==============================

Every engine is generic over the number type.  Binary64 is fast, rationals
are exact, and multi-precision floats cover values far outside the double
range.  This script shows where each one earns its keep.
"""

from symblicit import RangeExceeded, bundled_model, check_text

# 1. A retransmission protocol with a tiny failure probability.  With 100
#    retries the answer is around 1e-152, still representable as a double,
#    but wide-precision floats give many more trustworthy digits.
brp = bundled_model("brp")
for arith in ("f64", "bigfloat:128"):
    r = check_text(brp, 'P=? [ F "error" ]', arith=arith, constants={"N": 16, "MAX": 100})
    print(f"brp N=16 MAX=100 {arith:>13}: {r.render()}")

# 2. Long-run averages are read off as a ratio of two accumulated rewards.
#    Both grow with the expected return time, which for a chemical reaction
#    with many molecules overflows a double although the ratio is about 24.
chem = bundled_model("chem")
try:
    check_text(chem, "R=? [ S ]", arith="f64", constants={"N1": 20_000})
except RangeExceeded as exc:
    print("f64 gave up:", exc)
r = check_text(chem, "R=? [ S ]", arith="bigfloat", constants={"N1": 20_000})
print("bigfloat:", float(r.value))

# 3. Rationals reproduce textbook fractions exactly, which makes them the
#    natural choice for regression tests on small models.
r = check_text(bundled_model("zeroconf"), 'P=? [ F "ok" ]', arith="rational")
print("zeroconf, exact:", r.render())

# 4. Exact results can be checked against the oracles in the same backend.
for engine in ("symblicit", "linear"):
    r = check_text(bundled_model("zeroconf"), 'R{"tries"}=? [ F "ok" | "bot" ]',
                   engine=engine, arith="rational")
    print(f"{engine:>9}: {r.render()}")
