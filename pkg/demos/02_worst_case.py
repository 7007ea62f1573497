"""The approximate multiplier's worst case, traced stage by stage.

1.5 * 1.5 = 2.25 exactly.  Adding fractions instead of multiplying
significands gives 1 + 0.5 + 0.5 = 2, which is 1/9 too small.
"""
from fractions import Fraction

from posit_plam import PositFormat, exact_mul, plam_mul, plam_mul_trace, relative_error_closed_form, to_hex
from posit_plam.format import decode_to_real

fmt = PositFormat(8, 0)
a = b = 0x50  # 1.5

exact, approx = exact_mul(a, b, fmt), plam_mul(a, b, fmt)
print(f"exact  {to_hex(exact, fmt)} = {decode_to_real(exact, fmt)}")
print(f"plam   {to_hex(approx, fmt)} = {decode_to_real(approx, fmt)}")

_, trace = plam_mul_trace(a, b, fmt)
print("\n" + "\n".join(trace.lines()))

err = relative_error_closed_form(Fraction(1, 2), Fraction(1, 2))
print(f"\nrelative error {err} = {float(err):.4f}")

# the error only depends on the two fractions, so a coarse grid shows its shape
print("\nerror (%) by fraction pair, rows f_a, columns f_b:")
grid = [Fraction(i, 8) for i in range(8)]
print("       " + " ".join(f"{float(g):5.3f}" for g in grid))
for fa in grid:
    print(f"{float(fa):5.3f}  " + " ".join(f"{100 * float(relative_error_closed_form(fa, fb)):5.2f}" for fb in grid))
