"""A walk through the posit bit layout.

Decodes a few patterns field by field, shows how the regime stretches and
shrinks the fraction, and rounds some reals back onto the lattice.
"""
from posit_plam import PositFormat, decode, decode_to_real, encode_real, to_hex
from posit_plam.format import dyadic_str

fmt = PositFormat(8, 2)
print(f"{fmt}: useed={fmt.useed} maxpos={fmt.maxpos} minpos={fmt.minpos}")

# regime runs of ones give k >= 0, runs of zeros give k < 0
for p in (0x40, 0x50, 0x60, 0x70, 0x7F, 0x20, 0x01, 0xC0):
    d = decode(p, fmt)
    print(f"  {to_hex(p, fmt)}  {p:08b}  k={d.k:+d} e={d.e} f={d.f_num}/{1 << d.f_width}"
          f"  -> {dyadic_str(decode_to_real(p, fmt))}")

# precision is tapered: more regime bits near the extremes, fewer fraction bits
print("\nfraction bits available around each power of 16:")
for k in range(-3, 4):
    d = decode(encode_real(16.0 ** k, fmt), fmt)
    print(f"  16**{k:+d}: {d.f_width} fraction bits")

print("\nrounding reals to posit<8,2>:")
for x in (3.1, 1000.0, 1e9, 1e-9, -0.3):
    p = encode_real(x, fmt)
    print(f"  {x:>8g} -> {to_hex(p, fmt)} = {float(decode_to_real(p, fmt)):g}")
