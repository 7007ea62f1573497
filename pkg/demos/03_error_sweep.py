"""Error statistics of the approximate multiplier across formats.

Before rounding the error never exceeds 1/9 whatever the format.  After
rounding it also picks up the lattice spacing of the result, which is why
the post-rounding maximum can be larger in short formats.
"""
from posit_plam import Mode, PositFormat, sweep_exhaustive, sweep_sampled

print("exhaustive, pre-rounding:")
for n, es in [(6, 0), (8, 0), (8, 1), (8, 2), (10, 1), (12, 2)]:
    fmt = PositFormat(n, es)
    s = sweep_exhaustive(fmt, Mode.PRE_ROUNDING, workers=4)
    print(f"  {str(fmt):12s} {s.summary(fmt)}")

print("\nexhaustive, post-rounding:")
for n, es in [(8, 0), (8, 1), (8, 2), (10, 1)]:
    fmt = PositFormat(n, es)
    s = sweep_exhaustive(fmt, Mode.POST_ROUNDING, workers=4)
    print(f"  {str(fmt):12s} {s.summary(fmt)}")

print("\nsampled, 10**6 pairs:")
for n, es in [(16, 1), (16, 2), (32, 2)]:
    fmt = PositFormat(n, es)
    s = sweep_sampled(fmt, 10**6, seed=42, workers=4)
    print(f"  {str(fmt):12s} {s.summary(fmt)}")

fmt = PositFormat(8, 2)
s = sweep_exhaustive(fmt)
width = max(s.histogram)
print(f"\n|error| histogram for {fmt}, pre-rounding:")
for i in range(0, 64, 4):
    c = sum(s.histogram[i:i + 4])
    print(f"  {i * 0.125 / 64:6.4f}  {'#' * round(50 * c / (4 * width))} {c}")
