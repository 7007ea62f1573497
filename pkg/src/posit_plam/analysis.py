"""Error sweeps comparing the approximate multiplier against exact products.

Two measurement modes:

``pre_rounding``
    ``(C_exact - C_plam) / C_exact`` on the unrounded approximate product.
    Computed as an exact integer ratio, so the 1/9 bound and the closed
    form can be checked with equality rather than tolerances.
``post_rounding``
    The packed approximate result against the exact real product.  Pairs
    whose exact product falls outside ``[minpos, maxpos]`` are counted in
    ``excluded`` and left out of the statistics: their error is dominated
    by saturation, not by the approximation.

Means are accumulated as fixed-point integers so that merging partial
results is exactly associative and the outcome does not depend on how a
sweep was split across workers.
"""
from __future__ import annotations

import csv
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path

import numpy as np

from .exact_ops import exact_mul_unrounded
from .format import PositFormat, decode_to_real, to_hex, unpack
from .plam import _plam_fields, plam_mul

__all__ = [
    "Mode",
    "ErrorStats",
    "relative_error_closed_form",
    "pre_rounding_errors",
    "sweep_exhaustive",
    "sweep_sampled",
    "export_csv",
    "export_pairs_csv",
    "MAX_EXHAUSTIVE_N",
]

MAX_EXHAUSTIVE_N = 12
HIST_BINS = 64
HIST_TOP = 0.125
_FIXED_BITS = 40
_CHUNK_PAIRS = 1 << 16

PAIRS_HEADER = ["a_hex", "b_hex", "a_real", "b_real", "exact_real", "plam_real", "rel_err"]
STATS_HEADER = ["bin_lo", "bin_hi", "count"]


class Mode(str, enum.Enum):
    PRE_ROUNDING = "pre_rounding"
    POST_ROUNDING = "post_rounding"


def relative_error_closed_form(f_a, f_b) -> Fraction:
    """Relative error of Mitchell's product for significands ``1 + f_a``, ``1 + f_b``."""
    f_a, f_b = Fraction(f_a), Fraction(f_b)
    if not (0 <= f_a < 1 and 0 <= f_b < 1):
        raise ValueError("fractions must lie in [0, 1)")
    den = (1 + f_a) * (1 + f_b)
    if f_a + f_b < 1:
        return f_a * f_b / den
    return (1 - f_a) * (1 - f_b) / den


@dataclass(frozen=True)
class ErrorStats:
    count: int = 0
    max_rel_err: Fraction | None = None
    argmax_pair: tuple[int, int] | None = None
    sum_fixed: int = 0
    abs_sum_fixed: int = 0
    histogram: tuple[int, ...] = field(default=(0,) * (HIST_BINS + 1))
    excluded: int = 0

    @property
    def mean_rel_err(self) -> float | None:
        return None if not self.count else self.sum_fixed / self.count / 2**_FIXED_BITS

    @property
    def mean_abs_rel_err(self) -> float | None:
        return None if not self.count else self.abs_sum_fixed / self.count / 2**_FIXED_BITS

    def merge(self, other: "ErrorStats") -> "ErrorStats":
        best = _pick_max(
            (self.max_rel_err, self.argmax_pair), (other.max_rel_err, other.argmax_pair)
        )
        return ErrorStats(
            count=self.count + other.count,
            max_rel_err=best[0],
            argmax_pair=best[1],
            sum_fixed=self.sum_fixed + other.sum_fixed,
            abs_sum_fixed=self.abs_sum_fixed + other.abs_sum_fixed,
            histogram=tuple(x + y for x, y in zip(self.histogram, other.histogram)),
            excluded=self.excluded + other.excluded,
        )

    def summary(self, fmt: PositFormat | None = None) -> str:
        if not self.count:
            return f"count=0 excluded={self.excluded} empty=1"
        a, b = self.argmax_pair
        if fmt is not None:
            pair = f"{to_hex(a, fmt)},{to_hex(b, fmt)}"
        else:
            pair = f"{a:#x},{b:#x}"
        return (
            f"count={self.count} max_rel_err={float(self.max_rel_err):.6f}"
            f" mean_rel_err={self.mean_rel_err:.6f} mean_abs_rel_err={self.mean_abs_rel_err:.6f}"
            f" argmax={pair} excluded={self.excluded}"
        )


def _pick_max(x, y):
    # larger error wins; ties go to the smaller (a, b) pair so merges commute
    if x[0] is None:
        return y
    if y[0] is None:
        return x
    if x[0] != y[0]:
        return x if x[0] > y[0] else y
    return x if x[1] <= y[1] else y


def pre_rounding_errors(a, b, fmt: PositFormat):
    """Exact pre-rounding relative errors as integer ``(num, den)`` arrays.

    ``a`` and ``b`` must be finite nonzero patterns.
    """
    fa, fb = unpack(a, fmt), unpack(b, fmt)
    fw = fmt.frac_bits
    hidden = np.int64(1) << fw
    exact_sig = (hidden + fa.frac) * (hidden + fb.frac)  # scale 2**(sfa + sfb - 2 fw)
    u = _plam_fields(fa, fb, fw)
    lift = u.sf - fa.sf - fb.sf  # 0 or 1
    plam_sig = (hidden + u.frac) << (fw + lift)
    return exact_sig - plam_sig, exact_sig


def _values(p, fmt):
    f = unpack(p, fmt)
    mag = np.ldexp(1.0 + f.frac / float(1 << fmt.frac_bits), f.sf)
    return np.where(f.sign == 1, -mag, mag)


def _post_rounding(a, b, fmt):
    exact = _values(a, fmt) * _values(b, fmt)
    rounded = _values(plam_mul(a, b, fmt), fmt)
    u = exact_mul_unrounded(a, b, fmt)
    over = (u.sf > fmt.max_sf) | ((u.sf == fmt.max_sf) & (u.frac > 0))
    under = u.sf < fmt.min_sf
    return exact, rounded, (exact - rounded) / exact, ~(over | under)


def _chunk_stats(a, b, fmt: PositFormat, mode: Mode) -> ErrorStats:
    if len(a) == 0:
        return ErrorStats()
    excluded = 0
    if mode is Mode.PRE_ROUNDING:
        num, den = pre_rounding_errors(a, b, fmt)
        err = num / den
    else:
        _, _, err, keep = _post_rounding(a, b, fmt)
        excluded = int((~keep).sum())
        a, b, err = a[keep], b[keep], err[keep]
        if len(a) == 0:
            return ErrorStats(excluded=excluded)
    mag = np.abs(err)

    top = mag.max()
    cand = np.nonzero(mag >= top * (1 - 1e-9))[0]
    best = (None, None)
    for i in cand:
        x, y = int(a[i]), int(b[i])
        if mode is Mode.PRE_ROUNDING:
            exact_err = Fraction(int(num[i]), int(den[i]))
        else:
            exact_val = decode_to_real(x, fmt) * decode_to_real(y, fmt)
            approx = decode_to_real(int(plam_mul(x, y, fmt)), fmt)
            exact_err = abs((exact_val - approx) / exact_val)
        best = _pick_max(best, (exact_err, (x, y)))

    bins = np.minimum((mag / (HIST_TOP / HIST_BINS)).astype(np.int64), HIST_BINS)
    hist = np.bincount(bins, minlength=HIST_BINS + 1)
    scale = float(2**_FIXED_BITS)
    return ErrorStats(
        count=len(a),
        max_rel_err=best[0],
        argmax_pair=best[1],
        sum_fixed=int(np.rint(err * scale).astype(np.int64).sum()),
        abs_sum_fixed=int(np.rint(mag * scale).astype(np.int64).sum()),
        histogram=tuple(int(c) for c in hist),
        excluded=excluded,
    )


def finite_nonzero_patterns(fmt: PositFormat) -> np.ndarray:
    p = np.arange(1, 1 << fmt.n, dtype=np.int64)
    return p[p != fmt.nar]


def _exhaustive_chunks(fmt: PositFormat):
    pats = finite_nonzero_patterns(fmt)
    rows = max(1, _CHUNK_PAIRS // len(pats))
    for start in range(0, len(pats), rows):
        block = pats[start:start + rows]
        yield np.repeat(block, len(pats)), np.tile(pats, len(block))


def _run(chunks, fmt, mode, workers):
    mode = Mode(mode)
    job = lambda ab: _chunk_stats(ab[0], ab[1], fmt, mode)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return reduce(ErrorStats.merge, parts, ErrorStats())


def _check_exhaustive(fmt: PositFormat):
    if fmt.n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive sweep limited to n <= {MAX_EXHAUSTIVE_N}, got n={fmt.n}")


def sweep_exhaustive(fmt: PositFormat, mode=Mode.PRE_ROUNDING, workers: int = 1) -> ErrorStats:
    """Every ordered pair of finite nonzero posits."""
    _check_exhaustive(fmt)
    return _run(_exhaustive_chunks(fmt), fmt, mode, workers)


def sample_pairs(fmt: PositFormat, pairs: int, seed: int):
    """Seeded uniform draw of finite nonzero pattern pairs."""
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, (1 << fmt.n) - 2, size=(pairs, 2), dtype=np.int64) + 1
    idx = np.where(idx >= fmt.nar, idx + 1, idx)
    return idx[:, 0], idx[:, 1]


def sweep_sampled(fmt: PositFormat, pairs: int, seed: int, mode=Mode.PRE_ROUNDING, workers: int = 1) -> ErrorStats:
    a, b = sample_pairs(fmt, pairs, seed)
    chunks = [(a[i:i + _CHUNK_PAIRS], b[i:i + _CHUNK_PAIRS]) for i in range(0, pairs, _CHUNK_PAIRS)]
    return _run(chunks, fmt, mode, workers)


def export_csv(stats: ErrorStats, path) -> None:
    """Histogram as ``bin_lo,bin_hi,count``; the last row is the overflow bin."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_HEADER)
        if not stats.count:
            return
        width = HIST_TOP / HIST_BINS
        for i, c in enumerate(stats.histogram[:HIST_BINS]):
            w.writerow([repr(i * width), repr((i + 1) * width), c])
        w.writerow([repr(HIST_TOP), "inf", stats.histogram[HIST_BINS]])


def export_pairs_csv(fmt: PositFormat, mode, path) -> int:
    """One row per ordered finite nonzero pair; returns the row count.

    In post-rounding mode the saturating pairs that the statistics skip are
    still written.
    """
    _check_exhaustive(fmt)
    mode = Mode(mode)
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PAIRS_HEADER)
        for a, b in _exhaustive_chunks(fmt):
            av, bv = _values(a, fmt), _values(b, fmt)
            if mode is Mode.PRE_ROUNDING:
                num, den = pre_rounding_errors(a, b, fmt)
                err = num / den
                exact, approx = av * bv, _plam_values(a, b, fmt)
            else:
                exact, approx, err, _ = _post_rounding(a, b, fmt)
            for row in zip(a.tolist(), b.tolist(), av.tolist(), bv.tolist(),
                           exact.tolist(), approx.tolist(), err.tolist()):
                w.writerow([to_hex(row[0], fmt), to_hex(row[1], fmt), *map(repr, row[2:])])
            rows += len(a)
    return rows


def _plam_values(a, b, fmt: PositFormat) -> np.ndarray:
    fa, fb = unpack(a, fmt), unpack(b, fmt)
    u = _plam_fields(fa, fb, fmt.frac_bits)
    mag = np.ldexp(1.0 + u.frac / float(1 << u.width), u.sf)
    return np.where(u.sign == 1, -mag, mag)

