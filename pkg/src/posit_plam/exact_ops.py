"""Correctly rounded posit multiplication and addition.

Both operations accept scalar patterns or int64 arrays (broadcast like
numpy) and return the same kind.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .format import PositFormat, _scalar_or_array, pack_fields, unpack

__all__ = ["Unrounded", "exact_mul", "exact_mul_unrounded", "exact_add"]

# extra low-order bits kept while aligning addends; the lowest one is a sticky jam bit
_ADD_GUARD = 3


class Unrounded(NamedTuple):
    """Vectorised :class:`~posit_plam.format.UnroundedResult` with a shared ``width``."""

    sign: np.ndarray
    sf: np.ndarray
    frac: np.ndarray
    width: int


def _mul_fields(fa, fb, fw: int) -> Unrounded:
    hidden = np.int64(1) << fw
    prod = (hidden + fa.frac) * (hidden + fb.frac)  # in [1, 4) scaled by 2**(2*fw)
    width = 2 * fw + 1
    carry = prod >> width
    frac = np.where(carry == 1, prod, prod << 1) - (np.int64(1) << width)
    return Unrounded(fa.sign ^ fb.sign, fa.sf + fb.sf + carry, frac, width)


def exact_mul_unrounded(a, b, fmt: PositFormat) -> Unrounded:
    """Full-width product fields before rounding.

    Special values are not masked; see :func:`exact_mul`.
    """
    return _mul_fields(unpack(a, fmt), unpack(b, fmt), fmt.frac_bits)


def exact_mul(a, b, fmt: PositFormat):
    """Round-to-nearest-even product of two posits."""
    fa, fb = unpack(a, fmt), unpack(b, fmt)
    u = _mul_fields(fa, fb, fmt.frac_bits)
    out = pack_fields(u.sign, u.sf, u.frac, u.width, fmt)
    out = np.where(fa.zero | fb.zero, 0, out)
    out = np.where(fa.nar | fb.nar, fmt.nar, out)
    return _scalar_or_array(out, a if np.ndim(a) >= np.ndim(b) else b)


def exact_add(a, b, fmt: PositFormat):
    """Round-to-nearest-even sum of two posits."""
    fa, fb = unpack(a, fmt), unpack(b, fmt)
    fw = fmt.frac_bits
    hidden = np.int64(1) << fw
    siga, sigb = hidden + fa.frac, hidden + fb.frac

    swap = (fb.sf > fa.sf) | ((fb.sf == fa.sf) & (sigb > siga))
    big_sign = np.where(swap, fb.sign, fa.sign)
    small_sign = np.where(swap, fa.sign, fb.sign)
    big_sf = np.where(swap, fb.sf, fa.sf)
    big_sig = np.where(swap, sigb, siga)
    small_sig = np.where(swap, siga, sigb)

    dist = np.minimum(big_sf - np.where(swap, fa.sf, fb.sf), fw + _ADD_GUARD + 2)
    big = big_sig << (_ADD_GUARD + 1)
    shifted = small_sig << _ADD_GUARD
    sticky = (shifted & ((np.int64(1) << dist) - 1)) != 0
    small = ((shifted >> dist) << 1) | sticky

    total = np.where(big_sign != small_sign, big - small, big + small)
    cancelled = total == 0
    safe = np.where(cancelled, 1, total)
    lead = _bit_length_pos(safe) - 1
    width = fw + _ADD_GUARD + 2
    frac = (safe << (width - lead)) - (np.int64(1) << width)
    sf = big_sf + lead - (fw + _ADD_GUARD + 1)
    packed = pack_fields(big_sign, sf, frac, width, fmt)

    out = np.where(cancelled, 0, packed)
    p_a = np.asarray(a, dtype=np.int64) & fmt.mask
    p_b = np.asarray(b, dtype=np.int64) & fmt.mask
    out = np.where(fa.zero, p_b, np.where(fb.zero, p_a, out))
    out = np.where(fa.nar | fb.nar, fmt.nar, out)
    return _scalar_or_array(out, a if np.ndim(a) >= np.ndim(b) else b)


def _bit_length_pos(x):
    return np.frexp(x.astype(np.float64))[1].astype(np.int64)
