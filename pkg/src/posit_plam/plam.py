"""Posit logarithm-approximate multiplication.

The significand product ``(1 + fa) * (1 + fb)`` is replaced by the
fixed-point sum ``1 + fa + fb``.  Regime and exponent are handled as one
concatenated scale factor ``2**es * k + e``, so a carry out of the fraction
sum simply increments that integer and any overflow of the exponent field
ripples into the regime on its own.

The pre-rounding value is exactly Mitchell's approximation; rounding is the
same round-to-nearest-even packer used by the exact multiplier.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .exact_ops import Unrounded
from .format import (
    DecodedPosit,
    PositFormat,
    UnroundedResult,
    _scalar_or_array,
    decode,
    pack_fields,
    to_hex,
    unpack,
)

__all__ = ["plam_mul", "plam_mul_unrounded", "plam_mul_trace", "PlamTrace"]


def _plam_fields(fa, fb, fw: int) -> Unrounded:
    total = fa.frac + fb.frac  # both aligned to fw bits, sum has fw + 1
    carry = total >> fw
    frac = total - (carry << fw)
    return Unrounded(fa.sign ^ fb.sign, fa.sf + fb.sf + carry, frac, fw)


def plam_mul_unrounded(a, b, fmt: PositFormat) -> Unrounded:
    """Approximate product fields before rounding (special values unmasked)."""
    return _plam_fields(unpack(a, fmt), unpack(b, fmt), fmt.frac_bits)


def plam_mul(a, b, fmt: PositFormat):
    """Approximate posit product, rounded to nearest even."""
    fa, fb = unpack(a, fmt), unpack(b, fmt)
    u = _plam_fields(fa, fb, fmt.frac_bits)
    out = pack_fields(u.sign, u.sf, u.frac, u.width, fmt)
    out = np.where(fa.zero | fb.zero, 0, out)
    out = np.where(fa.nar | fb.nar, fmt.nar, out)
    return _scalar_or_array(out, a if np.ndim(a) >= np.ndim(b) else b)


@dataclass(frozen=True)
class PlamTrace:
    """Stage-by-stage record of one approximate multiplication.

    ``special`` is ``"nar"`` or ``"zero"`` when the datapath was bypassed;
    the arithmetic fields are then left at their defaults.
    """

    fmt: str
    a: str
    b: str
    special: str | None
    sign_a: int = 0
    k_a: int = 0
    e_a: int = 0
    f_a: str = "0"
    sign_b: int = 0
    k_b: int = 0
    e_b: int = 0
    f_b: str = "0"
    sign: int = 0
    k_sum: int = 0
    e_sum: int = 0
    scale_sum: int = 0
    frac_sum: str = "0"
    carry: int = 0
    scale: int = 0
    k: int = 0
    e: int = 0
    frac: str = "0"
    exponent_carry_into_regime: int = 0
    result: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def lines(self) -> list[str]:
        if self.special:
            return [f"special={self.special}", f"result={self.result}"]
        return [
            f"decode      a={self.a} s={self.sign_a} k={self.k_a} e={self.e_a} f={self.f_a}",
            f"decode      b={self.b} s={self.sign_b} k={self.k_b} e={self.e_b} f={self.f_b}",
            f"sign        s={self.sign}",
            f"scale sum   k={self.k_sum} e={self.e_sum} sf={self.scale_sum}",
            f"frac sum    f={self.frac_sum} carry={self.carry}",
            f"normalise   sf={self.scale} k={self.k} e={self.e} f={self.frac}"
            f" regime_carry={self.exponent_carry_into_regime}",
            f"pack        result={self.result}",
        ]


def _sign_bit(d: DecodedPosit) -> int:
    return 1 if d.sign < 0 else 0


def plam_mul_trace(a: int, b: int, fmt: PositFormat) -> tuple[int, PlamTrace]:
    result = plam_mul(a, b, fmt)
    da, db = decode(a, fmt), decode(b, fmt)
    common = dict(fmt=f"{fmt.n},{fmt.es}", a=to_hex(a, fmt), b=to_hex(b, fmt), result=to_hex(result, fmt))
    if "nar" in (da.kind, db.kind):
        return result, PlamTrace(special="nar", **common)
    if "zero" in (da.kind, db.kind):
        return result, PlamTrace(special="zero", **common)

    es_mask = (1 << fmt.es) - 1
    k_sum, e_sum = da.k + db.k, da.e + db.e
    scale_sum = (k_sum << fmt.es) + e_sum
    frac_sum = da.fraction + db.fraction
    carry = int(frac_sum >= 1)
    scale = scale_sum + carry
    frac = frac_sum - carry
    k = scale >> fmt.es
    return result, PlamTrace(
        special=None,
        sign_a=_sign_bit(da), k_a=da.k, e_a=da.e, f_a=str(da.fraction),
        sign_b=_sign_bit(db), k_b=db.k, e_b=db.e, f_b=str(db.fraction),
        sign=_sign_bit(da) ^ _sign_bit(db),
        k_sum=k_sum, e_sum=e_sum, scale_sum=scale_sum,
        frac_sum=str(frac_sum), carry=carry,
        scale=scale, k=k, e=scale & es_mask, frac=str(frac),
        exponent_carry_into_regime=k - k_sum,
        **common,
    )


def unrounded_result(a: int, b: int, fmt: PositFormat) -> UnroundedResult:
    """Scalar pre-rounding approximate product of two finite nonzero posits."""
    u = plam_mul_unrounded(a, b, fmt)
    return UnroundedResult(-1 if int(u.sign) else 1, int(u.sf), int(u.frac), u.width)


def pre_rounding_value(a: int, b: int, fmt: PositFormat) -> Fraction:
    return unrounded_result(a, b, fmt).value()
