"""Bit-level posit codec.

Patterns are plain integers (or int64 numpy arrays) holding the low ``n``
bits of a posit word.  Negative posits are the two's complement of their
magnitude pattern, ``0`` is zero and ``1 << (n - 1)`` is NaR.

Two encoders live here on purpose:

* :func:`pack` / :func:`pack_fields` assemble regime, exponent and fraction
  fields with integer guard/round/sticky rounding.  This is the hot path
  used by every arithmetic routine.
* :func:`encode_real` rounds an exact rational by locating it on the
  pattern lattice with :class:`fractions.Fraction` arithmetic.  It is slow
  and shares no rounding code with :func:`pack`, which makes it usable as
  an oracle.

Both round to nearest, ties to the even pattern, on the bit string of the
posit (the usual posit rounding rule), and both saturate at minpos/maxpos.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "NAR",
    "PositFormat",
    "Posit",
    "DecodedPosit",
    "UnroundedResult",
    "Fields",
    "FormatMismatchError",
    "NotARealError",
    "decode",
    "decode_to_real",
    "encode_real",
    "encode_float_array",
    "pack",
    "pack_fields",
    "unpack",
    "negate",
    "is_nar",
    "is_zero",
    "to_signed",
    "to_hex",
    "parse_literal",
    "dyadic_str",
]

MAX_N = 32
MAX_ES = 3


class FormatMismatchError(ValueError):
    """Operands carry different ``(n, es)`` formats."""


class NotARealError(ArithmeticError):
    """A NaR pattern was used where a real value is required."""


class _NaRToken:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NAR"


#: Distinguished input for :func:`encode_real` meaning "not a real".
NAR = _NaRToken()


@dataclass(frozen=True)
class PositFormat:
    """An ``(n, es)`` posit configuration."""

    n: int
    es: int

    def __post_init__(self):
        if not isinstance(self.n, int) or not isinstance(self.es, int):
            raise TypeError("n and es must be integers")
        if not 3 <= self.n <= MAX_N:
            raise ValueError(f"n must be in [3, {MAX_N}], got {self.n}")
        if not 0 <= self.es <= MAX_ES:
            raise ValueError(f"es must be in [0, {MAX_ES}], got {self.es}")
        if self.es > self.n - 3:
            raise ValueError(f"es={self.es} too large for n={self.n} (need es <= n - 3)")

    @classmethod
    def parse(cls, text: str) -> "PositFormat":
        """Parse ``"N,ES"``."""
        try:
            n, es = (int(t) for t in text.split(","))
        except ValueError:
            raise ValueError(f"format must look like N,ES (got {text!r})") from None
        return cls(n, es)

    def __str__(self):
        return f"posit<{self.n},{self.es}>"

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def nar(self) -> int:
        return 1 << (self.n - 1)

    @property
    def maxpos_pattern(self) -> int:
        return (1 << (self.n - 1)) - 1

    @property
    def minpos_pattern(self) -> int:
        return 1

    @property
    def useed(self) -> int:
        return 1 << (1 << self.es)

    @property
    def max_k(self) -> int:
        return self.n - 2

    @property
    def min_k(self) -> int:
        return -(self.n - 2)

    @property
    def max_sf(self) -> int:
        return self.max_k << self.es

    @property
    def min_sf(self) -> int:
        return self.min_k << self.es

    @property
    def maxpos(self) -> Fraction:
        return Fraction(2) ** self.max_sf

    @property
    def minpos(self) -> Fraction:
        return Fraction(2) ** self.min_sf

    @property
    def frac_bits(self) -> int:
        """Widest fraction field any pattern of this format can carry."""
        return max(0, self.n - 3 - self.es)


@dataclass(frozen=True)
class DecodedPosit:
    """Unpacked view of a pattern.

    ``kind`` is ``"zero"``, ``"nar"`` or ``"finite"``; the remaining fields
    are only meaningful for finite values.  The fraction is
    ``f_num / 2**f_width`` with ``f_width`` the number of fraction bits
    actually present in the encoding.
    """

    kind: str
    sign: int = 1
    k: int = 0
    e: int = 0
    f_num: int = 0
    f_width: int = 0

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.f_num, 1 << self.f_width)

    def scale(self, fmt: PositFormat) -> int:
        return (self.k << fmt.es) + self.e

    def value(self, fmt: PositFormat) -> Fraction:
        if self.kind == "nar":
            raise NotARealError("NaR has no real value")
        if self.kind == "zero":
            return Fraction(0)
        return self.sign * Fraction(2) ** self.scale(fmt) * (1 + self.fraction)


@dataclass(frozen=True)
class UnroundedResult:
    """``sign * 2**sf * (1 + frac_num / 2**frac_width)`` before rounding."""

    sign: int
    sf: int
    frac_num: int
    frac_width: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.frac_width < 0 or not 0 <= self.frac_num < (1 << self.frac_width):
            raise ValueError("fraction must satisfy 0 <= frac_num < 2**frac_width")

    def value(self) -> Fraction:
        return self.sign * Fraction(2) ** self.sf * (1 + Fraction(self.frac_num, 1 << self.frac_width))


class Fields(NamedTuple):
    """Vectorised unpacked fields.

    ``frac`` is left-aligned to ``fmt.frac_bits`` bits so fractions from
    patterns with different regime lengths can be added directly; ``fw`` is
    the width actually encoded.
    """

    sign: np.ndarray  # 0 positive, 1 negative
    sf: np.ndarray
    frac: np.ndarray
    fw: np.ndarray
    zero: np.ndarray
    nar: np.ndarray


def _bit_length(x: np.ndarray) -> np.ndarray:
    # exact for 0 <= x < 2**53
    return np.frexp(x.astype(np.float64))[1].astype(np.int64)


def _as_patterns(p, fmt: PositFormat) -> np.ndarray:
    arr = np.asarray(p, dtype=np.int64)
    return arr & fmt.mask


def unpack(patterns, fmt: PositFormat) -> Fields:
    p = _as_patterns(patterns, fmt)
    n, es = fmt.n, fmt.es
    low = (1 << (n - 1)) - 1

    nar = p == fmt.nar
    zero = p == 0
    sign = (p >> (n - 1)) & 1
    mag = np.where(sign == 1, (-p) & fmt.mask, p) & low

    lead = (mag >> (n - 2)) & 1
    run_src = np.where(lead == 1, ~mag & low, mag)
    run = (n - 1) - _bit_length(run_src)
    k = np.where(lead == 1, run - 1, -run)
    regime_len = np.minimum(run + 1, n - 1)
    rest = (n - 1) - regime_len
    eb = np.minimum(es, rest)
    fw = rest - eb
    e = ((mag >> fw) & ((1 << eb) - 1)) << (es - eb)
    frac = (mag & ((1 << fw) - 1)) << (fmt.frac_bits - fw)
    sf = k * (1 << es) + e
    return Fields(sign, sf, frac, fw, zero, nar)


def pack_fields(sign, sf, frac, width: int, fmt: PositFormat) -> np.ndarray:
    """Round ``(-1)**sign * 2**sf * (1 + frac / 2**width)`` to a pattern.

    ``width`` is shared by every element; ``frac`` must satisfy
    ``0 <= frac < 2**width`` and ``es + width`` must stay below 63.
    No zero/NaR handling: callers mask those in themselves.
    """
    n, es = fmt.n, fmt.es
    if es + width > 62:
        raise ValueError("fraction too wide for 64-bit packing")
    sign = np.asarray(sign, dtype=np.int64)
    sf = np.asarray(sf, dtype=np.int64)
    frac = np.asarray(frac, dtype=np.int64)

    k = sf >> es
    e = sf & ((1 << es) - 1)
    over = k >= fmt.max_k
    under = k < fmt.min_k
    kc = np.clip(k, fmt.min_k, fmt.max_k - 1)

    regime_len = np.where(kc >= 0, kc + 2, 1 - kc)
    regime = np.where(kc >= 0, ((np.int64(1) << (kc + 1)) - 1) << 1, 1)
    room = (n - 1) - regime_len

    tail = (e << width) | frac
    cut = (es + width) - room
    sh = np.maximum(cut, 0)
    kept = np.where(cut > 0, tail >> sh, tail << np.maximum(-cut, 0))
    guard = np.where(cut > 0, (tail >> np.maximum(sh - 1, 0)) & 1, 0)
    sticky = np.where(sh > 1, tail & ((np.int64(1) << np.maximum(sh - 1, 0)) - 1), 0) != 0

    mag = (regime << room) | kept
    mag = mag + (guard & (sticky | (mag & 1)))
    mag = np.where(over, fmt.maxpos_pattern, np.where(under, fmt.minpos_pattern, mag))
    return np.where(sign == 1, (-mag) & fmt.mask, mag)


def _scalar_or_array(result: np.ndarray, template):
    if np.ndim(template) == 0 and not isinstance(template, np.ndarray):
        return int(result)
    return result


def decode(pattern: int, fmt: PositFormat) -> DecodedPosit:
    f = unpack(pattern, fmt)
    if bool(f.nar):
        return DecodedPosit("nar")
    if bool(f.zero):
        return DecodedPosit("zero")
    fw = int(f.fw)
    sf = int(f.sf)
    return DecodedPosit(
        "finite",
        sign=-1 if int(f.sign) else 1,
        k=sf >> fmt.es,
        e=sf & ((1 << fmt.es) - 1),
        f_num=int(f.frac) >> (fmt.frac_bits - fw),
        f_width=fw,
    )


def decode_to_real(pattern: int, fmt: PositFormat) -> Fraction:
    """Exact value of ``pattern``; raises :class:`NotARealError` on NaR."""
    return decode(pattern, fmt).value(fmt)


def pack(r: UnroundedResult, fmt: PositFormat) -> int:
    return int(pack_fields(1 if r.sign < 0 else 0, r.sf, r.frac_num, r.frac_width, fmt))


def _floor_log2(x: Fraction) -> int:
    guess = x.numerator.bit_length() - x.denominator.bit_length()
    if Fraction(2) ** guess > x:
        guess -= 1
    return guess


def encode_real(x, fmt: PositFormat) -> int:
    """Nearest posit to the exact value of ``x`` (ties to even pattern).

    ``x`` may be anything :class:`~fractions.Fraction` accepts, a float, or
    :data:`NAR`.  NaN and infinities encode as NaR.
    """
    if x is NAR:
        return fmt.nar
    if isinstance(x, float) and (x != x or x in (float("inf"), float("-inf"))):
        return fmt.nar
    x = Fraction(x)
    if x == 0:
        return 0
    negative = x < 0
    x = abs(x)

    if x >= fmt.maxpos:
        mag = fmt.maxpos_pattern
    elif x <= fmt.minpos:
        mag = fmt.minpos_pattern
    else:
        sf = _floor_log2(x)
        k, e = sf >> fmt.es, sf & ((1 << fmt.es) - 1)
        if k >= 0:
            regime, regime_len = ((1 << (k + 1)) - 1) << 1, k + 2
        else:
            regime, regime_len = 1, 1 - k
        # position of x on the lattice of (n-1)-bit magnitudes, in ulps
        head = (regime << fmt.es) | e
        head_len = regime_len + fmt.es
        position = (head + (x / Fraction(2) ** sf - 1)) * Fraction(2) ** (fmt.n - 1 - head_len)
        mag = position.numerator // position.denominator
        rem = position - mag
        if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and mag & 1):
            mag += 1
        mag = min(max(mag, fmt.minpos_pattern), fmt.maxpos_pattern)
    return (-mag) & fmt.mask if negative else mag


def encode_float_array(x, fmt: PositFormat) -> np.ndarray:
    """Vectorised :func:`encode_real` for float64 input.

    Every float is an exact dyadic rational, so splitting it with
    ``frexp`` and handing the 52-bit fraction to :func:`pack_fields`
    rounds exactly like :func:`encode_real` does.
    """
    x = np.asarray(x, dtype=np.float64)
    finite = np.isfinite(x)
    safe = np.where(finite, x, 0.0)
    m, ex = np.frexp(np.abs(safe))
    frac = ((m * 2.0 - 1.0) * float(1 << 52)).astype(np.int64)
    out = pack_fields((safe < 0).astype(np.int64), ex.astype(np.int64) - 1, frac, 52, fmt)
    out = np.where(safe == 0, 0, out)
    return np.where(finite, out, fmt.nar).astype(np.int64)


def negate(pattern, fmt: PositFormat):
    p = _as_patterns(pattern, fmt)
    return _scalar_or_array((-p) & fmt.mask, pattern)


def is_nar(pattern, fmt: PositFormat):
    r = _as_patterns(pattern, fmt) == fmt.nar
    return bool(r) if np.ndim(r) == 0 else r


def is_zero(pattern, fmt: PositFormat):
    r = _as_patterns(pattern, fmt) == 0
    return bool(r) if np.ndim(r) == 0 else r


def to_signed(pattern, fmt: PositFormat):
    """Reinterpret patterns as n-bit two's-complement integers.

    Integer order of the result matches real order for non-NaR patterns.
    """
    p = _as_patterns(pattern, fmt)
    s = np.where(p >= fmt.nar, p - (1 << fmt.n), p)
    return _scalar_or_array(s, pattern)


def to_hex(pattern: int, fmt: PositFormat) -> str:
    return f"0x{int(pattern) & fmt.mask:0{(fmt.n + 3) // 4}x}"


def parse_literal(text: str, fmt: PositFormat) -> int:
    """Hex pattern (``0x...``), ``NaR``, or a decimal real routed through :func:`encode_real`."""
    t = text.strip()
    if t.lower().startswith(("0x", "-0x", "+0x")):
        if t.startswith(("-", "+")):
            raise ValueError(f"hex patterns are unsigned: {text!r}")
        value = int(t, 16)
        if value >> fmt.n:
            raise ValueError(f"{text} does not fit in {fmt.n} bits")
        return value
    if t.lower() in ("nar", "nan"):
        return fmt.nar
    try:
        return encode_real(Fraction(t), fmt)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot parse {text!r} as a posit literal") from None


def dyadic_str(x: Fraction) -> str:
    """Exact decimal text for a dyadic rational, e.g. ``Fraction(9, 4) -> '2.25'``."""
    x = Fraction(x)
    den = x.denominator
    shift = den.bit_length() - 1
    if den != 1 << shift:
        raise ValueError("not a dyadic rational")
    d = Decimal(x.numerator * 5**shift).scaleb(-shift)
    text = format(d, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class Posit:
    """A pattern tagged with its format.

    Arithmetic between posits of different formats raises
    :class:`FormatMismatchError`.
    """

    pattern: int
    fmt: PositFormat

    def __post_init__(self):
        if not 0 <= self.pattern <= self.fmt.mask:
            raise ValueError(f"pattern {self.pattern:#x} does not fit in {self.fmt.n} bits")

    @classmethod
    def from_real(cls, x, fmt: PositFormat) -> "Posit":
        return cls(encode_real(x, fmt), fmt)

    def _check(self, other: "Posit") -> None:
        if not isinstance(other, Posit):
            raise TypeError(f"expected Posit, got {type(other).__name__}")
        if other.fmt != self.fmt:
            raise FormatMismatchError(f"{self.fmt} vs {other.fmt}")

    def __mul__(self, other: "Posit") -> "Posit":
        from .exact_ops import exact_mul

        self._check(other)
        return Posit(exact_mul(self.pattern, other.pattern, self.fmt), self.fmt)

    def __add__(self, other: "Posit") -> "Posit":
        from .exact_ops import exact_add

        self._check(other)
        return Posit(exact_add(self.pattern, other.pattern, self.fmt), self.fmt)

    def plam_mul(self, other: "Posit") -> "Posit":
        from .plam import plam_mul

        self._check(other)
        return Posit(plam_mul(self.pattern, other.pattern, self.fmt), self.fmt)

    def __neg__(self) -> "Posit":
        return Posit(negate(self.pattern, self.fmt), self.fmt)

    @property
    def is_nar(self) -> bool:
        return self.pattern == self.fmt.nar

    def decode(self) -> DecodedPosit:
        return decode(self.pattern, self.fmt)

    def to_fraction(self) -> Fraction:
        return decode_to_real(self.pattern, self.fmt)

    def __float__(self):
        return float("nan") if self.is_nar else float(self.to_fraction())

    def __repr__(self):
        return f"Posit({to_hex(self.pattern, self.fmt)}, {self.fmt})"
