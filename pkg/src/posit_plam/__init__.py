"""Posit arithmetic emulation with an exact and a logarithm-approximate multiplier.

>>> from posit_plam import PositFormat, exact_mul, plam_mul
>>> fmt = PositFormat(8, 0)
>>> hex(exact_mul(0x50, 0x50, fmt)), hex(plam_mul(0x50, 0x50, fmt))
('0x62', '0x60')
"""
from .analysis import (
    ErrorStats,
    Mode,
    export_csv,
    export_pairs_csv,
    relative_error_closed_form,
    sweep_exhaustive,
    sweep_sampled,
)
from .exact_ops import exact_add, exact_mul
from .format import (
    NAR,
    FormatMismatchError,
    NotARealError,
    Posit,
    PositFormat,
    decode,
    decode_to_real,
    encode_float_array,
    encode_real,
    to_hex,
)
from .nn import MultMode, infer, load_dataset, load_model, quantize_model
from .plam import PlamTrace, plam_mul, plam_mul_trace

__version__ = "0.1.0"

__all__ = [
    "NAR",
    "PositFormat",
    "Posit",
    "FormatMismatchError",
    "NotARealError",
    "decode",
    "decode_to_real",
    "encode_real",
    "encode_float_array",
    "to_hex",
    "exact_mul",
    "exact_add",
    "plam_mul",
    "plam_mul_trace",
    "PlamTrace",
    "Mode",
    "ErrorStats",
    "relative_error_closed_form",
    "sweep_exhaustive",
    "sweep_sampled",
    "export_csv",
    "export_pairs_csv",
    "MultMode",
    "load_model",
    "load_dataset",
    "quantize_model",
    "infer",
]
