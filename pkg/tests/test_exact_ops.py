from fractions import Fraction

import numpy as np
import pytest

from oracles import LatticeEncoder, naive_decode
from posit_plam.exact_ops import exact_add, exact_mul, exact_mul_unrounded
from posit_plam.format import PositFormat, decode_to_real, encode_real, negate

F8 = PositFormat(8, 0)


def all_pairs(n):
    p = np.arange(1 << n, dtype=np.int64)
    return np.repeat(p, 1 << n), np.tile(p, 1 << n)


def oracle_table(fmt, op):
    """op applied to every pattern pair through exact rationals and encode_real."""
    vals = [naive_decode(p, fmt.n, fmt.es) for p in range(1 << fmt.n)]
    size = 1 << fmt.n
    out = np.empty(size * size, dtype=np.int64)
    for i, x in enumerate(vals):
        for j, y in enumerate(vals):
            if x is None or y is None:
                out[i * size + j] = fmt.nar
            else:
                out[i * size + j] = encode_real(op(x, y), fmt)
    return out


def test_mul_examples():
    assert exact_mul(0x60, 0x20, F8) == 0x40
    assert exact_mul(0x50, 0x50, F8) == 0x62
    assert exact_mul(0x80, 0x40, F8) == 0x80
    assert exact_mul(0x40, 0x80, F8) == 0x80
    assert exact_mul(0x00, 0x80, F8) == 0x80
    assert exact_mul(0x00, 0x50, F8) == 0x00


def test_add_examples():
    assert exact_add(0x40, 0x40, F8) == 0x60
    assert exact_add(0x40, 0xC0, F8) == 0x00
    assert exact_add(0x80, 0x00, F8) == 0x80


def test_scalar_in_scalar_out():
    assert isinstance(exact_mul(0x50, 0x50, F8), int)
    assert isinstance(exact_add(np.arange(3), 0x40, F8), np.ndarray)


@pytest.mark.parametrize("n,es", [(5, 0), (5, 1), (5, 2), (6, 0), (6, 3), (7, 1), (7, 3)])
def test_mul_matches_oracle_small_formats(n, es):
    fmt = PositFormat(n, es)
    a, b = all_pairs(n)
    np.testing.assert_array_equal(exact_mul(a, b, fmt), oracle_table(fmt, lambda x, y: x * y))


@pytest.mark.parametrize("es", [0, 1, 2])
def test_add_matches_oracle_posit8(es):
    fmt = PositFormat(8, es)
    a, b = all_pairs(8)
    np.testing.assert_array_equal(exact_add(a, b, fmt), oracle_table(fmt, lambda x, y: x + y))


@pytest.mark.parametrize("n,es", [(5, 0), (6, 1), (7, 3)])
def test_add_matches_oracle_small_formats(n, es):
    fmt = PositFormat(n, es)
    a, b = all_pairs(n)
    np.testing.assert_array_equal(exact_add(a, b, fmt), oracle_table(fmt, lambda x, y: x + y))


def test_add_identity_and_commutativity_posit8():
    for es in range(3):
        fmt = PositFormat(8, es)
        a, b = all_pairs(8)
        p = np.arange(256)
        np.testing.assert_array_equal(exact_add(p, 0, fmt), p)
        np.testing.assert_array_equal(exact_add(a, b, fmt), exact_add(b, a, fmt))
        np.testing.assert_array_equal(exact_mul(a, b, fmt), exact_mul(b, a, fmt))


def test_mul_identity_and_sign_rule():
    for es in range(3):
        fmt = PositFormat(8, es)
        p = np.arange(256)
        np.testing.assert_array_equal(exact_mul(p, 0x40, fmt), p)
        a, b = all_pairs(8)
        ok = (a != fmt.nar) & (b != fmt.nar)
        lhs = exact_mul(negate(a, fmt), b, fmt)
        rhs = negate(exact_mul(a, b, fmt), fmt)
        np.testing.assert_array_equal(lhs[ok], rhs[ok])


def test_mul_posit16_against_lattice():
    fmt = PositFormat(16, 1)
    lattice = LatticeEncoder(16, 1)
    values = np.array([float(naive_decode(p, 16, 1) or 0.0) for p in range(1 << 16)])
    rng = np.random.default_rng(7)
    a = rng.integers(0, 1 << 16, 200_000)
    b = rng.integers(0, 1 << 16, 200_000)
    keep = (a != fmt.nar) & (b != fmt.nar) & (a != 0) & (b != 0)
    a, b = a[keep], b[keep]
    # products of two 13-bit significands are exact in float64
    expected = lattice.encode(values[a] * values[b])
    np.testing.assert_array_equal(exact_mul(a, b, fmt), expected)


@pytest.mark.parametrize("n,es", [(16, 1), (24, 2), (32, 0), (32, 3)])
def test_add_wide_formats_against_encode_real(n, es):
    fmt = PositFormat(n, es)
    rng = np.random.default_rng(n * 10 + es)
    a = rng.integers(0, 1 << n, 3000)
    b = rng.integers(0, 1 << n, 3000)
    # bias half the sample towards near-cancellation
    b[:1000] = negate(a[:1000], fmt) + rng.integers(-3, 4, 1000)
    b &= fmt.mask
    got = exact_add(a, b, fmt)
    for x, y, g in zip(a, b, got):
        if fmt.nar in (x, y):
            assert g == fmt.nar
            continue
        want = encode_real(decode_to_real(int(x), fmt) + decode_to_real(int(y), fmt), fmt)
        assert g == want, (hex(x), hex(y))


@pytest.mark.parametrize("n,es", [(24, 2), (32, 0), (32, 2)])
def test_mul_wide_formats_against_encode_real(n, es):
    fmt = PositFormat(n, es)
    rng = np.random.default_rng(n + es)
    a = rng.integers(1, 1 << n, 3000)
    b = rng.integers(1, 1 << n, 3000)
    got = exact_mul(a, b, fmt)
    for x, y, g in zip(a, b, got):
        if fmt.nar in (x, y):
            continue
        want = encode_real(decode_to_real(int(x), fmt) * decode_to_real(int(y), fmt), fmt)
        assert g == want, (hex(x), hex(y))


def test_unrounded_product_is_exact():
    fmt = PositFormat(10, 1)
    rng = np.random.default_rng(3)
    for x, y in rng.integers(1, 1 << 9, (200, 2)):
        u = exact_mul_unrounded(int(x), int(y), fmt)
        value = Fraction(2) ** int(u.sf) * (1 + Fraction(int(u.frac), 1 << u.width))
        assert value == decode_to_real(int(x), fmt) * decode_to_real(int(y), fmt)
        assert 0 <= int(u.frac) < (1 << u.width)
