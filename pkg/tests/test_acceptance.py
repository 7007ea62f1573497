"""Acceptance gate.

One test per criterion.  Each prints a single ``PASS``/``FAIL`` line with its
wall time against the stated budget, then fails the test if any check or the
budget was missed.  Expected values come from the independent oracles in
``oracles.py`` (bit-string decoder, lattice encoder) or from exact rational
arithmetic written out here, never from the package under test.
"""
import contextlib
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import LatticeEncoder, naive_decode
from posit_plam import nn
from posit_plam.analysis import Mode, export_csv, export_pairs_csv, pre_rounding_errors, sweep_exhaustive
from posit_plam.exact_ops import exact_mul
from posit_plam.format import PositFormat, decode, encode_real, negate, unpack
from posit_plam.plam import plam_mul, plam_mul_trace, plam_mul_unrounded

GOLDEN = Path(__file__).parent / "golden"
NINTH = Fraction(1, 9)


@contextlib.contextmanager
def criterion(capsys, number, title, budget=None):
    start = time.perf_counter()
    failure = None
    try:
        yield
    except AssertionError as exc:
        failure = exc
    elapsed = time.perf_counter() - start
    if failure is None and budget is not None and elapsed >= budget:
        failure = AssertionError(f"took {elapsed:.2f}s, budget {budget}s")
    limit = f" (limit {budget:g}s)" if budget is not None else ""
    verdict = "PASS" if failure is None else "FAIL"
    with capsys.disabled():
        print(f"\n[acceptance] {verdict} criterion {number}: {title} [{elapsed:.2f}s{limit}]")
    if failure is not None:
        raise failure


def all_pairs(n):
    p = np.arange(1 << n, dtype=np.int64)
    return np.repeat(p, 1 << n), np.tile(p, 1 << n)


def oracle_values(n, es):
    """float64 value per pattern (exact for n <= 32); NaR maps to nan."""
    return np.array([np.nan if (v := naive_decode(p, n, es)) is None else float(v) for p in range(1 << n)])


def oracle_mul(a, b, n, es, values, lattice):
    """Correctly rounded product via the lattice oracle; significand products are exact in float64."""
    nar = 1 << (n - 1)
    out = lattice.encode(np.nan_to_num(values[a] * values[b]))
    return np.where((a == nar) | (b == nar), nar, out)


def oracle_fraction(p, n, es):
    v = abs(naive_decode(p, n, es))
    while v >= 2:
        v /= 2
    while v < 1:
        v *= 2
    return v - 1


def test_criterion_1_codec_roundtrip(capsys):
    with criterion(capsys, 1, "encode(decode(p)) == p for all patterns of 8,0 8,1 8,2 10,1 12,2", budget=1.0):
        for n, es in [(8, 0), (8, 1), (8, 2), (10, 1), (12, 2)]:
            fmt = PositFormat(n, es)
            for p in range(1 << n):
                d = decode(p, fmt)
                back = fmt.nar if d.kind == "nar" else encode_real(d.value(fmt), fmt)
                assert back == p, f"posit<{n},{es}> {p:#x} -> {back:#x}"


def test_criterion_2_exact_multiplier_oracle(capsys):
    with criterion(capsys, 2, "exact_mul matches oracle on all posit<8,0..2> pairs and 1e6 posit<16,1> pairs",
                   budget=30.0):
        for es in (0, 1, 2):
            a, b = all_pairs(8)
            expected = oracle_mul(a, b, 8, es, oracle_values(8, es), LatticeEncoder(8, es))
            got = exact_mul(a, b, PositFormat(8, es))
            assert len(a) == 65536
            assert np.array_equal(got, expected), f"posit<8,{es}> mismatches: {int((got != expected).sum())}"
        rng = np.random.default_rng(2021)
        a = rng.integers(0, 1 << 16, 10**6)
        b = rng.integers(0, 1 << 16, 10**6)
        expected = oracle_mul(a, b, 16, 1, oracle_values(16, 1), LatticeEncoder(16, 1))
        got = exact_mul(a, b, PositFormat(16, 1))
        assert np.array_equal(got, expected), f"posit<16,1> mismatches: {int((got != expected).sum())}"


def closed_form(fa, fb):
    # (exact - mitchell) / exact written directly from the two significands
    exact = (1 + fa) * (1 + fb)
    s = fa + fb
    approx = 1 + s if s < 1 else 2 * s
    return (exact - approx) / exact


def test_criterion_3_error_bound(capsys):
    with criterion(capsys, 3, "posit<8,2> pre-rounding max_rel_err == 1/9 at f_A = f_B = 0.5, all errors in [0, 1/9]",
                   budget=10.0):
        fmt = PositFormat(8, 2)
        stats = sweep_exhaustive(fmt, Mode.PRE_ROUNDING)
        assert stats.count == 254 * 254
        assert abs(stats.max_rel_err - NINTH) <= Fraction(1, 10**12)
        assert stats.max_rel_err == NINTH
        a, b = stats.argmax_pair
        assert oracle_fraction(a, 8, 2) == oracle_fraction(b, 8, 2) == Fraction(1, 2)

        pats = np.array([p for p in range(1, 256) if p != 0x80], dtype=np.int64)
        xa, xb = np.repeat(pats, len(pats)), np.tile(pats, len(pats))
        num, den = pre_rounding_errors(xa, xb, fmt)
        assert (num >= 0).all()
        assert (9 * num <= den).all()
        frac = {int(p): oracle_fraction(int(p), 8, 2) for p in pats}
        table = {}
        for x, y, u, v in zip(xa.tolist(), xb.tolist(), num.tolist(), den.tolist()):
            key = (frac[x], frac[y])
            if key not in table:
                table[key] = closed_form(*key)
            assert Fraction(u, v) == table[key], (hex(x), hex(y))


def test_criterion_4_worked_worst_case(capsys):
    with criterion(capsys, 4, "posit<8,0> 0x50 x 0x50: exact 0x62, PLAM 0x60, error 0.1111 +- 1e-4"):
        fmt = PositFormat(8, 0)
        ex, ap = exact_mul(0x50, 0x50, fmt), plam_mul(0x50, 0x50, fmt)
        assert (ex, ap) == (0x62, 0x60)
        assert naive_decode(ex, 8, 0) == Fraction(9, 4) and naive_decode(ap, 8, 0) == 2
        err = (naive_decode(ex, 8, 0) - naive_decode(ap, 8, 0)) / naive_decode(ex, 8, 0)
        assert abs(float(err) - 0.1111) <= 1e-4


def test_criterion_5_power_of_two_exactness(capsys):
    with criterion(capsys, 5, "posit<8,1> pairs with a zero fraction: plam_mul == exact_mul", budget=5.0):
        fmt = PositFormat(8, 1)
        a, b = all_pairs(8)
        finite = np.array([p not in (0, 0x80) for p in range(256)])
        zero_frac = np.array([finite[p] and oracle_fraction(p, 8, 1) == 0 for p in range(256)])
        sel = finite[a] & finite[b] & (zero_frac[a] | zero_frac[b])
        assert sel.sum() > 0
        assert np.array_equal(plam_mul(a[sel], b[sel], fmt), exact_mul(a[sel], b[sel], fmt))


def test_criterion_6_sign_symmetry(capsys):
    with criterion(capsys, 6, "plam_mul(-a, b) == -plam_mul(a, b) over all posit<8,2> pairs", budget=10.0):
        fmt = PositFormat(8, 2)
        a, b = all_pairs(8)
        assert np.array_equal(plam_mul(negate(a, fmt), b, fmt), negate(plam_mul(a, b, fmt), fmt))


@pytest.fixture(scope="module")
def mnist():
    model = nn.load_model(nn.bundled_model_path())
    labels, features = nn.load_dataset(nn.bundled_dataset_path())
    return model, nn.quantize_model(model, PositFormat(16, 1)), labels, features


@pytest.fixture(scope="module")
def inference_runs():
    return {}


def test_criterion_7_inference_parity(capsys, mnist, inference_runs):
    with criterion(capsys, 7, "MNIST 784-32-10 posit<16,1>: |PLAM - exact| <= 0.01, |exact - float64| <= 0.005",
                   budget=120.0):
        model, qmodel, labels, features = mnist
        assert features.shape == (2000, 784)
        ref = nn.float_accuracy(model, features, labels)
        exact = nn.infer(qmodel, features, labels, "exact")
        plam = nn.infer(qmodel, features, labels, "plam")
        inference_runs["exact", 1], inference_runs["plam", 1] = exact, plam
        with capsys.disabled():
            print(f"\n[acceptance]   float64 top1={ref:.4f}  exact top1={exact.top1:.4f} top5={exact.top5:.4f}"
                  f"  plam top1={plam.top1:.4f} top5={plam.top5:.4f}")
        assert abs(plam.top1 - exact.top1) <= 0.01
        assert abs(exact.top1 - ref) <= 0.005


def test_criterion_8_determinism(capsys, tmp_path, mnist, inference_runs):
    with criterion(capsys, 8, "byte-identical CSVs for criteria 3 and 7 across reruns and worker counts"):
        fmt = PositFormat(8, 2)
        blobs = []
        for i, workers in enumerate((1, 1, 4)):
            export_csv(sweep_exhaustive(fmt, Mode.PRE_ROUNDING, workers=workers), tmp_path / f"stats{i}.csv")
            blobs.append((tmp_path / f"stats{i}.csv").read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]
        export_pairs_csv(fmt, Mode.PRE_ROUNDING, tmp_path / "pairs0.csv")
        export_pairs_csv(fmt, Mode.PRE_ROUNDING, tmp_path / "pairs1.csv")
        assert (tmp_path / "pairs0.csv").read_bytes() == (tmp_path / "pairs1.csv").read_bytes()

        _, qmodel, labels, features = mnist
        for mode in ("exact", "plam"):
            one = inference_runs.get((mode, 1)) or nn.infer(qmodel, features, labels, mode)
            many = nn.infer(qmodel, features, labels, mode, workers=4, chunk=128)
            nn.write_predictions(one, tmp_path / f"{mode}1.csv")
            nn.write_predictions(many, tmp_path / f"{mode}4.csv")
            assert (tmp_path / f"{mode}1.csv").read_bytes() == (tmp_path / f"{mode}4.csv").read_bytes()


def test_criterion_9_trace_and_carry_chain(capsys):
    with criterion(capsys, 9, "trace goldens for the three datapath examples and carry-chain invariants"):
        f8 = PositFormat(8, 0)
        for name, a, b in [("worst_case", 0x50, 0x50), ("identity", 0x40, 0x40), ("no_carry", 0x48, 0x48)]:
            result, trace = plam_mul_trace(a, b, f8)
            assert trace.to_dict() == json.loads((GOLDEN / f"trace_{name}.json").read_text()), name
            assert result == plam_mul(a, b, f8)

        for n, es in [(7, 0), (7, 1), (7, 2), (8, 3)]:
            fmt = PositFormat(n, es)
            pats = [p for p in range(1 << n) if p not in (0, 1 << (n - 1))][::3]
            for a in pats:
                va = naive_decode(a, n, es)
                for b in pats:
                    vb = naive_decode(b, n, es)
                    _, t = plam_mul_trace(a, b, fmt)
                    fa, fb = Fraction(t.f_a), Fraction(t.f_b)
                    assert t.carry == int(fa + fb >= 1)
                    assert t.scale == t.scale_sum + t.carry
                    assert t.scale == (t.k << es) + t.e and 0 <= t.e < (1 << es)
                    assert t.exponent_carry_into_regime == t.k - t.k_sum
                    # the datapath value before rounding is Mitchell's approximation
                    base = abs(va * vb) / ((1 + fa) * (1 + fb))
                    mitchell = base * (1 + fa + fb) if fa + fb < 1 else 2 * base * (fa + fb)
                    assert Fraction(2) ** t.scale * (1 + Fraction(t.frac)) == mitchell
                    assert t.result == f"{plam_mul(a, b, fmt):#0{2 + (n + 3) // 4}x}"

        fmt = PositFormat(8, 2)
        a, b = all_pairs(8)
        ok = (a != 0) & (b != 0) & (a != 0x80) & (b != 0x80)
        u = plam_mul_unrounded(a[ok], b[ok], fmt)
        fields = unpack(np.stack([a[ok], b[ok]]), fmt)
        carry = (fields.frac[0] + fields.frac[1]) >> fmt.frac_bits
        assert np.array_equal(np.asarray(u.sf), fields.sf[0] + fields.sf[1] + carry)
        assert np.array_equal(plam_mul(negate(a, fmt), b, fmt), negate(plam_mul(a, b, fmt), fmt))
