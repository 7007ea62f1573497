"""``posit-plam`` command line.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import analysis, nn
from .exact_ops import exact_add, exact_mul
from .format import PositFormat, decode, decode_to_real, dyadic_str, parse_literal, to_hex
from .plam import plam_mul, plam_mul_trace

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _format(text):
    try:
        return PositFormat.parse(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _show(p: int, fmt: PositFormat) -> str:
    if p == fmt.nar:
        return f"{to_hex(p, fmt)} NaR"
    return f"{to_hex(p, fmt)} value={dyadic_str(decode_to_real(p, fmt))}"


def _kv(p: int, fmt: PositFormat, name: str) -> str:
    if p == fmt.nar:
        return f"{to_hex(p, fmt)} {name}_value=NaR"
    return f"{to_hex(p, fmt)} {name}_value={dyadic_str(decode_to_real(p, fmt))}"


def cmd_decode(args):
    fmt = args.format
    d = decode(parse_literal(args.value, fmt), fmt)
    if d.kind == "nar":
        return "NaR"
    if d.kind == "zero":
        return "zero value=0"
    sign = "+" if d.sign > 0 else "-"
    return f"sign={sign} k={d.k} e={d.e} f={dyadic_str(d.fraction)} value={dyadic_str(d.value(fmt))}"


def cmd_encode(args):
    return to_hex(parse_literal(args.value, args.format), args.format)


def cmd_mul(args):
    fmt = args.format
    a, b = parse_literal(args.a, fmt), parse_literal(args.b, fmt)
    lines = []
    if args.both:
        ex, ap = exact_mul(a, b, fmt), plam_mul(a, b, fmt)
        line = f"exact={_kv(ex, fmt, 'exact')} plam={_kv(ap, fmt, 'plam')}"
        da, db = decode(a, fmt), decode(b, fmt)
        if da.is_finite and db.is_finite:
            err = analysis.relative_error_closed_form(da.fraction, db.fraction)
            line += f" error={float(err):.6f}"
        lines.append(line)
    elif args.trace:
        result, trace = plam_mul_trace(a, b, fmt)
        lines.extend(trace.lines())
        lines.append(_show(result, fmt))
    else:
        op = plam_mul if args.mode == "plam" else exact_mul
        lines.append(_show(op(a, b, fmt), fmt))
    return "\n".join(lines)


def cmd_add(args):
    fmt = args.format
    return _show(exact_add(parse_literal(args.a, fmt), parse_literal(args.b, fmt), fmt), fmt)


def cmd_sweep(args):
    fmt = args.format
    mode = analysis.Mode.POST_ROUNDING if args.post_rounding else analysis.Mode.PRE_ROUNDING
    if args.samples is None:
        if fmt.n > analysis.MAX_EXHAUSTIVE_N:
            raise UsageError(f"exhaustive sweep needs n <= {analysis.MAX_EXHAUSTIVE_N}; use --samples")
        stats = analysis.sweep_exhaustive(fmt, mode, workers=args.workers)
    else:
        stats = analysis.sweep_sampled(fmt, args.samples, args.seed, mode, workers=args.workers)
    if stats.max_rel_err is not None and mode is analysis.Mode.PRE_ROUNDING and stats.max_rel_err > Fraction(1, 9):
        raise AssertionError(f"pre-rounding error {stats.max_rel_err} exceeds 1/9")
    if args.stats_csv:
        analysis.export_csv(stats, args.stats_csv)
    if args.pairs_csv:
        if args.samples is not None:
            raise UsageError("--pairs-csv requires an exhaustive sweep")
        analysis.export_pairs_csv(fmt, mode, args.pairs_csv)
    return f"format={fmt.n},{fmt.es} mode={mode.value} " + stats.summary(fmt)


def cmd_infer(args):
    fmt = args.format
    model = nn.load_model(args.model or nn.bundled_model_path())
    labels, features = nn.load_dataset(args.data or nn.bundled_dataset_path())
    result = nn.infer(nn.quantize_model(model, fmt), features, labels, args.mode, workers=args.workers)
    if args.predictions:
        nn.write_predictions(result, args.predictions)
    line = f"format={fmt.n},{fmt.es} mode={args.mode} " + result.summary()
    if args.float_reference:
        line += f" float_top1={nn.float_accuracy(model, features, labels):.4f}"
    return line


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="posit-plam", description="Posit arithmetic with exact and logarithm-approximate multipliers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_format(p):
        p.add_argument("--format", type=_format, default=PositFormat(16, 1), metavar="N,ES",
                       help="posit configuration (default 16,1)")
        return p

    p = with_format(sub.add_parser("decode", help="show the fields of a pattern"))
    p.add_argument("value")
    p.set_defaults(func=cmd_decode)

    p = with_format(sub.add_parser("encode", help="round a real to a pattern"))
    p.add_argument("value")
    p.set_defaults(func=cmd_encode)

    p = with_format(sub.add_parser("mul", help="multiply two posits"))
    p.add_argument("--mode", choices=["exact", "plam"], default="exact")
    p.add_argument("--trace", action="store_true", help="print the approximate datapath stage by stage")
    p.add_argument("--both", action="store_true", help="print exact and approximate results and the error")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_mul)

    p = with_format(sub.add_parser("add", help="add two posits"))
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_add)

    p = with_format(sub.add_parser("sweep", help="error statistics of the approximate multiplier"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--pre-rounding", action="store_true", help="measure before rounding (default)")
    g.add_argument("--post-rounding", action="store_true", help="measure packed results")
    p.add_argument("--samples", type=int, help="random pairs instead of the exhaustive sweep")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--stats-csv", help="write the error histogram here")
    p.add_argument("--pairs-csv", help="write every evaluated pair here")
    p.set_defaults(func=cmd_sweep)

    p = with_format(sub.add_parser("infer", help="classify a dataset with a dense network"))
    p.add_argument("--model", help="model JSON (default: bundled MNIST MLP)")
    p.add_argument("--data", help="dataset CSV (default: bundled MNIST subset)")
    p.add_argument("--mode", choices=["exact", "plam"], default="exact")
    p.add_argument("--predictions", help="write index,label,prediction,correct here")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--float-reference", action="store_true", help="also report float64 accuracy")
    p.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = args.func(args)
    except UsageError as exc:
        print(f"posit-plam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"posit-plam: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"posit-plam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssertionError, ArithmeticError) as exc:
        print(f"posit-plam: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
