"""``ifmsan`` command line.

Subcommands: ``infer``, ``sweep``, ``control``, ``tensor`` and ``toy``.
Exit codes: 0 ok, 1 usage/config, 2 I/O or format, 3 budget unreachable.
"""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import ifmt
from .errors import (BudgetUnreachable, ConfigError, DimensionError, FormatError,
                     ParameterError, UndefinedRatioError)
from .manifest import load_model, save_model, toy_input, toy_model
from .metrics import (DEFAULT_PRECISION, SweepRecord, multi_layer_sweep, summary_lines,
                      write_sweep_csv)
from .nn import infer, original_ifms, top_k
from .privacy import PrivacyBudget, control_sanitize
from .sanitizer import SanitizationPlan
from .tensor import Tensor, zero_ratio

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_args(p):
    p.add_argument("--model", required=True, help="JSON model manifest")
    p.add_argument("--input", required=True, help="input tensor (IFMT)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ifmsan", description="Sample-and-hold IFM sanitization toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("infer", help="classify an input, optionally sanitizing IFMs")
    _add_model_args(p)
    p.add_argument("--fixed", action="append", default=[], metavar="NAME=N",
                   help="sanitize layer NAME's IFM with window N (repeatable)")
    p.add_argument("--top-k", type=int, default=5)

    p = sub.add_parser("sweep", help="tracked-class probability across window sizes")
    _add_model_args(p)
    p.add_argument("--layer", required=True)
    p.add_argument("--window-from", type=int, default=2)
    p.add_argument("--window-to", type=int, default=150)
    p.add_argument("--fixed", action="append", default=[], metavar="NAME=N")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION,
                   help="decimal places used to decide distinct probabilities")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--summary", help="also write the summary lines to this file")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("control", help="find the first window meeting a degree of sanitization")
    _add_model_args(p)
    p.add_argument("--layer", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--window-to", type=int, default=None,
                   help="largest window to try (default: the layer's IFM size)")
    p.add_argument("--out", help="trace CSV output path")

    p = sub.add_parser("tensor", help="inspect, dump or create IFMT tensors")
    tsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    t = tsub.add_parser("inspect", help="dims, zero ratio and leading samples")
    t.add_argument("path")
    t.add_argument("--head", type=int, default=8)
    t = tsub.add_parser("dump", help="print every sample, one per line")
    t.add_argument("path")
    t = tsub.add_parser("convert", help="pack a whitespace/comma separated float list into IFMT")
    t.add_argument("source", help="text file with floats, or - for stdin")
    t.add_argument("--dims", required=True, help="comma separated, e.g. 3,16,16")
    t.add_argument("--out", required=True)
    t = tsub.add_parser("ifms", help="dims and zero ratio of every layer's IFM")
    _add_model_args(t)

    p = sub.add_parser("toy", help="write the seeded toy CNN and a random input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load(args):
    return load_model(args.model), ifmt.read(args.input)


def cmd_infer(args) -> int:
    model, x = _load(args)
    plan = SanitizationPlan.parse(args.fixed)
    for index, prob in top_k(infer(model, x, plan), args.top_k):
        print(f"{index} {prob:.6f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    model, x = _load(args)
    fixed = SanitizationPlan.parse(args.fixed)
    records = multi_layer_sweep(model, x, fixed, args.layer, args.window_from,
                                args.window_to, jobs=args.jobs)
    zr = zero_ratio(original_ifms(model, x)[args.layer])
    if args.out:
        write_sweep_csv(records, args.out)
    else:
        write_sweep_csv(records, sys.stdout)
    lines = summary_lines(records, args.precision, zr)
    # keep stdout pure CSV when the sweep itself goes there
    stream = sys.stdout if args.out else sys.stderr
    print("\n".join(lines), file=stream)
    if args.summary:
        Path(args.summary).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_control(args) -> int:
    model, x = _load(args)
    budget = PrivacyBudget(args.gamma)
    try:
        result = control_sanitize(model, x, args.layer, budget, args.window_to)
    except BudgetUnreachable as exc:
        if args.out:
            write_sweep_csv([SweepRecord(n, p) for n, p in exc.trace], args.out)
        print(f"ifmsan: budget unreachable: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if args.out:
        write_sweep_csv([SweepRecord(n, p) for n, p in result.trace], args.out)
    print(f"window_size={result.window_size}")
    print(f"tracked_class={result.tracked_class}")
    print(f"p_original={result.p_original:.6f}")
    print(f"p_sanitized={result.p_sanitized:.6f}")
    print(f"observed_epsilon={result.observed_epsilon:.6f}")
    print(f"epsilon_lower={budget.epsilon_lower:.6f}")
    return EXIT_OK


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(d) for d in text.split(","))
    except ValueError:
        raise ConfigError(f"bad --dims {text!r}") from None


def cmd_tensor(args) -> int:
    if args.action == "inspect":
        t = ifmt.read(args.path)
        print(f"dims={','.join(map(str, t.dims))}")
        print(f"size={t.size}")
        print(f"zero_ratio={zero_ratio(t):.6f}")
        print("head=" + " ".join(f"{v:.9g}" for v in t.data[: args.head]))
    elif args.action == "dump":
        t = ifmt.read(args.path)
        sys.stdout.write("".join(f"{v!r}\n" for v in t.data.tolist()))
    elif args.action == "convert":
        dims = _parse_dims(args.dims)
        try:
            text = sys.stdin.read() if args.source == "-" else Path(args.source).read_text()
        except OSError as exc:
            raise FormatError(f"{args.source}: {exc.strerror or exc}") from exc
        try:
            values = [float(v) for v in re.split(r"[\s,]+", text.strip()) if v]
        except ValueError as exc:
            raise FormatError(f"{args.source}: {exc}") from exc
        ifmt.write(args.out, Tensor(dims, np.array(values, dtype=np.float32)))
    else:
        model, x = _load(args)
        for name, ifm in original_ifms(model, x).items():
            print(f"{name} dims={','.join(map(str, ifm.dims))} zero_ratio={zero_ratio(ifm):.6f}")
    return EXIT_OK


def cmd_toy(args) -> int:
    out = Path(args.out)
    path = save_model(toy_model(args.seed, args.classes), out)
    ifmt.write(out / "input.ifmt", toy_input(args.seed))
    print(f"model={path}")
    print(f"input={out / 'input.ifmt'}")
    return EXIT_OK


COMMANDS = {"infer": cmd_infer, "sweep": cmd_sweep, "control": cmd_control,
            "tensor": cmd_tensor, "toy": cmd_toy}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FormatError, OSError) as exc:
        print(f"ifmsan: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ParameterError, DimensionError, UndefinedRatioError) as exc:
        print(f"ifmsan: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
