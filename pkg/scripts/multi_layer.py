#!/usr/bin/env python
"""Sweep one IFM while an upstream IFM is held at a fixed window size.

Prints eff_san, the accuracy-bin breakdown and the attenuation point (first
window after which the tracked probability stays below the threshold) for
each fixed window, so the effect of approximating two IFMs can be compared.

    python scripts/multi_layer.py --swept pool2 --fixed-layer conv2 --fixed-windows 1 3 5
"""
import argparse
import sys

from ifmsan import ifmt
from ifmsan.manifest import load_model, toy_input, toy_model
from ifmsan.metrics import accuracy_histogram, attenuation_threshold, eff_san, multi_layer_sweep
from ifmsan.sanitizer import SanitizationPlan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model")
    ap.add_argument("--input")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--swept", default="pool2")
    ap.add_argument("--fixed-layer", default="conv2")
    ap.add_argument("--fixed-windows", type=int, nargs="+", default=[1, 3, 5])
    ap.add_argument("--window-from", type=int, default=2)
    ap.add_argument("--window-to", type=int, default=150)
    ap.add_argument("--threshold", type=float, default=0.2)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    if args.model:
        model, x = load_model(args.model), ifmt.read(args.input)
    else:
        model, x = toy_model(args.seed), toy_input(args.seed)

    print(f"{'fixed':>16s} {'eff_san':>8s} {'[0,.2]':>7s} {'(.2,.8]':>8s} {'(.8,1]':>7s} {'below':>6s}")
    for n in args.fixed_windows:
        plan = SanitizationPlan({args.fixed_layer: n})
        recs = multi_layer_sweep(model, x, plan, args.swept, args.window_from, args.window_to,
                                 jobs=args.jobs)
        hist = accuracy_histogram(recs)
        at = attenuation_threshold(recs, args.threshold)
        print(f"{args.fixed_layer + '=' + str(n):>16s} {eff_san(recs):8.2f} {hist.low:7d} "
              f"{hist.mid:8d} {hist.high:7d} {('none' if at is None else at):>6}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
