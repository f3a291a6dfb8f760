#!/usr/bin/env python
"""Sweep every IFM of a model and print an efficiency table.

For each layer: eff_san over the window range, distinct probabilities per
accuracy bin, and the zero ratio of the original IFM. Defaults to the seeded
toy CNN; pass --model/--input to use dumped weights and tensors instead.

    python scripts/layer_table.py --seed 0 --out results/toy_seed0
"""
import argparse
import sys
from pathlib import Path

from ifmsan import ifmt
from ifmsan.manifest import load_model, toy_input, toy_model
from ifmsan.metrics import accuracy_histogram, eff_san, sweep, window_range, write_sweep_csv
from ifmsan.nn import infer, original_ifms, top_class
from ifmsan.tensor import zero_ratio


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model")
    ap.add_argument("--input")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--window-from", type=int, default=2)
    ap.add_argument("--window-to", type=int, default=150)
    ap.add_argument("--precision", type=int, default=6)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="directory for per-layer sweep CSVs")
    args = ap.parse_args(argv)

    if args.model:
        model, x = load_model(args.model), ifmt.read(args.input)
    else:
        model, x = toy_model(args.seed), toy_input(args.seed)
    label, p0 = top_class(infer(model, x))
    print(f"# tracked class {label}, original probability {p0:.6f}")
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    ifms = original_ifms(model, x)
    print(f"{'IFM':8s} {'eff_san':>8s} {'distinct':>9s} {'[0,.2]':>7s} {'(.2,.8]':>8s} "
          f"{'(.8,1]':>7s} {'zeros':>7s} {'samples':>8s}")
    for name in model.names:
        recs = sweep(model, x, name, args.window_from, args.window_to, jobs=args.jobs)
        hist = accuracy_histogram(recs, args.precision)
        print(f"{name:8s} {eff_san(recs, args.precision):8.2f} "
              f"{hist.total:>4d}/{window_range(recs):<4d} {hist.low:7d} {hist.mid:8d} {hist.high:7d} "
              f"{zero_ratio(ifms[name]):7.2f} {ifms[name].size:8d}")
        if out:
            write_sweep_csv(recs, out / f"{name}.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
