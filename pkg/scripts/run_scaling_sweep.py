#!/usr/bin/env python3
"""Sweep the optimized precision bounds against probe count.

Writes the data series behind the precision-scaling figure: the
state-independent bound, the GHZ protocol, and the Markovian/noiseless
references on a log-spaced N grid.

Usage:
    python3 scripts/run_scaling_sweep.py --out scaling.csv [--T 1.0]
"""

import argparse
import sys

from dephasing_metrology import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="scaling.csv")
    parser.add_argument("--T", type=float, default=1.0)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    argv = ["figures", "fig1_left", "--T", str(args.T), "--out", args.out]
    if args.quick:
        argv.append("--quick")
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
