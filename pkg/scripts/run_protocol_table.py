#!/usr/bin/env python3
"""Fit the precision-scaling table of the standard input families.

For each input family (coherent, two one-axis-twisted variants, GHZ) and
noise regime (quadratic colored, white, noiseless), fits the power law
Delta-b ~ prefactor * N^exponent over a log-spaced N grid.

Usage:
    python3 scripts/run_protocol_table.py --out table.csv [--quick]
"""

import argparse
import sys

from dephasing_metrology import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="table.csv")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    argv = ["table1", "--out", args.out]
    if args.quick:
        argv.append("--quick")
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
