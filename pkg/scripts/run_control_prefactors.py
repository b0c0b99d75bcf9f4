#!/usr/bin/env python3
"""Compute the short-time control prefactor K by all three routes.

Tabulates the gamma-function closed form, the moment-determinant brute
force, and the high-precision numeric short-time limit for spectral
exponents s in {0, 1, 2}, plus the fitted growth exponents.

Usage:
    python3 scripts/run_control_prefactors.py --out kq.csv [--quick]
"""

import argparse
import sys

from dephasing_metrology import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="kq.csv")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()
    argv = ["kq", "--out", args.out]
    if args.quick:
        argv.append("--quick")
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
