#!/usr/bin/env python3
"""Energy blow-up on log-log axes with the -(2+r)/(2r) reference slope
read from the run manifest next to the CSV.

Usage: plots/energy.py <energy.csv> <out.png>
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import figlib


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 64
    return figlib.main_render(argv[:-1], argv[-1], "energy")


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
