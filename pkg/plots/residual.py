#!/usr/bin/env python3
"""Fixed-point residual histories from one or more solve reports.

Usage: plots/residual.py <report.json> [<more.json> ...] <out.png>
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import figlib


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 64
    return figlib.main_render(argv[:-1], argv[-1], "residual")


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
