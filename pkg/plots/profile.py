#!/usr/bin/env python3
"""Profile modulus with its envelope overlay on the positive branch.

Usage: plots/profile.py <profile.csv> [<more.csv> ...] <out.png>
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import figlib


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 64
    return figlib.main_render(argv[:-1], argv[-1], "profile")


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
