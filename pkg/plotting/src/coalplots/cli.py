"""Render a figure spec: plot --spec <file> --out <png/svg>."""

from __future__ import annotations

import argparse
import sys

from .figspec import SpecError, load_spec
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("--spec", required=True, help="figure spec file")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        render(spec, args.out)
    except (SpecError, ValueError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
