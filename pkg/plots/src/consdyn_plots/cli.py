"""Command-line figure renderer for simulation run directories.

Exit codes: 0 on success (including skipped kinds), 2 on bad arguments or
artifact files that violate the documented schemas.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureKind, render_figures
from .reader import PlotsError

_KIND_NAMES = ", ".join(kind.value for kind in FigureKind)


def parse_kinds(text: str | None) -> list[FigureKind]:
    """Comma-separated kind names; None means all, '' means none."""
    if text is None:
        return list(FigureKind)
    names = [part.strip() for part in text.split(",") if part.strip()]
    kinds = []
    for name in names:
        try:
            kinds.append(FigureKind(name.lower()))
        except ValueError:
            raise PlotsError(f"unknown figure kind {name!r}; "
                             f"choose from {_KIND_NAMES}") from None
    return kinds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consdyn-plots",
        description="Render figures from a simulation run directory.")
    parser.add_argument("--run", required=True,
                        help="run directory (or a directory of runs, for "
                             "the across-meshes overlay)")
    parser.add_argument("--kinds",
                        help=f"comma-separated subset of: {_KIND_NAMES} "
                             "(default: all; empty string: none)")
    parser.add_argument("--format", choices=("png", "svg"), default="png",
                        help="image format (default png)")
    parser.add_argument("--out-dir", dest="out_dir",
                        help="where to write images (default: the run "
                             "directory)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        kinds = parse_kinds(args.kinds)
        written = render_figures(args.run, kinds, fmt=args.format,
                                 out_dir=args.out_dir,
                                 notify=lambda msg: print(msg))
    except PlotsError as exc:
        print(f"consdyn-plots: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
