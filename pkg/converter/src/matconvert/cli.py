"""Command line: ``convert --in <dir> --out <dir> [--channel de|fe|ba]``."""

import argparse
import os
import sys

from .convert import convert_directory
from .mapping import CHANNEL_ORDER, ConversionMap


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mat2tsg",
        description="Convert MAT-container bearing recordings into TSG1 binaries "
        "plus a manifest.json",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("convert", help="convert a directory of .mat files")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of .mat files")
    p.add_argument("--out", dest="out_dir", required=True, help="output directory")
    p.add_argument(
        "--channel",
        choices=CHANNEL_ORDER,
        default="de",
        help="preferred accelerometer channel (default: drive end)",
    )
    p.add_argument(
        "--rate",
        type=int,
        default=12000,
        help="sampling rate in Hz recorded in the output headers",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not os.path.isdir(args.in_dir):
        print(f"error: {args.in_dir!r} is not a directory", file=sys.stderr)
        return 2
    if args.rate < 1:
        print("error: --rate must be positive", file=sys.stderr)
        return 2
    converted = convert_directory(
        args.in_dir, args.out_dir, ConversionMap(preferred_channel=args.channel), args.rate
    )
    if not converted:
        print("error: no files converted", file=sys.stderr)
        return 2
    labels = sorted({c.label for c in converted})
    print(f"converted {len(converted)} recordings, labels {labels}")
    return 0


def entry():  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    entry()
