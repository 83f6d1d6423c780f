"""Command line entry point: convert checkpoints to a codec weight file."""

import argparse
import re
import sys

from .errors import ExportError
from .export import export_weights, manifest_path_for


def _slug(exc):
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gwct-export",
        description="Convert a VGG-19 encoder checkpoint and five mirrored "
        "decoder checkpoints into a weight file for the neural codec.",
    )
    parser.add_argument("--encoder", required=True, help="encoder checkpoint (.pth)")
    parser.add_argument(
        "--decoders",
        nargs=5,
        required=True,
        metavar="DECODER",
        help="five decoder checkpoints, levels 1 through 5 in order",
    )
    parser.add_argument("--out", required=True, help="output weight file path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        manifest = export_weights(args.encoder, args.decoders, args.out)
    except (ExportError, OSError) as exc:
        print(f"ERROR {_slug(exc)}: {exc}", file=sys.stderr)
        return 2
    print(f"weights written to {args.out}")
    print(f"manifest written to {manifest_path_for(args.out)}")
    print("level channels: " + " ".join(str(c) for c in manifest["level_channels"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
