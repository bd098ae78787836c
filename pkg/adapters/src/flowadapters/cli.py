"""CLI: run one adapter over a harness cell directory."""

from __future__ import annotations

import argparse
import sys

from flowadapters.adapt import AdapterError, adapt
from flowadapters.profiles import MODEL_PROFILES


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="flowadapters")
    parser.add_argument("--model", required=True, choices=sorted(MODEL_PROFILES))
    parser.add_argument("--frames", required=True, help="cell sequence directory (frame_*.png + manifest)")
    parser.add_argument("--weights-dir", default=None)
    parser.add_argument("--out", required=True, help="output flow file")
    args = parser.parse_args(argv)
    try:
        adapt(args.model, args.frames, args.out, weights_dir=args.weights_dir)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
