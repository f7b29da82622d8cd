"""plotviz command line: render simulator CSV outputs into figures.

Usage: plotviz <kind> --in [label=]path [--in ...] --out image
       [--manifest manifest.json] [--direction UPLINK|DOWNLINK]
       [--vmin dB] [--vmax dB] [--title text]
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .io import CsvFormatError
from .render import KINDS, PlotJob, render


def _parse_input(raw: str) -> tuple[str, Path]:
    if "=" in raw:
        label, path = raw.split("=", 1)
        return label, Path(path)
    p = Path(raw)
    return p.stem, p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotviz", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="[LABEL=]PATH", help="input CSV, repeatable for bars")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--manifest", default=None, help="run manifest for overlays")
    parser.add_argument("--direction", default="UPLINK", choices=["UPLINK", "DOWNLINK"])
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        job = PlotJob(
            kind=args.kind,
            inputs=[_parse_input(raw) for raw in args.inputs],
            out=Path(args.out),
            manifest=None if args.manifest is None else Path(args.manifest),
            direction=args.direction,
            vmin=args.vmin,
            vmax=args.vmax,
            title=args.title,
            dpi=args.dpi,
        )
        out = render(job)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CsvFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
