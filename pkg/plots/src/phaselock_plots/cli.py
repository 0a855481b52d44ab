"""The ``plots`` command: timeline and zoom renders of run CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot_timeline, plot_zoom
from .reader import RangeError, SchemaError

# steady-state zoom default; the transition close-up spans 454-479 s
DEFAULT_ZOOM = (487.0, 601.0)


def _parse_interval(text: str) -> tuple[float, float]:
    try:
        start, end = text.split(":")
        return float(start), float(end)
    except ValueError as exc:
        raise ValueError(f"bad interval {text!r}; expected start:end") from exc


def _parse_markers(text: str | None) -> tuple[float, ...]:
    if not text:
        return ()
    return tuple(float(part) for part in text.split(",") if part.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from phaselock run CSVs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("timeline", help="counts + stretcher output over the run")
    p.add_argument("--input", action="append", required=True,
                   help="run CSV (repeat for side-by-side panels)")
    p.add_argument("--title", action="append", default=None,
                   help="panel title per input")
    p.add_argument("--out", required=True, help="output image path")
    p.set_defaults(kind="timeline")

    p = sub.add_parser("zoom", help="interval close-up with noise band")
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--interval", default=None,
                   help=f"start:end seconds (default "
                        f"{DEFAULT_ZOOM[0]:.0f}:{DEFAULT_ZOOM[1]:.0f})")
    p.add_argument("--channel", action="append", default=None,
                   choices=["cc_tg_d1", "cc_tg_d2"])
    p.add_argument("--markers", default=None,
                   help="comma list of times to mark (e.g. t10,t90)")
    p.add_argument("--title", action="append", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(kind="zoom")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "timeline":
            spec = PlotSpec(
                inputs=tuple(args.input),
                out=args.out,
                titles=tuple(args.title or ()),
            )
            path = plot_timeline(spec)
        else:
            interval = (
                _parse_interval(args.interval) if args.interval else DEFAULT_ZOOM
            )
            spec = PlotSpec(
                inputs=tuple(args.input),
                out=args.out,
                interval=interval,
                channels=tuple(args.channel) if args.channel else ("cc_tg_d1", "cc_tg_d2"),
                markers=_parse_markers(args.markers),
                titles=tuple(args.title or ()),
            )
            path = plot_zoom(spec)
    except (SchemaError, RangeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
