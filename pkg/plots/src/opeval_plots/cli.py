"""Command line: render one figure from a sweep results CSV."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot_cdf, plot_convergence


def _split(raw: str | None) -> tuple[str, ...]:
    if not raw:
        return ()
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def build_spec(argv) -> FigureSpec:
    parser = argparse.ArgumentParser(
        prog="opeval-plots",
        description="Render figures from opeval sweep result CSVs.",
    )
    parser.add_argument("--kind", choices=["cdf", "convergence"], required=True)
    parser.add_argument("--csv", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--estimators", default=None,
                        help="comma-separated subset (default: all)")
    parser.add_argument("--datasets", default=None,
                        help="comma-separated subset (default: all)")
    args = parser.parse_args(argv)
    return FigureSpec(
        csv_path=args.csv,
        kind=args.kind,
        out_path=args.out,
        estimators=_split(args.estimators),
        datasets=_split(args.datasets),
    )


def cli_dispatch(argv) -> int:
    try:
        spec = build_spec(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        path = plot_cdf(spec) if spec.kind == "cdf" else plot_convergence(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
