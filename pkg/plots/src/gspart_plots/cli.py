"""Script entry point: ``plot timeseries ...`` and ``plot nodemap ...``."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, SchemaError, plot_node_map, plot_timeseries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot")
    sub = parser.add_subparsers(dest="command", required=True)

    ts = sub.add_parser("timeseries", help="MSE-vs-time curves per method")
    ts.add_argument("--in", dest="metrics", required=True,
                    help="CSV with columns t,method,mse_db")
    ts.add_argument("--out", required=True, help="output image path")
    ts.add_argument("--mark-every", type=int, default=None,
                    help="vertical dashed markers at multiples of this step")
    ts.add_argument("--dpi", type=int, default=100)

    nm = sub.add_parser("nodemap", help="node scatter coloured by error")
    nm.add_argument("--coords", required=True, help="CSV with node,x,y")
    nm.add_argument("--errors", required=True, help="CSV with node,abs_error")
    nm.add_argument("--partition", required=True, help="CSV with subset_id,node_id")
    nm.add_argument("--subset", type=int, default=1,
                    help="subset to circle (default 1)")
    nm.add_argument("--out", required=True)
    nm.add_argument("--dpi", type=int, default=100)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "timeseries":
            spec = PlotSpec(kind="timeseries", out_path=args.out,
                            inputs={"metrics": args.metrics},
                            mark_every=args.mark_every, dpi=args.dpi)
            out = plot_timeseries(spec)
        else:
            spec = PlotSpec(kind="node-map", out_path=args.out,
                            inputs={"coords": args.coords, "errors": args.errors,
                                    "partition": args.partition},
                            subset_id=args.subset, dpi=args.dpi)
            out = plot_node_map(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
