"""salab-fig: render figures from salab CSV outputs."""

from __future__ import annotations

import argparse
import sys

from .plots import (plot_acf, plot_convergence, plot_phase_diagram,
                    plot_sample_grid, plot_spectrum)
from .spec import SchemaError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="salab-fig")
    sub = ap.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("spectrum")
    p.add_argument("csv")
    p.add_argument("--out", required=True, help="output stem (.png/.pdf added)")

    p = sub.add_parser("phase-diagram")
    p.add_argument("csv")
    p.add_argument("--out", required=True)

    p = sub.add_parser("convergence")
    p.add_argument("chains_csv")
    p.add_argument("reference_csv")
    p.add_argument("--summary", default=None,
                   help="summary CSV providing the KS annotation")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample-grid")
    p.add_argument("csv")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("acf")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "spectrum":
            written = plot_spectrum(args.csv, args.out)
        elif args.kind == "phase-diagram":
            written = plot_phase_diagram(args.csv, args.out)
        elif args.kind == "convergence":
            written = plot_convergence(args.chains_csv, args.reference_csv,
                                       args.out, summary_csv=args.summary)
        elif args.kind == "sample-grid":
            written = plot_sample_grid(args.csv, args.rows, args.cols, args.out)
        else:
            written = plot_acf(args.csv, args.out)
    except SchemaError as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
