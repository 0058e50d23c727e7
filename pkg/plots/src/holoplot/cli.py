"""Command-line front end: `holoplot plot <spec.json>`.

Exit codes: 0 success, 2 spec/schema error (with column diagnostics on
stderr), 1 unexpected rendering failure.  Inputs are never modified; the
output image is replaced atomically.
"""

from __future__ import annotations

import argparse
import sys


def main(argv=None):
    parser = argparse.ArgumentParser(prog="holoplot", description="Render figures from holodrive CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure from a plot-spec JSON")
    plot.add_argument("spec", help="path to the plot-spec JSON")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    from .render import SchemaError, load_spec, render

    try:
        spec = load_spec(args.spec)
        output = render(spec)
    except SchemaError as exc:
        print(f"holoplot: schema: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # rendering bug or I/O failure
        print(f"holoplot: render: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
