"""Batch figure rendering.

Either point ``--spec`` at a JSON file holding one figure spec (or a
list of them), or use the per-figure convenience flags that map the
engine's standard products onto the four figure kinds::

    resurp-figures --fig1 fig1.csv --fig2 fig2_bottom.csv \\
                   --fig3 fig3.csv --fig4 fig4_points.csv --out-dir figs/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from resurp_figures.render import FigureSpec, render

_CONVENIENCE = {
    "fig1": ("trajectory", "fig1.png"),
    "fig2": ("grid", "fig2.png"),
    "fig3": ("overlay", "fig3.png"),
    "fig4": ("scatter", "fig4.png"),
}


def _specs_from_json(path: Path) -> list:
    raw = json.loads(path.read_text())
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise ValueError("figure spec file must hold an object or a list of objects")
    return [FigureSpec(**entry) for entry in raw]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resurp-figures",
        description="Render trajectory, grid, overlay and scatter figures from engine CSVs.",
    )
    parser.add_argument("--spec", type=Path, help="JSON figure spec (object or list)")
    parser.add_argument("--fig1", type=Path, help="trajectory records CSV")
    parser.add_argument("--fig2", type=Path, help="effect rows CSV (fig2_bottom)")
    parser.add_argument("--fig3", type=Path, help="records-with-predictions CSV")
    parser.add_argument("--fig4", type=Path, help="fit points CSV")
    parser.add_argument("--out-dir", type=Path, default=Path("."),
                        help="output directory for convenience flags")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    specs = []
    try:
        if args.spec:
            specs.extend(_specs_from_json(args.spec))
        for name, (kind, filename) in _CONVENIENCE.items():
            source = getattr(args, name)
            if source:
                specs.append(
                    FigureSpec(kind=kind, input=source, output=args.out_dir / filename)
                )
        if not specs:
            build_parser().error("nothing to render: pass --spec or a per-figure flag")
        for spec in specs:
            result = render(spec)
            note = (
                f" (log-log omitted {result.dropped_rows} nonpositive)"
                if spec.kind == "scatter"
                else ""
            )
            print(f"wrote {result.path}{note}")
            plt.close(result.figure)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
