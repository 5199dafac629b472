#!/usr/bin/env python3
"""Emit all six diagram analogs as SVG files.

The first five use the embedded Newcastle table; the hull figure needs at
least three strata, so it runs on a synthetic four-stratum table (the
four-age-group counts behind the published figure are not public).

Usage: python scripts/make_figures.py [output_dir]
"""

import sys
from pathlib import Path

from rothman.render import (
    figure_collapsible,
    figure_contours,
    figure_hull,
    figure_modconf,
    figure_modification,
    figure_noncollapsible,
    render_svg,
)
from rothman.tables import CellCounts, StratifiedTable, Stratum, newcastle_fixture

SYNTHETIC_FOUR_STRATA = StratifiedTable(
    (
        Stratum("18-44", exposed=CellCounts(31, 412), unexposed=CellCounts(19, 377)),
        Stratum("45-54", exposed=CellCounts(44, 310), unexposed=CellCounts(33, 335)),
        Stratum("55-64", exposed=CellCounts(63, 245), unexposed=CellCounts(52, 270)),
        Stratum("65+", exposed=CellCounts(42, 49), unexposed=CellCounts(165, 193)),
    )
)


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("figures")
    out_dir.mkdir(parents=True, exist_ok=True)
    table = newcastle_fixture()
    figures = {
        "fig1_contours.svg": figure_contours(),
        "fig2_modification.svg": figure_modification(table),
        "fig3_modconf.svg": figure_modconf(table),
        "fig4_collapsible.svg": figure_collapsible(table),
        "fig5_noncollapsible.svg": figure_noncollapsible(table),
        "fig6_hull.svg": figure_hull(SYNTHETIC_FOUR_STRATA),
    }
    for name, spec in figures.items():
        path = out_dir / name
        path.write_text(render_svg(spec), encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
