"""Side-by-side rendering of synthetic-run results and the stored reference values."""
from __future__ import annotations

import math
from pathlib import Path

import pandas as pd

from .reference import REFERENCE, RefValue

COMPARISON_COLUMNS = ["key", "table", "quantity", "unit", "reference", "synthetic"]

_DIGITS = {"count": 0, "bps/month": 2, "t": 3, "p": 5, "percent": 2, "percent of row": 2, "ratio": 2, "rho": 2,
           "area": 4, "beta": 5}


def format_value(value, unit: str) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    v = float(value)
    if unit.startswith("percent"):
        v *= 100.0
    digits = _DIGITS.get(unit, 6)
    text = f"{v:.{digits}f}"
    if unit == "ratio":
        text += "x"
    elif unit.startswith("percent"):
        text += "%"
    return text


def comparison_table(synthetic: dict[str, float], reference: tuple[RefValue, ...] = REFERENCE) -> pd.DataFrame:
    """One row per reference value; ``synthetic`` maps the same keys to run results.

    Percent-unit synthetic values are given as fractions and rendered x100.
    """
    rows = [(r.key, r.table, r.quantity, r.unit, r.display, format_value(synthetic.get(r.key), r.unit))
            for r in reference]
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def render_text(table: pd.DataFrame, title: str = "Reference vs synthetic run") -> str:
    widths = {c: max(len(c), int(table[c].astype(str).str.len().max())) for c in ("quantity", "unit", "reference")}
    lines = [title, "=" * len(title), ""]
    for name, group in table.groupby("table", sort=False):
        lines.append(f"[{name}]")
        lines.append(f"  {'quantity':<{widths['quantity']}}  {'unit':<{widths['unit']}}  "
                     f"{'reference':>{widths['reference']}}  synthetic")
        for row in group.itertuples(index=False):
            lines.append(f"  {row.quantity:<{widths['quantity']}}  {row.unit:<{widths['unit']}}  "
                         f"{row.reference:>{widths['reference']}}  {row.synthetic}".rstrip())
        lines.append("")
    lines.append("Reference values come from proprietary data and are not expected to match the synthetic run.")
    return "\n".join(lines) + "\n"


def write_report(synthetic: dict[str, float], directory) -> dict[str, Path]:
    directory = Path(directory)
    table = comparison_table(synthetic)
    csv_path, txt_path = directory / "comparison.csv", directory / "report.txt"
    table.to_csv(csv_path, index=False, lineterminator="\n")
    txt_path.write_text(render_text(table), encoding="utf-8")
    return {"comparison": csv_path, "report": txt_path}
