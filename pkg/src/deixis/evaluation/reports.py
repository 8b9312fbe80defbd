"""Report rendering: machine CSV, a fixed-width text table and an SVG bar chart."""
from __future__ import annotations

import csv
import io
from typing import Sequence
from xml.sax.saxutils import escape

from ..qa.templates import TaskCategory
from .scoring import ScoreReport

AVERAGE = "Average"


def _categories(reports: Sequence[ScoreReport]) -> list:
    present = {c for r in reports for c in r.per_category}
    return [c.value for c in TaskCategory if c.value in present]


def report_csv(report: ScoreReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category", "accuracy", "n"])
    for cat in _categories([report]):
        row = report.per_category[cat]
        w.writerow([cat, f"{row['accuracy']:.4f}", row["n"]])
    w.writerow([AVERAGE, f"{report.average:.4f}", sum(v["n"] for v in report.per_category.values())])
    return buf.getvalue()


def text_table(reports: Sequence[ScoreReport]) -> str:
    cats = _categories(reports)
    head = ["model"] + cats + ["Avg."]
    rows = []
    for r in reports:
        cells = [r.label]
        for c in cats:
            cells.append(f"{r.per_category[c]['accuracy']:.1f}" if c in r.per_category else "-")
        cells.append(f"{r.average:.1f}")
        rows.append(cells)
    widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]

    def fmt(cells):
        return "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))

    lines = [fmt(head), "  ".join("-" * w for w in widths)]
    lines.extend(fmt(r) for r in rows)
    invalid = [f"{r.label}={r.invalid_count}" for r in reports if r.invalid_count]
    if invalid:
        lines.append("invalid outputs: " + ", ".join(invalid))
    return "\n".join(lines) + "\n"


_PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


def svg_chart(reports: Sequence[ScoreReport], width: int = 720, height: int = 320) -> str:
    """Grouped bars, one group per category, one bar per report; y axis 0..100."""
    cats = _categories(reports) + [AVERAGE]
    left, bottom, top = 40, 40, 20
    plot_w, plot_h = width - left - 10, height - bottom - top
    group = plot_w / max(1, len(cats))
    bar = group * 0.8 / max(1, len(reports))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in (0, 25, 50, 75, 100):
        y = top + plot_h * (1 - tick / 100)
        out.append(f'<text x="{left - 4}" y="{y + 4:.1f}" text-anchor="end">{tick}</text>')
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" stroke="#ddd"/>')
    for gi, cat in enumerate(cats):
        x0 = left + gi * group + group * 0.1
        for ri, r in enumerate(reports):
            acc = r.average if cat == AVERAGE else r.per_category.get(cat, {}).get("accuracy")
            if acc is None:
                continue
            h = plot_h * acc / 100
            color = _PALETTE[ri % len(_PALETTE)]
            out.append(
                f'<rect x="{x0 + ri * bar:.1f}" y="{top + plot_h - h:.1f}" width="{bar:.1f}" height="{h:.1f}" fill="{color}">'
                f"<title>{escape(r.label)} {escape(cat)}: {acc:.1f}</title></rect>"
            )
        out.append(f'<text x="{x0 + group * 0.4:.1f}" y="{top + plot_h + 14}" text-anchor="middle">{escape(cat)}</text>')
    for ri, r in enumerate(reports):
        x = left + 10 + ri * 110
        out.append(f'<rect x="{x}" y="{height - 16}" width="10" height="10" fill="{_PALETTE[ri % len(_PALETTE)]}"/>')
        out.append(f'<text x="{x + 14}" y="{height - 7}">{escape(r.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def report_from_dict(d: dict) -> ScoreReport:
    return ScoreReport(
        {k: {"accuracy": float(v["accuracy"]), "n": int(v["n"])} for k, v in d["per_category"].items()},
        float(d["average"]),
        int(d.get("invalid_count", 0)),
        d.get("label", "main"),
    )
