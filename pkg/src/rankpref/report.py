"""CSV and SVG output for discordance reports."""

from __future__ import annotations

import csv
import os
from html import escape

from rankpref.harness import DiscordanceReport

COLUMNS = ("dataset", "method", "r_hi", "r_lo", "n_pairs", "discordant", "concordant", "ties",
           "skipped", "kendall_tau", "rmse_withheld")

_PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3",
            "#8c8c8c")


def _fmt(value):
    if isinstance(value, float):
        return f"{value:g}" if value.is_integer() else repr(value)
    return str(value)


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_csv(reports, path):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rep in reports:
            writer.writerow([
                rep.dataset, rep.method, _fmt(float(rep.r_hi)), _fmt(float(rep.r_lo)),
                rep.n_pairs, rep.discordant, rep.concordant, rep.ties, rep.skipped,
                repr(float(rep.kendall_tau)), repr(float(rep.rmse_withheld)),
            ])


def read_csv(path):
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for row in reader:
            out.append(DiscordanceReport(
                dataset=row["dataset"], method=row["method"], r_hi=float(row["r_hi"]),
                r_lo=float(row["r_lo"]), n_pairs=int(row["n_pairs"]),
                discordant=int(row["discordant"]), concordant=int(row["concordant"]),
                ties=int(row["ties"]), skipped=int(row["skipped"]),
                kendall_tau=float(row["kendall_tau"]), rmse_withheld=float(row["rmse_withheld"]),
            ))
    return out


def render_svg(reports, title="Discordant withheld pairs"):
    """Grouped bars of discordant counts, one panel per rating gap."""
    gaps = list(dict.fromkeys((r.r_hi, r.r_lo) for r in reports))
    methods = list(dict.fromkeys(r.method for r in reports))
    colour = {m: _PALETTE[k % len(_PALETTE)] for k, m in enumerate(methods)}
    cells = {((r.r_hi, r.r_lo), r.method): r for r in reports}
    top = max(r.discordant for r in reports) or 1

    bar_w, pad, plot_h = 22, 16, 220
    panel_w = pad * 2 + bar_w * len(methods)
    width = 60 + panel_w * len(gaps) + 20
    legend_h = 18 * len(methods)
    height = 50 + plot_h + 40 + legend_h + 10
    base = 50 + plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:g}" y="22" text-anchor="middle" font-size="14">'
        f'{escape(title)}</text>',
        f'<line x1="55" y1="50" x2="55" y2="{base}" stroke="black"/>',
        f'<text x="50" y="{base}" text-anchor="end">0</text>',
        f'<text x="50" y="58" text-anchor="end">{top}</text>',
    ]
    for g, gap in enumerate(gaps):
        x0 = 60 + g * panel_w
        parts.append(f'<line x1="{x0}" y1="{base}" x2="{x0 + panel_w - 4}" y2="{base}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{x0 + (panel_w - 4) / 2:g}" y="{base + 18}" '
                     f'text-anchor="middle">{gap[0]:g} vs {gap[1]:g}</text>')
        for k, method in enumerate(methods):
            rep = cells.get((gap, method))
            if rep is None:
                continue
            h = plot_h * rep.discordant / top
            x = x0 + pad + k * bar_w
            parts.append(
                f'<rect x="{x}" y="{base - h:.3f}" width="{bar_w - 4}" height="{h:.3f}" '
                f'fill="{colour[method]}"><title>{escape(method)}: {rep.discordant} of '
                f'{rep.n_pairs - rep.skipped}</title></rect>')
    for k, method in enumerate(methods):
        y = base + 36 + 18 * k
        parts.append(f'<rect x="60" y="{y - 10}" width="12" height="12" '
                     f'fill="{colour[method]}"/>')
        parts.append(f'<text x="78" y="{y}">{escape(method)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(reports, fmt, path, **kwargs):
    if not reports:
        raise ValueError("empty report table")
    if fmt == "csv":
        write_csv(reports, path)
    elif fmt == "svg":
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_svg(reports, **kwargs))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
