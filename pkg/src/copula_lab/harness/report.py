"""CSV, JSON and SVG output for study results."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..errors import ConfigError
from .result import StudyResult

W, H, PAD = 640, 420, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def records_csv(result: StudyResult) -> str:
    keys = []
    for rec in result.records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for rec in result.records:
        writer.writerow(rec)
    return buf.getvalue()


def _plot_series(result: StudyResult):
    """``(title, xlabel, ylabel, log axes, [(label, xs, ys)])`` for the study kind."""
    s = result.summary
    kind = result.kind
    if kind == "convergence":
        per = s["per_n"]
        xs = [e["n"] for e in per]
        series = [("median sup|C_n - C|", xs, [e["median"] for e in per])]
        ref = per[0]["median"]
        series.append(("slope -1/2", xs, [ref * (x / xs[0]) ** -0.5 for x in xs]))
        return "Convergence rate", "n", "median sup deviation", True, series
    if kind == "distribution":
        qs = sorted(s["field_quantiles"], key=float)
        series = []
        for e in s["per_n"]:
            series.append((f"n={e['n']}", [s["field_quantiles"][q] for q in qs], [e["sup_an_quantiles"][q] for q in qs]))
        lo = min(min(x) for _, x, _ in series)
        hi = max(max(x) for _, x, _ in series)
        series.append(("identity", [lo, hi], [lo, hi]))
        return "Quantiles: sup|A_n| against sup|K*|", "sup|K*| quantile", "sup|A_n| quantile", False, series
    if kind == "lil":
        per = s["per_n"]
        xs = [e["n"] for e in per]
        series = [("median running ratio", xs, [e["median"] for e in per]), ("rho", xs, [s["rho"]] * len(xs))]
        return "Running LIL ratio", "n", "ratio", True, series
    if kind == "smoothing":
        per = s["per_n"]
        xs = [e["n"] for e in per]
        series = []
        for t in ("sup_diff", "nabla1", "nabla2", "nabla3", "nabla4"):
            ys = [e[t]["median"] for e in per]
            if all(y > 0 for y in ys):
                series.append((t, xs, ys))
        return "Smoothing error terms", "n", "median sup", True, series
    per = s["per_n"]
    xs = [e["n"] for e in per]
    return "Scaled rank statistic spread", "n", "sd", True, [("sd", xs, [e["sd"] or 0.0 for e in per])]


def render_svg(result: StudyResult) -> str:
    title, xlabel, ylabel, logscale, series = _plot_series(result)
    tf = math.log10 if logscale else (lambda v: v)
    pts = [(tf(x), tf(y)) for _, xs, ys in series for x, y in zip(xs, ys) if not logscale or (x > 0 and y > 0)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"{escape(xlabel + (' (log10)' if logscale else ''))}</text>",
        f'<text x="15" y="{H / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {H / 2})">{escape(ylabel + (" (log10)" if logscale else ""))}</text>',
    ]
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(
            f'<text x="{sx(v):.1f}" y="{H - PAD + 16}" text-anchor="{anchor}" font-family="sans-serif" '
            f'font-size="10">{v:.3g}</text>'
        )
    for v in (y0, y1):
        out.append(
            f'<text x="{PAD - 4}" y="{sy(v):.1f}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3g}</text>'
        )
    for k, (label, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        coords = [(sx(tf(x)), sy(tf(y))) for x, y in zip(xs, ys) if not logscale or (x > 0 and y > 0)]
        if coords:
            path = " ".join(f"{a:.2f},{b:.2f}" for a, b in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for a, b in coords:
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{W - PAD - 150}" y="{PAD + 16 * k}" font-family="sans-serif" font-size="11" fill="{color}">'
            f"{escape(label)}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(result: StudyResult, fmt: str, out_dir, stem: str | None = None) -> Path:
    """Write one report file and return its path."""
    fmt = fmt.lower()
    stem = stem or result.kind
    out_dir = Path(out_dir)
    if fmt == "json":
        return _write(out_dir / f"{stem}.json", result.to_json() + "\n")
    if fmt == "csv":
        return _write(out_dir / f"{stem}.csv", records_csv(result))
    if fmt == "svg":
        return _write(out_dir / f"{stem}.svg", render_svg(result))
    raise ConfigError(f"unknown report format {fmt!r}")
