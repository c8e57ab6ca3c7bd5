"""Static SVG panels of error-vs-sample-count curves.

Plots are derived artifacts regenerable from the results CSV alone; rendering
is plain SVG 1.1 polylines with no plotting dependency.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path

__all__ = ["plot_results", "render_line_plot"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 40, 48

_MARKOV_PANELS = (
    ("err_D", "feedthrough error"),
    ("err_CB", "first response error"),
    ("spec_err_G", "Markov matrix error"),
    ("spec_err_H", "Hankel matrix error"),
)


def _decades(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


def render_line_plot(curves, title: str, xlabel: str, ylabel: str) -> str:
    """SVG document for log-log curves.

    ``curves`` is a list of (label, xs, ys, dashed) tuples; points with
    nonpositive coordinates are dropped (log axes).  Single-point curves get
    markers without line segments.
    """
    cleaned = []
    for label, xs, ys, dashed in curves:
        pts = [(x, y) for x, y in zip(xs, ys)
               if x is not None and y is not None and x > 0 and y > 0
               and math.isfinite(x) and math.isfinite(y)]
        if pts:
            cleaned.append((label, pts, dashed))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]
    if not cleaned:
        parts.append(f'<text x="{_WIDTH / 2}" y="{_HEIGHT / 2}" text-anchor="middle" '
                     f'font-size="14" font-family="sans-serif">no positive data</text></svg>')
        return "\n".join(parts)

    all_x = [p[0] for _, pts, _ in cleaned for p in pts]
    all_y = [p[1] for _, pts, _ in cleaned for p in pts]
    lx0, lx1 = math.log10(min(all_x)), math.log10(max(all_x))
    ly0, ly1 = math.log10(min(all_y)), math.log10(max(all_y))
    lx0, lx1 = lx0 - 0.05 * (lx1 - lx0 + 0.1), lx1 + 0.05 * (lx1 - lx0 + 0.1)
    ly0, ly1 = ly0 - 0.05 * (ly1 - ly0 + 0.1), ly1 + 0.05 * (ly1 - ly0 + 0.1)
    x_span = _WIDTH - _MARGIN_L - _MARGIN_R
    y_span = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(v: float) -> float:
        return _MARGIN_L + (math.log10(v) - lx0) / (lx1 - lx0) * x_span

    def sy(v: float) -> float:
        return _HEIGHT - _MARGIN_B - (math.log10(v) - ly0) / (ly1 - ly0) * y_span

    axis_y = _HEIGHT - _MARGIN_B
    parts.append(f'<line x1="{_MARGIN_L}" y1="{axis_y}" x2="{_WIDTH - _MARGIN_R}" '
                 f'y2="{axis_y}" stroke="black"/>')
    parts.append(f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
                 f'y2="{axis_y}" stroke="black"/>')
    for d in _decades(10 ** lx0, 10 ** lx1):
        if lx0 <= d <= lx1:
            x = _MARGIN_L + (d - lx0) / (lx1 - lx0) * x_span
            parts.append(f'<line x1="{x:.1f}" y1="{axis_y}" x2="{x:.1f}" '
                         f'y2="{axis_y + 5}" stroke="black"/>')
            parts.append(f'<text x="{x:.1f}" y="{axis_y + 18}" text-anchor="middle" '
                         f'font-size="11" font-family="sans-serif">1e{d}</text>')
    for d in _decades(10 ** ly0, 10 ** ly1):
        if ly0 <= d <= ly1:
            y = _HEIGHT - _MARGIN_B - (d - ly0) / (ly1 - ly0) * y_span
            parts.append(f'<line x1="{_MARGIN_L - 5}" y1="{y:.1f}" x2="{_MARGIN_L}" '
                         f'y2="{y:.1f}" stroke="black"/>')
            parts.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end" '
                         f'font-size="11" font-family="sans-serif">1e{d}</text>')
    parts.append(f'<text x="{_WIDTH / 2}" y="{_HEIGHT - 10}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="16" y="{_HEIGHT / 2}" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif" transform="rotate(-90 16 {_HEIGHT / 2})">'
                 f'{ylabel}</text>')

    for idx, (label, pts, dashed) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        dash = ' stroke-dasharray="6 3"' if dashed else ""
        if len(pts) >= 2:
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                         f'stroke-width="1.5"{dash}/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = _MARGIN_T + 14 + 16 * idx
        lx = _WIDTH - _MARGIN_R - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.5"{dash}/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def _fmt_level(value: float) -> str:
    return format(value, "g")


def plot_results(rows: list[dict], kind: str, out_dir,
                 bound_overlay: bool = False) -> list[Path]:
    """Render SVG panels from result rows and return the written paths.

    ``kind="markov"`` emits one panel per matrix-error quantity (feedthrough,
    first response, Markov matrix, Hankel matrix) at the largest horizon in
    the table, one curve per noise level, optionally overlaying the dashed
    theory-bound curve.  ``kind="hinf"`` emits one panel per noise level with
    one normalized system-error curve per horizon.  An empty table is a no-op
    with a warning.
    """
    med = [r for r in rows if r.get("stat") == "median"]
    if not med:
        warnings.warn("no aggregate rows to plot", RuntimeWarning, stacklevel=2)
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    levels = sorted({(r["sigma_w"], r["sigma_z"]) for r in med})
    horizons = sorted({r["T"] for r in med})
    written = []

    if kind == "markov":
        T = max(horizons)
        for column, label in _MARKOV_PANELS:
            curves = []
            for sigma_w, sigma_z in levels:
                pts = sorted((r["N"], r[column]) for r in med
                             if r["T"] == T and (r["sigma_w"], r["sigma_z"]) == (sigma_w, sigma_z)
                             and r.get(column) is not None)
                curves.append((f"sw={_fmt_level(sigma_w)} sz={_fmt_level(sigma_z)}",
                               [p[0] for p in pts], [p[1] for p in pts], False))
            if bound_overlay:
                for sigma_w, sigma_z in levels:
                    pts = sorted((r["N"], r["bound_total"]) for r in med
                                 if r["T"] == T and (r["sigma_w"], r["sigma_z"]) == (sigma_w, sigma_z)
                                 and r.get("bound_total") is not None)
                    curves.append((f"bound sw={_fmt_level(sigma_w)}",
                                   [p[0] for p in pts], [p[1] for p in pts], True))
            path = out_dir / f"{column}.svg"
            path.write_text(render_line_plot(curves, f"{label} (T={T})", "N", label))
            written.append(path)
    elif kind == "hinf":
        for sigma_w, sigma_z in levels:
            curves = []
            for T in horizons:
                pts = sorted((r["N"], r["hinf_rel"]) for r in med
                             if r["T"] == T and (r["sigma_w"], r["sigma_z"]) == (sigma_w, sigma_z)
                             and r.get("hinf_rel") is not None)
                curves.append((f"T={T}", [p[0] for p in pts], [p[1] for p in pts], False))
            name = f"hinf_sw{_fmt_level(sigma_w)}_sz{_fmt_level(sigma_z)}.svg"
            path = out_dir / name
            title = f"normalized system error (sw={_fmt_level(sigma_w)}, sz={_fmt_level(sigma_z)})"
            path.write_text(render_line_plot(curves, title, "N", "relative Hinf error"))
            written.append(path)
    else:
        raise ValueError(f"unknown plot kind: {kind!r} (expected 'markov' or 'hinf')")
    return written
