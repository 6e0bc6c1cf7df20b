"""Self-contained SVG line charts from sweep CSV rows.

No plotting dependency: a fixed 800x600 viewport, an 8-color palette, nice
linear ticks or log decades per axis, polylines with point markers, and a
legend.  Output is byte-deterministic for fixed input.
"""

from __future__ import annotations

import html
import math
from dataclasses import dataclass

from .sweep import CellRow

__all__ = ["PlotSpec", "emit_plot", "render_plot", "PALETTE"]

WIDTH = 800
HEIGHT = 600
MARGIN_LEFT = 72
MARGIN_RIGHT = 168  # room for the legend
MARGIN_TOP = 48
MARGIN_BOTTOM = 64

PALETTE = (
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#9c755f",
)

_NUMERIC_COLUMNS = {
    "xi": lambda r: r.xi,
    "exponent": lambda r: r.exponent,
    "d": lambda r: r.d,
    "n": lambda r: r.n,
    "phi": lambda r: r.phi,
    "p": lambda r: r.p,
    "lambda": lambda r: r.lam,
    "rho": lambda r: r.rho,
    "gamma": lambda r: r.gamma,
    "beta": lambda r: r.beta,
    "beta_tilde": lambda r: r.beta_tilde,
    "m": lambda r: r.m,
    "m_prime": lambda r: r.m_prime,
    "m_tilde": lambda r: r.m_tilde,
    "m0": lambda r: r.m0,
    "nu0": lambda r: r.nu0,
    "theory_error": lambda r: r.theory_error,
    "empirical_mean": lambda r: r.empirical_mean,
    "empirical_std": lambda r: r.empirical_std,
    "trials": lambda r: r.trials,
    "seed": lambda r: r.seed,
}

_SERIES_COLUMNS = {
    "strategy": lambda r: r.strategy,
    "cell_id": lambda r: r.cell_id,
    "xi": lambda r: "" if r.xi is None else f"xi={r.xi:g}",
    "p": lambda r: "" if r.p is None else f"p={r.p:.3g}",
    "lambda": lambda r: f"lambda={r.lam:g}",
    "d": lambda r: f"d={r.d}",
    "rho": lambda r: f"rho={r.rho:g}",
    "series_label": lambda r: _series_label(r),
}


def _series_label(row: CellRow) -> str:
    """Human label combining strategy identity and keep probability."""
    if row.strategy == "all":
        return "keep-all"
    if row.strategy in ("kh", "ke"):
        name = "keep-hard" if row.strategy == "kh" else "keep-easy"
        if row.p is not None:
            return f"{name} p={row.p:.2f}"
        return f"{name} xi={row.xi:g}"
    if row.strategy == "sig":
        return f"sigmoid^{row.exponent:g}"
    return row.strategy


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: y (or 1-y when accuracy=True) against x, one polyline
    per distinct series value."""

    x: str
    y: str
    series: str = "series_label"
    logx: bool = False
    logy: bool = False
    accuracy: bool = False  # plot 1 - y (error columns become accuracy)
    title: str = ""

    def __post_init__(self) -> None:
        missing = [
            name
            for name, table in (
                (self.x, _NUMERIC_COLUMNS),
                (self.y, _NUMERIC_COLUMNS),
                (self.series, _SERIES_COLUMNS),
            )
            if name not in table
        ]
        if missing:
            raise ValueError(
                f"unknown plot columns: {', '.join(sorted(set(missing)))}; "
                f"numeric columns: {', '.join(sorted(_NUMERIC_COLUMNS))}; "
                f"series columns: {', '.join(sorted(_SERIES_COLUMNS))}"
            )


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / max(target, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw)) if raw > 0 else 1.0
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mult * magnitude >= raw:
            return mult * magnitude
    return 10.0 * magnitude


def _linear_ticks(lo: float, hi: float) -> list[float]:
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 0.5
        lo, hi = lo - pad, hi + pad
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(value) < step * 1e-9 else value)
        value += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_exp = math.floor(math.log10(lo))
    hi_exp = math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_exp, hi_exp + 1) if lo / 1.001 <= 10.0**e <= hi * 1.001]


def _tick_label(value: float) -> str:
    if value == 0.0:
        return "0"
    if abs(value) >= 10000 or abs(value) < 0.001:
        return f"{value:.0e}".replace("e-0", "e-").replace("e+0", "e").replace("e+", "e")
    text = f"{value:.6g}"
    return text


def _axis_transform(lo: float, hi: float, log: bool, pixel_lo: float, pixel_hi: float):
    if log:
        lo_t, hi_t = math.log10(lo), math.log10(hi)
    else:
        lo_t, hi_t = lo, hi
    if hi_t <= lo_t:
        pad = max(abs(lo_t), 1.0) * 0.05 + 1e-12
        lo_t, hi_t = lo_t - pad, hi_t + pad
    scale = (pixel_hi - pixel_lo) / (hi_t - lo_t)

    def to_pixel(value: float) -> float:
        t = math.log10(value) if log else value
        return pixel_lo + (t - lo_t) * scale

    return to_pixel


def render_plot(rows: list[CellRow], spec: PlotSpec) -> str:
    """Render rows to a complete SVG document string."""
    x_of = _NUMERIC_COLUMNS[spec.x]
    y_of = _NUMERIC_COLUMNS[spec.y]
    series_of = _SERIES_COLUMNS[spec.series]

    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        if row.error_code:
            continue
        x_val, y_val = x_of(row), y_of(row)
        if x_val is None or y_val is None:
            continue
        x_val, y_val = float(x_val), float(y_val)
        if spec.accuracy:
            y_val = 1.0 - y_val
        if spec.logx and x_val <= 0.0:
            continue
        if spec.logy and y_val <= 0.0:
            continue
        series.setdefault(str(series_of(row)), []).append((x_val, y_val))
    if not series:
        raise ValueError(f"no plottable rows for x={spec.x!r}, y={spec.y!r}")

    for points in series.values():
        points.sort()
    names = sorted(series)

    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if not spec.logy:
        pad = (y_hi - y_lo) * 0.06 or max(abs(y_hi), 1e-3) * 0.1
        y_lo, y_hi = y_lo - pad, y_hi + pad
    if not spec.logx and x_hi > x_lo:
        pad = (x_hi - x_lo) * 0.02
        x_lo, x_hi = x_lo - pad, x_hi + pad

    plot_left, plot_right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    plot_top, plot_bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    to_px = _axis_transform(x_lo, x_hi, spec.logx, plot_left, plot_right)
    to_py = _axis_transform(y_lo, y_hi, spec.logy, plot_bottom, plot_top)

    x_ticks = _log_ticks(x_lo, x_hi) if spec.logx else _linear_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if spec.logy else _linear_ticks(y_lo, y_hi)

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    title = spec.title or f"{spec.y} vs {spec.x}"
    out.append(
        f'<text x="{(plot_left + plot_right) / 2:.2f}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="18" fill="#222222">{html.escape(title)}</text>'
    )
    out.append(
        f'<rect x="{plot_left}" y="{plot_top}" width="{plot_right - plot_left}" '
        f'height="{plot_bottom - plot_top}" fill="none" stroke="#444444" stroke-width="1"/>'
    )

    for tick in x_ticks:
        px = to_px(tick)
        if not plot_left - 0.5 <= px <= plot_right + 0.5:
            continue
        out.append(
            f'<line x1="{px:.2f}" y1="{plot_top}" x2="{px:.2f}" y2="{plot_bottom}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{plot_bottom + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" fill="#333333">{html.escape(_tick_label(tick))}</text>'
        )
    for tick in y_ticks:
        py = to_py(tick)
        if not plot_top - 0.5 <= py <= plot_bottom + 0.5:
            continue
        out.append(
            f'<line x1="{plot_left}" y1="{py:.2f}" x2="{plot_right}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{plot_left - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12" fill="#333333">{html.escape(_tick_label(tick))}</text>'
        )

    x_label = spec.x
    y_label = f"1 - {spec.y}" if spec.accuracy else spec.y
    out.append(
        f'<text x="{(plot_left + plot_right) / 2:.2f}" y="{HEIGHT - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" fill="#222222">{html.escape(x_label)}</text>'
    )
    out.append(
        f'<text x="20" y="{(plot_top + plot_bottom) / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" fill="#222222" '
        f'transform="rotate(-90 20 {(plot_top + plot_bottom) / 2:.2f})">{html.escape(y_label)}</text>'
    )

    for index, name in enumerate(names):
        color = PALETTE[index % len(PALETTE)]
        points = series[name]
        coords = [(to_px(x), to_py(y)) for x, y in points]
        if len(coords) > 1:
            path = " ".join(f"{px:.2f},{py:.2f}" for px, py in coords)
            out.append(
                f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>'
            )
        for px, py in coords:
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3.5" fill="{color}"/>')

    legend_x = plot_right + 16
    legend_y = plot_top + 8
    for index, name in enumerate(names):
        color = PALETTE[index % len(PALETTE)]
        y0 = legend_y + index * 22
        out.append(
            f'<line x1="{legend_x}" y1="{y0}" x2="{legend_x + 24}" y2="{y0}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<circle cx="{legend_x + 12}" cy="{y0}" r="3.5" fill="{color}"/>')
        out.append(
            f'<text x="{legend_x + 30}" y="{y0 + 4}" font-family="sans-serif" '
            f'font-size="12" fill="#222222">{html.escape(name)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path: str, spec: PlotSpec) -> str:
    """Read a sweep CSV and return the rendered SVG document."""
    from .sweep import read_csv

    return render_plot(read_csv(csv_path), spec)
