"""Radar chart (SVG) over the nine comparable metrics.

Every axis is standardised to "1.0 is best": metrics whose reference
value is 1 are plotted as-is, metrics whose reference value is 0 are
plotted as `1 - min(value, 1)`. A model matching every reference value
therefore draws the regular unit polygon. Output is deterministic:
same report in, same bytes out.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from eamex.core import ValidationError
from eamex.report import MetricsReport, is_skipped

# (axis label, family key, json key, reference value)
_AXES_CLASSIFICATION = [
    ("Spread Divergence", "global", "spread_divergence", 1),
    ("Alpha Score", "global", "alpha_score", 0),
    ("Fluctuation Ratio", "global", "fluctuation_ratio", 0),
    ("Rank Alignment", "global", "rank_alignment", 1),
    ("Rank Consistency", "local", "rank_inconsistency", 0),
    ("Importance Stability", "local", "importance_instability", 0),
    ("Acc. Degradation", "surrogate", "degradation", 0),
    ("Surr. Fidelity", "surrogate", "fidelity", 1),
    ("Surr. Feature Stability", "surrogate", "feature_stability", 1),
]

_FAMILY_SECTORS = [
    ("Global", 0, 3, "#dbe7f4"),
    ("Local", 4, 5, "#e7f2e2"),
    ("Surrogate", 6, 8, "#f7e8d8"),
]

_PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759",
            "#b07aa1", "#76b7b2", "#edc948", "#9c755f"]

_CX, _CY, _R = 320.0, 300.0, 205.0
_WIDTH, _HEIGHT = 760, 640


def _axes_for(task: str):
    axes = list(_AXES_CLASSIFICATION)
    if task == "regression":
        axes[6] = ("MSE Degradation", "surrogate", "degradation", 0)
    return axes


def _angle(i: int) -> float:
    return math.radians(-90.0 + i * (360.0 / 9.0))


def _point(radius: float, i: int) -> tuple[float, float]:
    theta = _angle(i)
    return (_CX + radius * math.cos(theta), _CY + radius * math.sin(theta))


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _goodness(value: float, ref: int) -> float:
    if ref == 1:
        return float(value)
    return 1.0 - min(float(value), 1.0)


def _sector_path(start_axis: int, end_axis: int) -> str:
    half = math.radians(360.0 / 18.0)
    a0 = _angle(start_axis) - half
    a1 = _angle(end_axis) + half
    x0, y0 = _CX + _R * math.cos(a0), _CY + _R * math.sin(a0)
    x1, y1 = _CX + _R * math.cos(a1), _CY + _R * math.sin(a1)
    large = 1 if (a1 - a0) > math.pi else 0
    return (f"M {_fmt(_CX)} {_fmt(_CY)} L {_fmt(x0)} {_fmt(y0)} "
            f"A {_fmt(_R)} {_fmt(_R)} 0 {large} 1 {_fmt(x1)} {_fmt(y1)} Z")


def render_radar(report: MetricsReport) -> bytes:
    """Render the nine-axis comparison chart for every model in the report."""
    data = report.data
    run_config = data.get("run_config", {})
    families = run_config.get("families", [])
    for needed in ("global", "local", "surrogate"):
        if needed not in families:
            raise ValidationError(
                f"radar chart needs the {needed!r} family; run the full suite"
            )
    models = data.get("models", {})
    if not models:
        raise ValidationError("report contains no models")

    axes = _axes_for(run_config.get("task", "classification"))
    parts: list[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}" '
        f'font-family="Helvetica, Arial, sans-serif">'
    )
    parts.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>')

    # family sectors
    for name, a, b, color in _FAMILY_SECTORS:
        parts.append(f'<path d="{_sector_path(a, b)}" fill="{color}" '
                     f'stroke="none"/>')

    # concentric rings (9-gons) and spokes
    for fraction in (0.25, 0.5, 0.75, 1.0):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}"
                       for x, y in (_point(_R * fraction, i) for i in range(9)))
        stroke = "#9aa0a6" if fraction == 1.0 else "#c9cdd2"
        parts.append(f'<polygon points="{pts}" fill="none" stroke="{stroke}" '
                     f'stroke-width="1"/>')
    for i in range(9):
        x, y = _point(_R, i)
        parts.append(f'<line x1="{_fmt(_CX)}" y1="{_fmt(_CY)}" x2="{_fmt(x)}" '
                     f'y2="{_fmt(y)}" stroke="#c9cdd2" stroke-width="1"/>')

    # ring value labels on the upward axis
    for fraction in (0.5, 1.0):
        x, y = _point(_R * fraction, 0)
        parts.append(f'<text x="{_fmt(x + 6)}" y="{_fmt(y - 4)}" '
                     f'font-size="11" fill="#80868b">{fraction:g}</text>')

    # axis labels
    for i, (label, _, _, _) in enumerate(axes):
        theta = _angle(i)
        cos, sin = math.cos(theta), math.sin(theta)
        x, y = _point(_R + 16, i)
        if cos > 0.15:
            anchor = "start"
        elif cos < -0.15:
            anchor = "end"
        else:
            anchor = "middle"
        dy = "1.0em" if sin > 0.15 else ("-0.3em" if sin < -0.15 else "0.35em")
        parts.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
                     f'dy="{dy}" font-size="13" fill="#3c4043">'
                     f'{escape(label)}</text>')

    # one polygon per model; skipped axes sit at the center with a marker
    marker_notes: list[str] = []
    for m, (model_name, payload) in enumerate(models.items()):
        color = _PALETTE[m % len(_PALETTE)]
        points = []
        for i, (label, family, key, ref) in enumerate(axes):
            value = payload.get(family, {}).get(key)
            if value is None or is_skipped(value):
                points.append(_point(0.0, i))
                reason = (value or {}).get("skipped", "not computed") \
                    if isinstance(value, dict) else "not computed"
                marker_notes.append(
                    f'<circle cx="{_fmt(_CX)}" cy="{_fmt(_CY)}" r="4" '
                    f'fill="none" stroke="{color}" stroke-width="1.5">'
                    f'<title>{escape(f"{model_name}: {label} skipped — {reason}")}'
                    f'</title></circle>'
                )
            else:
                radius = max(0.0, _goodness(value, ref)) * _R
                points.append(_point(radius, i))
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        parts.append(f'<polygon points="{pts}" fill="{color}" '
                     f'fill-opacity="0.12" stroke="{color}" stroke-width="2"/>')
        for x, y in points:
            parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.5" '
                         f'fill="{color}"/>')
    parts.extend(marker_notes)

    # legend
    x = 40.0
    y = float(_HEIGHT - 36)
    for m, model_name in enumerate(models):
        color = _PALETTE[m % len(_PALETTE)]
        parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y - 10)}" width="14" '
                     f'height="14" fill="{color}" fill-opacity="0.5" '
                     f'stroke="{color}"/>')
        parts.append(f'<text x="{_fmt(x + 20)}" y="{_fmt(y + 2)}" '
                     f'font-size="13" fill="#3c4043">{escape(model_name)}</text>')
        x += 28.0 + 7.2 * len(model_name)
    parts.append(
        f'<text x="40" y="{_HEIGHT - 12}" font-size="11" fill="#80868b">'
        f'axes are standardised so the outer ring is the reference value'
        f'</text>'
    )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")
