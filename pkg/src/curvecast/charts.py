"""
Self-contained SVG learning-curve charts.

The chart has a fixed 800x600 viewBox with a log-scaled size axis (decade
ticks) and a linear 0-100% accuracy axis. Every coordinate is written with two
decimals, so identical inputs give byte-identical files.
"""

import math
from html import escape

from curvecast.predictor import sample_curve

WIDTH = 800
HEIGHT = 600
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MARGIN_TOP = 50
MARGIN_BOTTOM = 70
CURVE_POINTS = 200

STYLE = """\
<style>
  .axis { stroke: #333333; stroke-width: 1; }
  .grid { stroke: #dddddd; stroke-width: 1; }
  .observation { fill: #1f77b4; stroke: #ffffff; stroke-width: 1; }
  .whisker { stroke: #1f77b4; stroke-width: 1.5; }
  .fit { fill: none; stroke: #d62728; stroke-width: 2; }
  .marker { stroke: #2ca02c; stroke-width: 1.5; stroke-dasharray: 6 4; }
  text { font-family: sans-serif; font-size: 12px; fill: #333333; }
  .title { font-size: 16px; }
</style>
"""


def _fmt(value):
    return f"{value:.2f}"


def _attrs(attrs):
    return "".join(f' {key}="{escape(str(value))}"' for key, value in attrs.items())


class SVG:
    """Minimal SVG document builder."""

    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width = width
        self.height = height
        self.commands = []

    def line(self, x1, y1, x2, y2, css_class):
        self.commands.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"'
            f' class="{css_class}"/>'
        )

    def polyline(self, points, css_class):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.commands.append(f'<polyline points="{coords}" class="{css_class}"/>')

    def circle(self, x, y, radius, css_class, **attrs):
        self.commands.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius)}"'
            f' class="{css_class}"{_attrs(attrs)}/>'
        )

    def text(self, x, y, text, anchor="middle", **attrs):
        self.commands.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}"'
            f"{_attrs(attrs)}>{escape(str(text))}</text>"
        )

    def group_start(self, **attrs):
        self.commands.append(f"<g{_attrs(attrs)}>")

    def group_end(self):
        self.commands.append("</g>")

    def render(self):
        header = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1"'
            f' width="{self.width}" height="{self.height}"'
            f' viewBox="0 0 {self.width} {self.height}">\n'
        )
        return header + STYLE + "\n".join(self.commands) + "\n</svg>\n"


class LogAxes:
    """Maps (size, accuracy) to pixels: log10 on x, linear 0-100 on y."""

    def __init__(self, x_min, x_max):
        self.low_decade = math.floor(math.log10(x_min))
        self.high_decade = math.ceil(math.log10(x_max))
        if self.high_decade == self.low_decade:
            self.high_decade += 1
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT
        self.top = MARGIN_TOP
        self.bottom = HEIGHT - MARGIN_BOTTOM

    def px(self, x):
        fraction = (math.log10(x) - self.low_decade) / (
            self.high_decade - self.low_decade
        )
        return self.left + fraction * (self.right - self.left)

    def py(self, accuracy):
        return self.bottom - accuracy / 100.0 * (self.bottom - self.top)

    @property
    def decades(self):
        return range(self.low_decade, self.high_decade + 1)


def _decade_label(exponent):
    if exponent >= 0:
        return f"{10**exponent:,}"
    return f"{10.0**exponent:g}"


def _draw_axes(svg, axes):
    for exponent in axes.decades:
        x = axes.px(10.0**exponent)
        svg.line(x, axes.top, x, axes.bottom, "grid")
        svg.line(x, axes.bottom, x, axes.bottom + 6, "axis")
        svg.text(x, axes.bottom + 22, _decade_label(exponent))
    for accuracy in range(0, 101, 20):
        y = axes.py(accuracy)
        svg.line(axes.left, y, axes.right, y, "grid")
        svg.line(axes.left - 6, y, axes.left, y, "axis")
        svg.text(axes.left - 10, y + 4, accuracy, anchor="end")
    svg.line(axes.left, axes.bottom, axes.right, axes.bottom, "axis")
    svg.line(axes.left, axes.top, axes.left, axes.bottom, "axis")
    svg.text((axes.left + axes.right) / 2, HEIGHT - 20, "Training size per class")
    svg.text(
        20,
        (axes.top + axes.bottom) / 2,
        "Accuracy (%)",
        transform=f"rotate(-90 20 {_fmt((axes.top + axes.bottom) / 2)})",
    )


def render_report(observations, fit_result, size_prediction=None, title=None):
    """Render observed points, the fitted curve and a required-size marker.

    Args:
        observations: The fitted single-series ObservationSet. Each size is
            drawn at its replicate mean with a +/- one std whisker when it has
            several replicates.
        fit_result: FitResult whose curve is drawn across the size axis.
        size_prediction: Optional SizePrediction; adds a dashed marker at the
            required size.
        title: Optional chart title.

    Returns:
        str: The SVG document.
    """
    groups = observations.ordered_groups()
    sizes = [group.size for group in groups]
    x_min = min(sizes)
    x_max = max(sizes)
    marked = size_prediction is not None and size_prediction.required_size_real >= 1
    if marked:
        x_min = min(x_min, size_prediction.required_size_real)
        x_max = max(x_max, size_prediction.required_size_real)

    axes = LogAxes(x_min, x_max)
    svg = SVG()
    if title:
        svg.text(WIDTH / 2, 28, title, **{"class": "title"})
    _draw_axes(svg, axes)

    curve = sample_curve(
        fit_result, 10.0**axes.low_decade, 10.0**axes.high_decade, CURVE_POINTS
    )
    svg.polyline([(axes.px(x), axes.py(acc)) for x, acc in curve], "fit")

    for group in groups:
        x = axes.px(group.size)
        if len(group.replicates) > 1 and group.std > 0:
            low = max(group.mean - group.std, 0.0)
            high = min(group.mean + group.std, 100.0)
            svg.line(x, axes.py(low), x, axes.py(high), "whisker")
            svg.line(x - 4, axes.py(low), x + 4, axes.py(low), "whisker")
            svg.line(x - 4, axes.py(high), x + 4, axes.py(high), "whisker")
        svg.circle(
            x,
            axes.py(group.mean),
            4,
            "observation",
            **{"data-size": group.size, "data-accuracy": _fmt(group.mean)},
        )

    if marked:
        x = axes.px(size_prediction.required_size_real)
        svg.group_start(
            id="required-size",
            **{
                "data-size": size_prediction.required_size,
                "data-target": f"{size_prediction.target_accuracy:g}",
            },
        )
        svg.line(x, axes.top, x, axes.bottom, "marker")
        svg.text(
            x + 6,
            axes.top + 14,
            f"n = {size_prediction.required_size:,} for "
            f"{size_prediction.target_accuracy:g}%",
            anchor="start",
        )
        svg.group_end()

    return svg.render()
