"""Dependency-free SVG figures: Gantt charts, bar charts and scatter plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .core import ScheduleState

PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
    "#ff9da7", "#9c755f", "#bab0ac", "#1f77b4", "#aec7e8", "#ffbb78", "#98df8a",
    "#c5b0d5", "#c49c94",
)


def job_color(job: int) -> str:
    return PALETTE[job % len(PALETTE)]


def _doc(width: int, height: int, body: list[str]) -> str:
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        *body, "</svg>", ""])


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def gantt_svg(state: ScheduleState, title: str = "", width: int = 900) -> str:
    """One row per machine, one rectangle per operation, coloured by job."""
    inst = state.instance
    M, J = inst.num_machines, inst.num_jobs
    makespan = max(state.makespan(), 1)
    left, right, top, row_h = 50, 20, 40, 26
    plot_w = width - left - right
    legend_y = top + M * row_h + 30
    height = legend_y + 20 * ((J + 7) // 8) + 10
    sx = plot_w / makespan
    body = [f'<text x="{left}" y="20" font-size="13">{escape(title)} (makespan {state.makespan()})</text>']
    for m in range(M):
        y = top + m * row_h
        body.append(f'<text x="{left - 8}" y="{y + row_h * 0.65:.1f}" text-anchor="end">M{m}</text>')
        body.append(f'<line x1="{left}" y1="{y + row_h}" x2="{left + plot_w}" y2="{y + row_h}" stroke="#ddd"/>')
    for e in state.dispatch_log:
        x = left + e.start * sx
        y = top + e.machine * row_h + 3
        body.append(
            f'<rect class="op" data-job="{e.job}" data-op="{e.op}" data-machine="{e.machine}" '
            f'data-start="{e.start}" data-end="{e.end}" x="{x:.2f}" y="{y}" '
            f'width="{(e.end - e.start) * sx:.2f}" height="{row_h - 6}" '
            f'fill="{job_color(e.job)}" stroke="black" stroke-width="0.5"/>')
    axis_y = top + M * row_h
    body.append(f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" y2="{axis_y}" stroke="black"/>')
    for i in range(6):
        t = makespan * i / 5
        body.append(f'<text x="{left + t * sx:.1f}" y="{axis_y + 14}" text-anchor="middle">{_fmt(t)}</text>')
    for j in range(J):
        x = left + (j % 8) * 100
        y = legend_y + (j // 8) * 20
        body.append(f'<rect class="legend" x="{x}" y="{y - 10}" width="12" height="12" fill="{job_color(j)}"/>')
        body.append(f'<text x="{x + 16}" y="{y}">J{j}</text>')
    return _doc(width, height, body)


def bar_chart_svg(labels: list[str], values: list[float], ylabel: str, title: str = "",
                  width: int = 720, height: int = 380) -> str:
    left, right, top, bottom = 60, 20, 35, 110
    plot_w, plot_h = width - left - right, height - top - bottom
    vmax = max(max(values, default=0.0), 1e-9)
    vmin = min(min(values, default=0.0), 0.0)
    span = vmax - vmin
    bw = plot_w / max(len(values), 1)
    zero_y = top + plot_h * vmax / span
    body = [f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>',
            f'<text x="15" y="{top + plot_h / 2}" transform="rotate(-90 15 {top + plot_h / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
            f'<line x1="{left}" y1="{zero_y:.2f}" x2="{left + plot_w}" y2="{zero_y:.2f}" stroke="black"/>']
    for i in range(5):
        v = vmin + span * i / 4
        y = top + plot_h * (vmax - v) / span
        body.append(f'<text x="{left - 5}" y="{y + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
    for i, (lab, v) in enumerate(zip(labels, values)):
        x = left + i * bw + bw * 0.15
        y0 = top + plot_h * (vmax - max(v, 0.0)) / span
        h = plot_h * abs(v) / span
        body.append(f'<rect class="bar" data-label="{escape(lab)}" data-value="{v:.6f}" x="{x:.2f}" '
                    f'y="{y0:.2f}" width="{bw * 0.7:.2f}" height="{h:.2f}" fill="#4e79a7"/>')
        tx, ty = x + bw * 0.35, top + plot_h + 12
        body.append(f'<text x="{tx:.1f}" y="{ty}" transform="rotate(45 {tx:.1f} {ty})">{escape(lab)}</text>')
    return _doc(width, height, body)


def scatter_svg(xs: list[float], ys: list[float], labels: list[str], xlabel: str, ylabel: str,
                title: str = "", width: int = 640, height: int = 420) -> str:
    left, right, top, bottom = 70, 30, 35, 55
    plot_w, plot_h = width - left - right, height - top - bottom
    x0, x1 = 0.0, max(max(xs, default=1.0), 1e-9) * 1.05
    y0, y1 = min(0.0, min(ys, default=0.0)), max(max(ys, default=1.0), 1e-9) * 1.1

    def px(x):
        return left + plot_w * (x - x0) / (x1 - x0)

    def py(y):
        return top + plot_h * (y1 - y) / (y1 - y0)

    body = [f'<text x="{left}" y="20" font-size="13">{escape(title)}</text>',
            f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
            f'<text x="{left + plot_w / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="18" y="{top + plot_h / 2}" transform="rotate(-90 18 {top + plot_h / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        body.append(f'<text x="{px(xv):.1f}" y="{top + plot_h + 15}" text-anchor="middle">{_fmt(xv)}</text>')
        body.append(f'<text x="{left - 5}" y="{py(yv) + 4:.1f}" text-anchor="end">{_fmt(yv)}</text>')
    for x, y, lab in zip(xs, ys, labels):
        body.append(f'<circle class="point" data-label="{escape(lab)}" cx="{px(x):.2f}" cy="{py(y):.2f}" '
                    f'r="4" fill="#e15759"/>')
        body.append(f'<text x="{px(x) + 6:.1f}" y="{py(y) - 6:.1f}" font-size="9">{escape(lab)}</text>')
    return _doc(width, height, body)
