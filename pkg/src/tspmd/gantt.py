"""Self-contained SVG Gantt chart of an evaluated solution.

One row for the truck, one per drone. Truck bars are travel segments labeled
by their arc; hatched bars are waits. Drone bars span launch to end of flight,
labeled by the sortie's node string. The time axis carries a tick at every
event time; the final tick is the completion time.
"""

from __future__ import annotations

from .model import Instance, node_label
from .schedule import Schedule, Solution

_ROW_H = 34
_LEFT = 70
_WIDTH = 960
_TOP = 24


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def gantt_svg(inst: Instance, sol: Solution, schedule: Schedule) -> str:
    total = schedule.completion_time
    span = total if total > 0 else 1.0
    scale = (_WIDTH - _LEFT - 20) / span
    rows = 1 + inst.m
    height = _TOP + rows * _ROW_H + 40

    def x(t: float) -> float:
        return _LEFT + t * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<text x="4" y="{_TOP - 8}">{_esc(inst.name)}</text>',
    ]

    ticks = {0.0, round(total, 6)}
    clock = 0.0
    segments = []  # (t0, t1, label, kind)
    for t, (i, j) in enumerate(sol.route):
        arc_len = 0.0 if i == j else float(inst.truck_metric[i, j])
        if arc_len > 0:
            segments.append((clock, clock + arc_len, node_label(i) + node_label(j), "move"))
            clock += arc_len
            ticks.add(round(clock, 6))
        w = float(schedule.waits[t])
        if w > 1e-9:
            segments.append((clock, clock + w, "", "wait"))
            clock += w
            ticks.add(round(clock, 6))

    out.append(f'<g class="row" transform="translate(0,{_TOP})">')
    out.append(f'<text x="4" y="{_ROW_H // 2 + 4}">truck</text>')
    for t0, t1, label, kind in segments:
        fill = "#c03b2b" if kind == "move" else "#e8c8c2"
        out.append(
            f'<rect x="{x(t0):.2f}" y="6" width="{max(x(t1) - x(t0), 0.5):.2f}" '
            f'height="{_ROW_H - 14}" fill="{fill}"/>'
        )
        if label:
            out.append(
                f'<text x="{(x(t0) + x(t1)) / 2:.2f}" y="{_ROW_H // 2 + 4}" '
                f'text-anchor="middle">{_esc(label)}</text>'
            )
    out.append("</g>")

    # launch clock per operation: departure time of the previous position
    for d in range(1, inst.m + 1):
        out.append(f'<g class="row" transform="translate(0,{_TOP + d * _ROW_H})">')
        out.append(f'<text x="4" y="{_ROW_H // 2 + 4}">drone {d}</text>')
        for op in sol.operations:
            if op.drone != d:
                continue
            launch = 0.0 if op.start_pos == 1 else float(schedule.departure_times[op.start_pos - 2])
            dur = sum(
                float(inst.drone_metric[a, b])
                for a, b in zip(op.sortie.nodes, op.sortie.nodes[1:])
            )
            label = "".join(node_label(v) for v in op.sortie.nodes)
            out.append(
                f'<rect x="{x(launch):.2f}" y="6" width="{max((dur) * scale, 0.5):.2f}" '
                f'height="{_ROW_H - 14}" fill="#3566a5"/>'
            )
            out.append(
                f'<text x="{(x(launch) + x(launch + dur)) / 2:.2f}" y="{_ROW_H // 2 + 4}" '
                f'fill="white" text-anchor="middle">{_esc(label)}</text>'
            )
            ticks.add(round(launch, 6))
            ticks.add(round(launch + dur, 6))
        out.append("</g>")

    axis_y = _TOP + rows * _ROW_H + 6
    out.append(
        f'<line x1="{_LEFT}" y1="{axis_y}" x2="{x(total):.2f}" y2="{axis_y}" stroke="#444"/>'
    )
    for tick in sorted(ticks):
        out.append(
            f'<line x1="{x(tick):.2f}" y1="{_TOP}" x2="{x(tick):.2f}" y2="{axis_y}" '
            f'stroke="#bbb" stroke-dasharray="2,3"/>'
        )
        out.append(
            f'<text x="{x(tick):.2f}" y="{axis_y + 14}" text-anchor="middle">{tick:.2f}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
