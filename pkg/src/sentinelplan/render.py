"""Deterministic SVG rendering of scenarios and plans.

Drawing conventions: bounding box, red sensor circles and squares, blue
agent paths with circular step markers, orange diamonds for action
vertices, green target square. Knocked-out sensors can be hidden to show
the network the agents actually face.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .formulation import Plan
from .mesh import ROW_HEIGHT
from .scenario import Scenario

_SCALE = 48.0
_MARGIN = 30.0


@dataclass
class RenderSpec:
    output: str | Path
    show_mesh: bool = True
    show_coverage: bool = True
    hide_knocked_out: bool = False


def _fmt(value: float) -> str:
    return f"{value:.5f}"


class _Canvas:
    def __init__(self, width: float, height: float):
        self.height = height
        self.parts: list[str] = []
        w = width * _SCALE + 2 * _MARGIN
        h = height * _SCALE + 2 * _MARGIN
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">'
        )
        self.parts.append(f'<rect width="{_fmt(w)}" height="{_fmt(h)}" fill="white"/>')

    def pt(self, x: float, y: float) -> tuple[float, float]:
        return _MARGIN + x * _SCALE, _MARGIN + (self.height - y) * _SCALE

    def line(self, a, b, stroke, width=1.0):
        x1, y1 = self.pt(*a)
        x2, y2 = self.pt(*b)
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, center, radius, stroke=None, fill="none", width=1.0):
        cx, cy = self.pt(*center)
        stroke_attr = f' stroke="{stroke}" stroke-width="{_fmt(width)}"' if stroke else ""
        self.parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(radius * _SCALE)}" '
            f'fill="{fill}"{stroke_attr}/>'
        )

    def dot(self, center, r_px, fill):
        cx, cy = self.pt(*center)
        self.parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r_px)}" fill="{fill}"/>'
        )

    def square(self, center, half_px, fill):
        cx, cy = self.pt(*center)
        self.parts.append(
            f'<rect x="{_fmt(cx - half_px)}" y="{_fmt(cy - half_px)}" '
            f'width="{_fmt(2 * half_px)}" height="{_fmt(2 * half_px)}" fill="{fill}"/>'
        )

    def diamond(self, center, half_px, fill):
        cx, cy = self.pt(*center)
        pts = [
            (cx, cy - half_px),
            (cx + half_px, cy),
            (cx, cy + half_px),
            (cx - half_px, cy),
        ]
        path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(f'<polygon points="{path}" fill="{fill}"/>')

    def finish(self) -> str:
        self.parts.append("</svg>")
        return "\n".join(self.parts) + "\n"


def _hidden_sensors(scenario: Scenario, plan: Plan | None) -> set[int]:
    hidden = set(scenario.forced_knockouts)
    if plan is not None:
        rho2 = scenario.knockout_radius**2 + 1e-9
        for _, v, _ in plan.knockouts:
            vx, vy = scenario.mesh.position(v)
            for sensor in scenario.sensors:
                sx, sy = sensor.position
                if (vx - sx) ** 2 + (vy - sy) ** 2 <= rho2:
                    hidden.add(sensor.id)
    return hidden


def render_svg(
    scenario: Scenario,
    plan: Plan | None = None,
    show_mesh: bool = True,
    show_coverage: bool = True,
    hide_knocked_out: bool = False,
) -> str:
    mesh = scenario.mesh
    width = mesh.cols - 0.5
    height = (mesh.rows - 1) * ROW_HEIGHT
    canvas = _Canvas(width, height)

    if show_mesh:
        for v in mesh.vertices:
            for w in sorted(mesh.adjacency[v.id]):
                if w > v.id:
                    canvas.line((v.x, v.y), mesh.position(w), "#d8d8d8", 0.6)

    hidden = _hidden_sensors(scenario, plan) if hide_knocked_out else set()
    for sensor in scenario.sensors:
        if sensor.id in hidden:
            continue
        if show_coverage:
            canvas.circle(sensor.position, sensor.radius, stroke="red", width=1.4)
        canvas.square(sensor.position, 5.0, "red")

    corners = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]
    for a, b in zip(corners, corners[1:] + corners[:1]):
        canvas.line(a, b, "black", 2.5)

    for agent in scenario.agents:
        canvas.dot(mesh.position(agent.start), 6.0, "blue")
    canvas.square(mesh.position(mesh.target), 6.0, "green")

    if plan is not None:
        for agent in scenario.agents:
            traj = plan.trajectory[agent.id]
            prev = traj[0]
            for t in range(1, len(traj)):
                cur = traj[t]
                if cur == 0:
                    break
                canvas.line(mesh.position(prev), mesh.position(cur), "blue", 1.8)
                canvas.dot(mesh.position(cur), 4.0, "blue")
                prev = cur
        for _, v, _ in plan.knockouts:
            canvas.diamond(mesh.position(v), 7.0, "orange")
        for a, tau in plan.confusions:
            v = plan.trajectory[a][tau]
            if v != 0:
                canvas.diamond(mesh.position(v), 7.0, "orange")

    return canvas.finish()


def render_to_file(scenario: Scenario, plan: Plan | None, spec: RenderSpec) -> None:
    svg = render_svg(
        scenario,
        plan,
        show_mesh=spec.show_mesh,
        show_coverage=spec.show_coverage,
        hide_knocked_out=spec.hide_knocked_out,
    )
    Path(spec.output).write_text(svg)
