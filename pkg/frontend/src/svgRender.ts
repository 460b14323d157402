/** Pure SVG string rendering of the planning board.
 *
 * Layers, back to front: mesh edges, the coverage heatmap (bands for
 * single coverage and for >= omega coverage, the only planning-relevant
 * distinction), sensor circles and squares (grayed when toggled off),
 * bounding box, plan trail for the playback step, action diamonds, agent
 * and target markers.
 */

import { cellToWorld, makeTransform, toScreen, vertexPositions } from "./geometry";
import { stepView, trailUpTo } from "./playback";
import type { PlanDoc, ScenarioDoc, TablesPayload } from "./types";

const COLORS = {
  mesh: "#e0e0e0",
  single: "#ffe2b8",
  multi: "#ffb3b3",
  sensor: "#d62728",
  sensorOff: "#b0b0b0",
  path: "#1f77b4",
  trail: "#9ecae1",
  action: "#ff9900",
  agent: "#1f77b4",
  target: "#2ca02c",
};

function fmt(value: number): string {
  return value.toFixed(2);
}

export interface BoardOptions {
  plan?: PlanDoc | null;
  step?: number; // playback position; defaults to the full horizon
  forcedKnockouts?: Set<number>;
  showMesh?: boolean;
  showCoverage?: boolean;
  scale?: number;
}

export function renderBoard(
  doc: ScenarioDoc,
  tables: TablesPayload | null,
  options: BoardOptions = {},
): string {
  const t = makeTransform(doc, options.scale ?? 48);
  const width = t.width * t.scale + 2 * t.margin;
  const height = t.height * t.scale + 2 * t.margin;
  const off = options.forcedKnockouts ?? new Set<number>();
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${fmt(width)} ${fmt(height)}" width="${fmt(width)}" height="${fmt(height)}">`,
    `<rect width="${fmt(width)}" height="${fmt(height)}" fill="white"/>`,
  ];
  const vertexXY = tables ? vertexPositions(tables) : null;

  if (tables && (options.showMesh ?? true)) {
    for (const [u, v] of tables.edges) {
      const a = vertexXY!.get(u);
      const b = vertexXY!.get(v);
      if (!a || !b) continue;
      const [x1, y1] = toScreen(t, a[0], a[1]);
      const [x2, y2] = toScreen(t, b[0], b[1]);
      parts.push(
        `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${COLORS.mesh}" stroke-width="0.6"/>`,
      );
    }
  }

  if (tables && (options.showCoverage ?? true)) {
    const multi = new Set(tables.multi_covered);
    for (const [id, x, y] of tables.vertices) {
      const count = tables.coverage_count[String(id)] ?? 0;
      if (count === 0) continue;
      const fill = multi.has(id) ? COLORS.multi : COLORS.single;
      const [sx, sy] = toScreen(t, x, y);
      parts.push(`<circle cx="${fmt(sx)}" cy="${fmt(sy)}" r="7" fill="${fill}"/>`);
    }
  }

  for (const sensor of doc.sensors) {
    const disabled = off.has(sensor.id);
    const color = disabled ? COLORS.sensorOff : COLORS.sensor;
    const [cx, cy] = toScreen(t, sensor.position[0], sensor.position[1]);
    const dash = disabled ? ' stroke-dasharray="6 5"' : "";
    parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(sensor.radius * t.scale)}" fill="none" stroke="${color}" stroke-width="1.4"${dash} data-sensor="${sensor.id}"/>`,
      `<rect x="${fmt(cx - 5)}" y="${fmt(cy - 5)}" width="10" height="10" fill="${color}" data-sensor="${sensor.id}"/>`,
    );
  }

  const corners = [
    toScreen(t, 0, 0),
    toScreen(t, t.width, 0),
    toScreen(t, t.width, t.height),
    toScreen(t, 0, t.height),
  ];
  const boxPath = corners.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  parts.push(
    `<polygon points="${boxPath}" fill="none" stroke="black" stroke-width="2.5"/>`,
  );

  const plan = options.plan ?? null;
  if (plan && vertexXY) {
    const step = options.step ?? doc.horizon;
    for (const agent of Object.keys(plan.trajectory)) {
      const trail = trailUpTo(plan, Number(agent), step);
      for (let i = 1; i < trail.length; i++) {
        const a = vertexXY.get(trail[i - 1]);
        const b = vertexXY.get(trail[i]);
        if (!a || !b) continue;
        const [x1, y1] = toScreen(t, a[0], a[1]);
        const [x2, y2] = toScreen(t, b[0], b[1]);
        parts.push(
          `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${COLORS.trail}" stroke-width="1.8"/>`,
        );
      }
    }
    for (const [, vertex] of plan.knockouts) {
      const p = vertexXY.get(vertex);
      if (!p) continue;
      const [cx, cy] = toScreen(t, p[0], p[1]);
      parts.push(diamond(cx, cy, 7, COLORS.action));
    }
    for (const [agent, when] of plan.confusions) {
      const vertex = plan.trajectory[String(agent)]?.[when];
      const p = vertex ? vertexXY.get(vertex) : undefined;
      if (!p) continue;
      const [cx, cy] = toScreen(t, p[0], p[1]);
      parts.push(diamond(cx, cy, 7, COLORS.action));
    }
    const view = stepView(plan, step);
    for (const { id, vertex } of view.agents) {
      const p = vertexXY.get(vertex);
      if (!p) continue;
      const [cx, cy] = toScreen(t, p[0], p[1]);
      parts.push(
        `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="7" fill="${COLORS.path}" data-playback-agent="${id}"/>`,
      );
    }
  }

  for (const agent of doc.agents) {
    const [x, y] = cellToWorld(agent.start[0], agent.start[1]);
    const [cx, cy] = toScreen(t, x, y);
    parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="6" fill="${COLORS.agent}" fill-opacity="0.55" data-agent="${agent.id}"/>`,
    );
  }
  const [tx, ty] = cellToWorld(doc.mesh.target[0], doc.mesh.target[1]);
  const [cx, cy] = toScreen(t, tx, ty);
  parts.push(
    `<rect x="${fmt(cx - 6)}" y="${fmt(cy - 6)}" width="12" height="12" fill="${COLORS.target}" data-target="1"/>`,
  );

  parts.push("</svg>");
  return parts.join("\n");
}

function diamond(cx: number, cy: number, half: number, fill: string): string {
  const points = [
    `${fmt(cx)},${fmt(cy - half)}`,
    `${fmt(cx + half)},${fmt(cy)}`,
    `${fmt(cx)},${fmt(cy + half)}`,
    `${fmt(cx - half)},${fmt(cy)}`,
  ].join(" ");
  return `<polygon points="${points}" fill="${fill}"/>`;
}
