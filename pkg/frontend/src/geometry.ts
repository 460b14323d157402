/** Lattice geometry: world coordinates, screen transform, hit testing. */

import type { ScenarioDoc, TablesPayload } from "./types";

export const ROW_HEIGHT = Math.sqrt(3) / 2;

export interface Transform {
  scale: number;
  margin: number;
  width: number; // world units
  height: number; // world units
}

export function meshExtent(doc: ScenarioDoc): { width: number; height: number } {
  return {
    width: doc.mesh.cols - 0.5,
    height: (doc.mesh.rows - 1) * ROW_HEIGHT,
  };
}

export function makeTransform(doc: ScenarioDoc, scale = 48, margin = 30): Transform {
  const { width, height } = meshExtent(doc);
  return { scale, margin, width, height };
}

export function toScreen(t: Transform, x: number, y: number): [number, number] {
  return [t.margin + x * t.scale, t.margin + (t.height - y) * t.scale];
}

export function toWorld(t: Transform, sx: number, sy: number): [number, number] {
  return [(sx - t.margin) / t.scale, t.height - (sy - t.margin) / t.scale];
}

export function cellToWorld(row: number, col: number): [number, number] {
  return [col + 0.5 * (row % 2), row * ROW_HEIGHT];
}

/** Nearest lattice cell to a world point, restricted to the mesh bounds. */
export function nearestCell(
  doc: ScenarioDoc,
  x: number,
  y: number,
): [number, number] {
  const row = Math.min(
    doc.mesh.rows - 1,
    Math.max(0, Math.round(y / ROW_HEIGHT)),
  );
  const col = Math.min(
    doc.mesh.cols - 1,
    Math.max(0, Math.round(x - 0.5 * (row % 2))),
  );
  return [row, col];
}

export type Pick =
  | { kind: "sensor"; id: number }
  | { kind: "agent"; id: number }
  | { kind: "target" };

/** What lies under a world point, if anything, within the pick radius. */
export function pickEntity(
  doc: ScenarioDoc,
  x: number,
  y: number,
  radius = 0.45,
): Pick | null {
  const candidates: { pick: Pick; d2: number }[] = [];
  for (const sensor of doc.sensors) {
    const d2 = (sensor.position[0] - x) ** 2 + (sensor.position[1] - y) ** 2;
    candidates.push({ pick: { kind: "sensor", id: sensor.id }, d2 });
  }
  for (const agent of doc.agents) {
    const [ax, ay] = cellToWorld(agent.start[0], agent.start[1]);
    candidates.push({
      pick: { kind: "agent", id: agent.id },
      d2: (ax - x) ** 2 + (ay - y) ** 2,
    });
  }
  const [tx, ty] = cellToWorld(doc.mesh.target[0], doc.mesh.target[1]);
  candidates.push({ pick: { kind: "target" }, d2: (tx - x) ** 2 + (ty - y) ** 2 });
  candidates.sort((a, b) => a.d2 - b.d2);
  const best = candidates[0];
  return best && best.d2 <= radius * radius ? best.pick : null;
}

export function vertexPositions(
  tables: TablesPayload,
): Map<number, [number, number]> {
  const out = new Map<number, [number, number]>();
  for (const [id, x, y] of tables.vertices) {
    out.set(id, [x, y]);
  }
  return out;
}
