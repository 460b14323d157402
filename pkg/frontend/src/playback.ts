/** Step-by-step playback of a returned plan.
 *
 * Positions come straight out of the plan payload: the highlight at step t
 * is exactly trajectory[agent][t], with the sink (0) meaning "off board".
 */

import type { PlanDoc } from "./types";

export interface StepView {
  agents: { id: number; vertex: number }[]; // active agents only
  knockouts: { agent: number; vertex: number }[]; // initiated at exactly t
  confusions: { agent: number; vertex: number }[];
  confusionActive: boolean;
}

export function planHorizon(plan: PlanDoc): number {
  const lengths = Object.values(plan.trajectory).map((tr) => tr.length - 1);
  return lengths.length ? Math.min(...lengths) : 0;
}

export function positionsAt(plan: PlanDoc, t: number): Map<number, number> {
  const out = new Map<number, number>();
  for (const [agent, trajectory] of Object.entries(plan.trajectory)) {
    const vertex = trajectory[t];
    if (vertex !== undefined && vertex !== 0) {
      out.set(Number(agent), vertex);
    }
  }
  return out;
}

export function stepView(plan: PlanDoc, t: number, confusionDuration = 10): StepView {
  const positions = positionsAt(plan, t);
  const agents = [...positions.entries()].map(([id, vertex]) => ({ id, vertex }));
  const knockouts = plan.knockouts
    .filter(([, , when]) => when === t)
    .map(([agent, vertex]) => ({ agent, vertex }));
  const confusions = plan.confusions
    .filter(([, when]) => when === t)
    .map(([agent]) => ({ agent, vertex: positions.get(agent) ?? 0 }));
  const confusionActive = plan.confusions.some(
    ([, when]) => when <= t && t <= when + confusionDuration,
  );
  return { agents, knockouts, confusions, confusionActive };
}

/** Trail of vertices an agent has visited up to and including step t. */
export function trailUpTo(plan: PlanDoc, agent: number, t: number): number[] {
  const trajectory = plan.trajectory[String(agent)] ?? [];
  return trajectory.slice(0, t + 1).filter((v) => v !== 0);
}
