/** Side-by-side deltas for the plan comparison tray. */

import type { PinnedPlan } from "./state";

export interface PlanDelta {
  steps: string;
  ped: string;
}

function fmtSteps(delta: number): string {
  if (delta === 0) return "same time";
  const word = Math.abs(delta) === 1 ? "step" : "steps";
  return `${delta > 0 ? "+" : "−"}${Math.abs(delta)} ${word}`;
}

function fmtPed(delta: number): string {
  if (Math.abs(delta) < 1e-12) return "same PED";
  const sign = delta > 0 ? "+" : "−";
  return `${sign}${Math.abs(delta).toFixed(4)} PED`;
}

/** Describe ``candidate`` relative to ``baseline``. */
export function comparePlans(baseline: PinnedPlan, candidate: PinnedPlan): PlanDelta {
  const steps =
    baseline.timeToTarget !== null && candidate.timeToTarget !== null
      ? fmtSteps(candidate.timeToTarget - baseline.timeToTarget)
      : "n/a";
  const ped =
    baseline.ped !== null && candidate.ped !== null
      ? fmtPed(candidate.ped - baseline.ped)
      : "n/a";
  return { steps, ped };
}
