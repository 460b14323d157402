/** Planner view state and its pure update helpers.
 *
 * Draft edits never touch the server; saving posts a fresh scenario and the
 * returned id replaces the working one. Every displayed number
 * (time-to-target, PED, validity) is copied verbatim from service
 * responses.
 */

import { cellToWorld } from "./geometry";
import type {
  EngineName,
  JobPayload,
  ScenarioDoc,
  SolveRequest,
  TablesPayload,
} from "./types";

export interface PinnedPlan {
  label: string;
  request: SolveRequest;
  forcedKnockouts: number[];
  timeToTarget: number | null;
  ped: number | null;
  status: string;
}

export interface ViewState {
  scenarioId: string | null;
  draft: ScenarioDoc;
  dirty: boolean;
  tables: TablesPayload | null;
  engine: EngineName;
  selectedCase: number | null;
  forcedKnockouts: Set<number>;
  sliderT: number;
  lastJob: JobPayload | null;
  pinned: PinnedPlan[];
  solveInFlight: boolean;
}

export function initialState(doc: ScenarioDoc): ViewState {
  return {
    scenarioId: null,
    draft: structuredClone(doc),
    dirty: true,
    tables: null,
    engine: "exact",
    selectedCase: 1,
    forcedKnockouts: new Set(),
    sliderT: 0,
    lastJob: null,
    pinned: [],
    solveInFlight: false,
  };
}

export function toggleForcedKnockout(state: ViewState, sensorId: number): void {
  if (state.forcedKnockouts.has(sensorId)) {
    state.forcedKnockouts.delete(sensorId);
  } else {
    state.forcedKnockouts.add(sensorId);
  }
}

export function setSlider(state: ViewState, t: number): void {
  const horizon = state.draft.horizon;
  state.sliderT = Math.max(0, Math.min(horizon, Math.round(t)));
}

export function moveSensor(
  state: ViewState,
  sensorId: number,
  x: number,
  y: number,
): void {
  const sensor = state.draft.sensors.find((s) => s.id === sensorId);
  if (!sensor) return;
  sensor.position = [x, y];
  state.dirty = true;
}

export function moveAgent(
  state: ViewState,
  agentId: number,
  cell: [number, number],
): void {
  const agent = state.draft.agents.find((a) => a.id === agentId);
  if (!agent) return;
  agent.start = cell;
  state.dirty = true;
}

export function moveTarget(state: ViewState, cell: [number, number]): void {
  state.draft.mesh.target = cell;
  state.dirty = true;
}

/** Non-fatal issues with the current draft, shown next to the save button. */
export function draftWarnings(draft: ScenarioDoc): string[] {
  const warnings: string[] = [];
  const [tx, ty] = cellToWorld(draft.mesh.target[0], draft.mesh.target[1]);
  for (const sensor of draft.sensors) {
    const d = Math.hypot(tx - sensor.position[0], ty - sensor.position[1]);
    if (d <= sensor.radius) {
      warnings.push(
        `target sits inside sensor ${sensor.id}'s detection circle; ` +
          `the model treats the target as undetectable there`,
      );
    }
  }
  for (const agent of draft.agents) {
    const [ax, ay] = cellToWorld(agent.start[0], agent.start[1]);
    for (const sensor of draft.sensors) {
      const d = Math.hypot(ax - sensor.position[0], ay - sensor.position[1]);
      if (d <= sensor.radius) {
        warnings.push(
          `agent ${agent.id} starts inside sensor ${sensor.id}'s detection circle`,
        );
      }
    }
  }
  return warnings;
}

/** The solve request for the current controls; forced knockouts ride along
 * as scenario-level what-if input, never as model variables. */
export function buildSolveRequest(state: ViewState): SolveRequest {
  const request: SolveRequest = { engine: state.engine };
  if (state.selectedCase !== null) {
    request.case = state.selectedCase;
  }
  if (state.forcedKnockouts.size > 0) {
    request.forced_knockouts = [...state.forcedKnockouts].sort((a, b) => a - b);
  }
  return request;
}

export function recordJob(state: ViewState, job: JobPayload): void {
  state.lastJob = job;
  state.solveInFlight = false;
  state.sliderT = 0;
}

export function pinLastPlan(state: ViewState, label: string): void {
  const job = state.lastJob;
  if (!job) return;
  state.pinned.push({
    label,
    request: job.request,
    forcedKnockouts: [...state.forcedKnockouts].sort((a, b) => a - b),
    timeToTarget: job.result?.time_to_target ?? null,
    ped: job.result?.ped ?? null,
    status: job.status,
  });
}
