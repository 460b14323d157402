/** Browser planner: edit the board, run solves, replay plans, compare.
 *
 * Flows: drag sensors/agents/target on the SVG board; pick an engine and
 * case preset and solve (one in-flight solve per tab, polled every 500 ms);
 * scrub the returned trajectory with the time slider; toggle sensors
 * "knocked out" and re-solve to explore what-ifs; pin results to the
 * comparison tray. Service errors are shown verbatim with a retry.
 */

import { ServiceClient, ServiceError } from "./api";
import { comparePlans } from "./compare";
import { makeTransform, nearestCell, pickEntity, toWorld } from "./geometry";
import { REFERENCE_SCENARIO } from "./referenceScenario";
import {
  ViewState,
  buildSolveRequest,
  draftWarnings,
  initialState,
  moveAgent,
  moveSensor,
  moveTarget,
  pinLastPlan,
  recordJob,
  setSlider,
  toggleForcedKnockout,
} from "./state";
import { renderBoard } from "./svgRender";
import type { Pick } from "./geometry";

const client = new ServiceClient(
  (window as { SENTINEL_SERVICE?: string }).SENTINEL_SERVICE ?? "",
);
const state: ViewState = initialState(REFERENCE_SCENARIO);
let dragging: Pick | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderStatus(text: string, isError = false): void {
  const status = el<HTMLDivElement>("status");
  status.textContent = text;
  status.className = isError ? "status error" : "status";
  el<HTMLButtonElement>("retry").hidden = !isError;
}

function redrawBoard(): void {
  const plan = state.lastJob?.result?.plan ?? null;
  el<HTMLDivElement>("board").innerHTML = renderBoard(state.draft, state.tables, {
    plan,
    step: state.sliderT,
    forcedKnockouts: state.forcedKnockouts,
  });
  const warnings = draftWarnings(state.draft);
  el<HTMLDivElement>("warnings").textContent = warnings.join(" | ");
  const slider = el<HTMLInputElement>("slider");
  slider.max = String(state.draft.horizon);
  slider.value = String(state.sliderT);
  el<HTMLSpanElement>("slider-value").textContent = `t = ${state.sliderT}`;
}

function redrawResult(): void {
  const job = state.lastJob;
  const panel = el<HTMLDivElement>("result");
  if (!job) {
    panel.textContent = "no solve yet";
    return;
  }
  if (job.status !== "done" || !job.result) {
    panel.textContent = `${job.status}${job.error ? `: ${job.error}` : ""}`;
    return;
  }
  const r = job.result;
  const ped = r.ped === null ? "n/a" : r.ped.toFixed(4);
  panel.textContent =
    `status ${job.status} | time to target ${r.time_to_target ?? "n/a"} | ` +
    `PED ${ped} | valid ${r.valid}`;
}

function redrawTray(): void {
  const tray = el<HTMLUListElement>("tray");
  tray.innerHTML = "";
  const baseline = state.pinned[0];
  state.pinned.forEach((pin, index) => {
    const item = document.createElement("li");
    const ped = pin.ped === null ? "n/a" : pin.ped.toFixed(4);
    let text = `${pin.label}: ${pin.timeToTarget ?? "n/a"} steps, PED ${ped}`;
    if (index > 0 && baseline) {
      const delta = comparePlans(baseline, pin);
      text += ` (${delta.steps}, ${delta.ped})`;
    }
    item.textContent = text;
    tray.appendChild(item);
  });
}

function redrawSensors(): void {
  const list = el<HTMLDivElement>("sensors");
  list.innerHTML = "";
  for (const sensor of state.draft.sensors) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state.forcedKnockouts.has(sensor.id);
    box.addEventListener("change", () => {
      toggleForcedKnockout(state, sensor.id);
      redrawBoard();
    });
    label.appendChild(box);
    label.append(` knock out sensor ${sensor.id}`);
    list.appendChild(label);
  }
}

async function saveDraft(): Promise<void> {
  renderStatus("saving scenario...");
  const created = await client.createScenario(state.draft);
  state.scenarioId = created.id;
  state.dirty = false;
  state.tables = await client.getTables(created.id);
  renderStatus(`scenario ${created.id} saved (${created.status})`);
  redrawBoard();
}

async function runSolve(): Promise<void> {
  if (state.solveInFlight) return;
  try {
    if (state.dirty || !state.scenarioId) {
      await saveDraft();
    }
    state.solveInFlight = true;
    const request = buildSolveRequest(state);
    renderStatus(`solving with ${request.engine}...`);
    const job = await client.solveAndWait(state.scenarioId!, request, {
      intervalMs: 500,
    });
    recordJob(state, job);
    renderStatus(`job ${job.id} finished: ${job.status}`);
    redrawResult();
    redrawBoard();
  } catch (error) {
    state.solveInFlight = false;
    const message =
      error instanceof ServiceError ? error.message : String(error);
    renderStatus(message, true);
  }
}

function boardPointer(event: PointerEvent): [number, number] {
  const svg = el<HTMLDivElement>("board").querySelector("svg");
  if (!svg) return [0, 0];
  const rect = svg.getBoundingClientRect();
  // undo any CSS scaling before mapping into world coordinates
  const view = (svg as SVGSVGElement).viewBox.baseVal;
  const sx = ((event.clientX - rect.left) * view.width) / rect.width;
  const sy = ((event.clientY - rect.top) * view.height) / rect.height;
  const t = makeTransform(state.draft);
  return toWorld(t, sx, sy);
}

function wireBoardDrag(): void {
  const board = el<HTMLDivElement>("board");
  board.addEventListener("pointerdown", (event) => {
    const [x, y] = boardPointer(event);
    dragging = pickEntity(state.draft, x, y);
  });
  board.addEventListener("pointermove", (event) => {
    if (!dragging) return;
    const [x, y] = boardPointer(event);
    if (dragging.kind === "sensor") {
      moveSensor(state, dragging.id, x, y);
    } else if (dragging.kind === "agent") {
      moveAgent(state, dragging.id, nearestCell(state.draft, x, y));
    } else {
      moveTarget(state, nearestCell(state.draft, x, y));
    }
    redrawBoard();
  });
  board.addEventListener("pointerup", () => {
    dragging = null;
  });
}

function init(): void {
  el<HTMLSelectElement>("engine").addEventListener("change", (event) => {
    state.engine = (event.target as HTMLSelectElement).value as ViewState["engine"];
  });
  el<HTMLSelectElement>("case").addEventListener("change", (event) => {
    const raw = (event.target as HTMLSelectElement).value;
    state.selectedCase = raw === "none" ? null : Number(raw);
  });
  el<HTMLInputElement>("slider").addEventListener("input", (event) => {
    setSlider(state, Number((event.target as HTMLInputElement).value));
    redrawBoard();
  });
  el<HTMLButtonElement>("save").addEventListener("click", () => {
    saveDraft().catch((error) => renderStatus(String(error), true));
  });
  el<HTMLButtonElement>("solve").addEventListener("click", () => void runSolve());
  el<HTMLButtonElement>("retry").addEventListener("click", () => void runSolve());
  el<HTMLButtonElement>("pin").addEventListener("click", () => {
    pinLastPlan(state, `plan ${state.pinned.length + 1}`);
    redrawTray();
  });
  wireBoardDrag();
  redrawSensors();
  redrawBoard();
  redrawResult();
  renderStatus("ready; save the scenario, then solve");
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
