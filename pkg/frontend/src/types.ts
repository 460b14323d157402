/** Payload types for the planning service API (schema version 1). */

export type Mode =
  | "feasibility-at-T"
  | "min-time"
  | "max-ped"
  | "min-time-required-ped";

export type EngineName = "exact" | "heuristic" | "b0" | "oracle" | "external";

export interface AgentDoc {
  id: number;
  start: [number, number]; // [row, col]
  knockout_cost: number;
  knockout_duration: number;
  confusion_cost: number;
  confusion_duration: number;
  knockout_cooldown: number | null;
  confusion_cooldown: number | null;
  knockout_dwell: number | null;
  confusion_dwell: number | null;
}

export interface SensorDoc {
  id: number;
  position: [number, number]; // [x, y] in mesh units
  radius: number;
}

export interface ScenarioDoc {
  version: number;
  mesh: {
    rows: number;
    cols: number;
    blocked: [number, number][];
    target: [number, number];
  };
  sensors: SensorDoc[];
  agents: AgentDoc[];
  horizon: number;
  budget: number;
  omega: number;
  knockout_radius: number;
  confusion_factor: number;
  required_ped: number | null;
  mode: Mode;
  exit_target: [number, number] | null;
  forced_knockouts: number[];
}

export interface TablesPayload {
  schema_version: number;
  id: string;
  target: number;
  vertices: [number, number, number][]; // [id, x, y]
  edges: [number, number][];
  coverage_count: Record<string, number>;
  multi_covered: number[];
  evade: Record<string, number>;
  evade_confused: Record<string, number>;
  omega: number;
}

export interface PlanDoc {
  version: number;
  trajectory: Record<string, number[]>; // agent id -> vertex per time step
  knockouts: [number, number, number][]; // [agent, vertex, time]
  confusions: [number, number][]; // [agent, time]
  objective_value: number | null;
  ped: number | null;
  time_to_target: number | null;
  mode: Mode | null;
}

export interface SolveRequest {
  engine: EngineName;
  case?: number;
  horizon?: number;
  budget?: number;
  required_ped?: number;
  forced_knockouts?: number[];
  time_limit?: number;
}

export type JobStatus =
  | "queued"
  | "running"
  | "done"
  | "infeasible"
  | "failed"
  | "timeout";

export interface SolveResult {
  plan: PlanDoc;
  objective_value: number | null;
  time_to_target: number | null;
  ped: number | null;
  valid: boolean;
  violations: string[];
  exclusion_percentage: number;
  trace_summary: {
    chosen_agent: number | null;
    iterations: Record<string, number>;
  } | null;
}

export interface JobPayload {
  schema_version: number;
  id: string;
  scenario_id: string;
  request: SolveRequest;
  status: JobStatus;
  result: SolveResult | null;
  error: string | null;
}

export interface ScenarioCreated {
  schema_version: number;
  id: string;
  status: "valid" | "draft";
}

export interface ScenarioFetched {
  schema_version: number;
  id: string;
  status: string;
  scenario: ScenarioDoc;
}
