/** Typed client for the planning service. All numbers shown in the UI come
 * from these responses; nothing is recomputed client-side. */

import type {
  JobPayload,
  ScenarioCreated,
  ScenarioDoc,
  ScenarioFetched,
  SolveRequest,
  TablesPayload,
} from "./types";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service responded ${status}: ${detail}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? JSON.stringify((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ServiceError(response.status, detail);
  }
  return body as T;
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async createScenario(doc: ScenarioDoc, draft = false): Promise<ScenarioCreated> {
    const query = draft ? "?draft=true" : "";
    const response = await fetch(this.url(`/api/scenarios${query}`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    return asJson<ScenarioCreated>(response);
  }

  async getScenario(id: string): Promise<ScenarioFetched> {
    return asJson(await fetch(this.url(`/api/scenarios/${id}`)));
  }

  async getTables(id: string): Promise<TablesPayload> {
    return asJson(await fetch(this.url(`/api/scenarios/${id}/tables`)));
  }

  async startSolve(id: string, request: SolveRequest): Promise<string> {
    const response = await fetch(this.url(`/api/scenarios/${id}/solve`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    const payload = await asJson<{ job_id: string }>(response);
    return payload.job_id;
  }

  async getJob(jobId: string): Promise<JobPayload> {
    return asJson(await fetch(this.url(`/api/jobs/${jobId}`)));
  }

  /** Poll a job at the configured cadence until it reaches a terminal state. */
  async pollJob(jobId: string, options: PollOptions = {}): Promise<JobPayload> {
    const interval = options.intervalMs ?? 500;
    const deadline = Date.now() + (options.timeoutMs ?? 120_000);
    for (;;) {
      const job = await this.getJob(jobId);
      if (
        job.status === "done" ||
        job.status === "infeasible" ||
        job.status === "failed" ||
        job.status === "timeout"
      ) {
        return job;
      }
      if (Date.now() > deadline) {
        throw new Error(`job ${jobId} still ${job.status} after timeout`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  async solveAndWait(
    id: string,
    request: SolveRequest,
    options: PollOptions = {},
  ): Promise<JobPayload> {
    const jobId = await this.startSolve(id, request);
    return this.pollJob(jobId, options);
  }
}
