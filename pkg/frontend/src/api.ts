/** Thin client over the dstage HTTP API. All run-state mutation goes
 * through these documented endpoints and nowhere else. */

import type { Report, Requirement, Snapshot } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.url(path), init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body && (body as { detail?: unknown }).detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createRun(requirement: Requirement, config: Record<string, unknown>): Promise<{ run_id: string }> {
    return this.post("/runs", { requirement, config });
  }

  getSnapshot(runId: string): Promise<Snapshot> {
    return this.request(`/runs/${runId}`);
  }

  getReport(runId: string): Promise<Report> {
    return this.request(`/runs/${runId}/report`);
  }

  /** Raw report body text, for byte-faithful display of totals. */
  async getReportText(runId: string): Promise<string> {
    const response = await this.fetchImpl(this.url(`/runs/${runId}/report`));
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return response.text();
  }

  postEvent(runId: string, dayIndex: number, description: string, idempotencyKey?: string) {
    return this.post<{ queued: boolean }>(`/runs/${runId}/emergent-events`, {
      day_index: dayIndex,
      description,
      idempotency_key: idempotencyKey ?? null,
    });
  }

  postOverride(runId: string, dayIndex: number, agentId: string, replacement: string, idempotencyKey?: string) {
    return this.post<{ queued: boolean }>(`/runs/${runId}/overrides`, {
      day_index: dayIndex,
      agent_id: agentId,
      replacement,
      idempotency_key: idempotencyKey ?? null,
    });
  }

  revise(runId: string, requirement: Partial<Requirement>): Promise<{ run_id: string }> {
    return this.post(`/runs/${runId}/revise`, { requirement });
  }

  eventsUrl(runId: string, fromIndex = 0): string {
    return this.url(`/runs/${runId}/events?from_index=${fromIndex}`);
  }
}
