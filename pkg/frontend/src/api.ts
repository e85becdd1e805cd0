// Thin typed client over the trajectory service. Fetches are cancellable
// so a stale selection can abandon its in-flight requests.

import {
  MetricsPayload,
  ProjectionPayload,
  StepPayload,
  TrajectoryDetail,
  TrajectorySummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private base: string) {}

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const res = await fetch(`${this.base}${path}`, { signal });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && typeof body.error === "string") detail = body.error;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  listTrajectories(signal?: AbortSignal): Promise<TrajectorySummary[]> {
    return this.get("/api/trajectories", signal);
  }

  trajectory(id: string, signal?: AbortSignal): Promise<TrajectoryDetail> {
    return this.get(`/api/trajectories/${encodeURIComponent(id)}`, signal);
  }

  step(id: string, k: number, signal?: AbortSignal): Promise<StepPayload> {
    return this.get(`/api/trajectories/${encodeURIComponent(id)}/steps/${k}`, signal);
  }

  metrics(id: string, signal?: AbortSignal): Promise<MetricsPayload> {
    return this.get(`/api/trajectories/${encodeURIComponent(id)}/metrics`, signal);
  }

  projection(id: string, signal?: AbortSignal): Promise<ProjectionPayload> {
    return this.get(`/api/trajectories/${encodeURIComponent(id)}/projection`, signal);
  }
}

export interface ExplorerConfig {
  apiBase: string;
}

export async function loadConfig(url = "./config.json"): Promise<ExplorerConfig> {
  try {
    const res = await fetch(url);
    if (res.ok) {
      const doc = await res.json();
      if (doc && typeof doc.apiBase === "string") return { apiBase: doc.apiBase };
    }
  } catch {
    // fall through to the default below
  }
  return { apiBase: "http://127.0.0.1:8000" };
}
