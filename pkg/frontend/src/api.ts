/** Thin fetch client for the /v1 API.
 *
 * Every failure is normalized to an ApiError with a `kind` the session
 * machine can route on: transport problems become "network", a 503
 * becomes "model-loading", unparseable or mis-shaped bodies become
 * "malformed", and 4xx validation answers keep their server detail.
 */

import {
  FeedbackBody,
  TaskPayload,
  TaskStats,
  isTaskPayload,
  isTaskStats,
} from "./types.js";

export type ApiFailureKind =
  | "network"
  | "model-loading"
  | "malformed"
  | "bad-request"
  | "not-found"
  | "server";

export class ApiError extends Error {
  readonly kind: ApiFailureKind;
  readonly status: number | undefined;

  constructor(kind: ApiFailureKind, message: string, status?: number) {
    super(message);
    this.name = "ApiError";
    this.kind = kind;
    this.status = status;
  }
}

/** Result of a feedback POST that did not throw. */
export type SubmitResult = "ok" | "already-answered";

export interface ApiClient {
  nextTask(): Promise<TaskPayload | null>;
  submitFeedback(taskId: string, body: FeedbackBody): Promise<SubmitResult>;
  stats(): Promise<TaskStats>;
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body: unknown = await response.json();
    if (typeof body === "object" && body !== null && "detail" in body) {
      const detail = (body as { detail: unknown }).detail;
      return typeof detail === "string" ? detail : JSON.stringify(detail);
    }
  } catch {
    /* fall through to the status line */
  }
  return `HTTP ${response.status}`;
}

async function jsonOf(response: Response): Promise<unknown> {
  try {
    return (await response.json()) as unknown;
  } catch {
    throw new ApiError("malformed", "response body is not JSON", response.status);
  }
}

export function createClient(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch,
): ApiClient {
  const base = baseUrl.replace(/\/+$/, "");

  async function request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await fetchImpl(`${base}${path}`, init);
    } catch (e) {
      throw new ApiError("network", e instanceof Error ? e.message : String(e));
    }
    if (response.status === 503) {
      throw new ApiError("model-loading", await detailOf(response), 503);
    }
    return response;
  }

  return {
    async nextTask(): Promise<TaskPayload | null> {
      const response = await request("/v1/tasks/next");
      if (response.status === 204) {
        return null;
      }
      if (!response.ok) {
        throw new ApiError("server", await detailOf(response), response.status);
      }
      const body = await jsonOf(response);
      if (!isTaskPayload(body)) {
        throw new ApiError("malformed", "task payload has an unexpected shape", response.status);
      }
      return body;
    },

    async submitFeedback(taskId: string, body: FeedbackBody): Promise<SubmitResult> {
      const response = await request(`/v1/tasks/${encodeURIComponent(taskId)}/feedback`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
      if (response.ok) {
        return "ok";
      }
      if (response.status === 409) {
        return "already-answered";
      }
      if (response.status === 400) {
        throw new ApiError("bad-request", await detailOf(response), 400);
      }
      if (response.status === 404) {
        throw new ApiError("not-found", await detailOf(response), 404);
      }
      throw new ApiError("server", await detailOf(response), response.status);
    },

    async stats(): Promise<TaskStats> {
      const response = await request("/v1/tasks/stats");
      if (!response.ok) {
        throw new ApiError("server", await detailOf(response), response.status);
      }
      const body = await jsonOf(response);
      if (!isTaskStats(body)) {
        throw new ApiError("malformed", "stats payload has an unexpected shape", response.status);
      }
      return body;
    },
  };
}
