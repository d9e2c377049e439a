// Thin async client for the authentication service's JSON API.
// Network failures throw ServiceUnreachable so flows can show a retry
// banner and drop the in-flight attempt (never queue it silently).

import { EnrollStatus, TraceDocument, VerifyResult } from "./types";

export class ServiceUnreachable extends Error {}

export class RequestRejected extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    let response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnreachable(`service unreachable: ${err}`);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const detail = typeof payload?.detail === "string"
        ? payload.detail
        : `HTTP ${response.status}`;
      throw new RequestRejected(response.status, detail);
    }
    return payload;
  }

  health(): Promise<unknown> {
    return this.request("GET", "/health");
  }

  createUser(userId: string, task: string): Promise<EnrollStatus> {
    return this.request("POST", "/users", { user_id: userId, task }) as Promise<EnrollStatus>;
  }

  status(userId: string): Promise<EnrollStatus> {
    return this.request("GET", `/users/${userId}/status`) as Promise<EnrollStatus>;
  }

  enroll(userId: string, trace: TraceDocument): Promise<EnrollStatus> {
    return this.request("POST", `/users/${userId}/enroll`, trace) as Promise<EnrollStatus>;
  }

  verify(
    userId: string,
    trace: TraceDocument,
    method: "euclidean" | "hamming",
    adapt: boolean,
  ): Promise<VerifyResult> {
    return this.request("POST", `/users/${userId}/verify`, {
      trace,
      method,
      adapt,
    }) as Promise<VerifyResult>;
  }
}
