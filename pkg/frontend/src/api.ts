// Typed client for the session service. All requests go through one fetch
// function so tests can inject a fake transport.

import type {
  CreateSessionRequest,
  CreateSessionResponse,
  MessageResponse,
  SessionSnapshot,
} from "./wire.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The service answered with a non-2xx status. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }
}

/** The service could not be reached at all. */
export class ConnectivityError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConnectivityError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ServiceError(response.status, detail);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new ConnectivityError(`the service did not respond (${String(cause)})`);
    }
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createSession(body?: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  postMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getState(sessionId: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/state`);
  }
}
