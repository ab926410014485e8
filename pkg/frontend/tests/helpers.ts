import type { FetchLike } from "../src/api.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export interface MockServer {
  fetch: FetchLike;
  requests: RecordedRequest[];
  /** queue the next response; responses are consumed in FIFO order */
  respond(status: number, body: unknown): void;
  failNext(error?: Error): void;
}

export function mockServer(): MockServer {
  const queue: Array<{ status: number; body: unknown } | { error: Error }> = [];
  const requests: RecordedRequest[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    requests.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : null,
    });
    const next = queue.shift();
    if (!next) throw new Error(`no scripted response for ${url}`);
    if ("error" in next) throw next.error;
    return new Response(JSON.stringify(next.body), {
      status: next.status,
      headers: { "content-type": "application/json" },
    });
  };
  return {
    fetch: fetchFn,
    requests,
    respond(status, body) {
      queue.push({ status, body });
    },
    failNext(error = new Error("network down")) {
      queue.push({ error });
    },
  };
}

export function sessionPayload(overrides: Partial<Record<string, unknown>> = {}) {
  return {
    session_id: "s-1",
    status: "asking",
    question: { id: 7, name: "headache" },
    diagnosis: null,
    question_count: 0,
    ...overrides,
  };
}
