import type {
  ApiErrorBody,
  SessionPayload,
  SymptomRef,
  TranscriptPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "unknown_error";
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as ApiErrorBody;
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(response.status, code, message);
}

/** Typed client for the /v1 consultation service. */
export class ConsultationClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listSymptoms(): Promise<SymptomRef[]> {
    return this.request<SymptomRef[]>("/v1/symptoms");
  }

  startSession(initialSymptoms: number[]): Promise<SessionPayload> {
    return this.request<SessionPayload>("/v1/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ initial_symptoms: initialSymptoms }),
    });
  }

  answer(
    sessionId: string,
    symptomId: number,
    answer: "yes" | "no",
  ): Promise<SessionPayload> {
    return this.request<SessionPayload>(
      `/v1/sessions/${encodeURIComponent(sessionId)}/answer`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ symptom_id: symptomId, answer }),
      },
    );
  }

  transcript(sessionId: string): Promise<TranscriptPayload> {
    return this.request<TranscriptPayload>(
      `/v1/sessions/${encodeURIComponent(sessionId)}`,
    );
  }
}
