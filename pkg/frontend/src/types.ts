// Payload shapes of the /v1 consultation API, mirrored exactly.

export interface SymptomRef {
  id: number;
  name: string;
}

export interface DiagnosisRow {
  disease_id: number;
  name: string;
  probability: number;
}

export type SessionStatus = "awaiting_initial" | "asking" | "concluded";

export interface SessionPayload {
  session_id: string;
  status: SessionStatus;
  question: SymptomRef | null;
  diagnosis: DiagnosisRow[] | null;
  question_count: number;
}

export interface HistoryRow {
  symptom_id: number;
  name: string;
  answer: "yes" | "no";
}

export interface TranscriptPayload extends SessionPayload {
  evidence: SymptomRef[];
  denied: SymptomRef[];
  history: HistoryRow[];
}

export type ErrorCode =
  | "unknown_session"
  | "not_pending"
  | "invalid_symptom"
  | "session_concluded";

export interface ApiErrorBody {
  error: { code: string; message: string };
}
