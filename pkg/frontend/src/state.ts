import { ApiError, ConsultationClient } from "./api.js";
import { messageFor } from "./errors.js";
import type { DiagnosisRow, HistoryRow, SymptomRef } from "./types.js";

export type Phase = "intake" | "questioning" | "concluded";

export interface UiSessionView {
  phase: Phase;
  sessionId: string | null;
  catalog: SymptomRef[];
  selected: number[]; // intake picks, in click order
  currentQuestion: SymptomRef | null;
  history: HistoryRow[];
  // diagnosis rows exactly as the server sent them; never re-sorted here
  diagnosis: DiagnosisRow[] | null;
  questionCount: number;
  busy: boolean;
  error: string | null;
}

export function initialView(): UiSessionView {
  return {
    phase: "intake",
    sessionId: null,
    catalog: [],
    selected: [],
    currentQuestion: null,
    history: [],
    diagnosis: null,
    questionCount: 0,
    busy: false,
    error: null,
  };
}

type Listener = (view: UiSessionView) => void;

/** Drives one consultation against the server; the view mirrors it exactly.
 *
 * One request may be in flight per session: while busy, submits are ignored,
 * and a stale response (superseded by a newer submit) is discarded by
 * sequence number.
 */
export class SessionController {
  private view: UiSessionView = initialView();
  private seq = 0;
  private listeners: Listener[] = [];

  constructor(private readonly client: ConsultationClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.view);
  }

  snapshot(): UiSessionView {
    return this.view;
  }

  private emit(patch: Partial<UiSessionView>): void {
    this.view = { ...this.view, ...patch };
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  async loadCatalog(): Promise<void> {
    try {
      const catalog = await this.client.listSymptoms();
      this.emit({ catalog, error: null });
    } catch (err) {
      this.emit({ error: this.describe(err) });
    }
  }

  toggleSymptom(id: number): void {
    if (this.view.phase !== "intake") return;
    const selected = this.view.selected.includes(id)
      ? this.view.selected.filter((s) => s !== id)
      : [...this.view.selected, id];
    this.emit({ selected, error: null });
  }

  canSubmitIntake(): boolean {
    return this.view.phase === "intake" && this.view.selected.length > 0 && !this.view.busy;
  }

  async submitIntake(): Promise<void> {
    if (!this.canSubmitIntake()) return; // zero selection stays blocked client-side
    const ticket = ++this.seq;
    this.emit({ busy: true, error: null });
    try {
      const session = await this.client.startSession([...this.view.selected]);
      if (ticket !== this.seq) return; // superseded
      this.emit({
        busy: false,
        sessionId: session.session_id,
        phase: session.status === "concluded" ? "concluded" : "questioning",
        currentQuestion: session.question,
        diagnosis: session.diagnosis,
        questionCount: session.question_count,
      });
    } catch (err) {
      if (ticket !== this.seq) return;
      this.emit({ busy: false, error: this.describe(err) });
    }
  }

  async submitAnswer(answer: "yes" | "no"): Promise<void> {
    const { phase, busy, sessionId, currentQuestion } = this.view;
    if (phase !== "questioning" || busy || !sessionId || !currentQuestion) {
      return; // double submits are ignored until the response lands
    }
    const question = currentQuestion;
    const ticket = ++this.seq;
    this.emit({ busy: true, error: null });
    try {
      const session = await this.client.answer(sessionId, question.id, answer);
      if (ticket !== this.seq) return; // stale: a newer submit took over
      this.emit({
        busy: false,
        phase: session.status === "concluded" ? "concluded" : "questioning",
        currentQuestion: session.question,
        diagnosis: session.diagnosis,
        questionCount: session.question_count,
        history: [
          ...this.view.history,
          { symptom_id: question.id, name: question.name, answer },
        ],
      });
    } catch (err) {
      if (ticket !== this.seq) return;
      this.emit({ busy: false, error: this.describe(err) });
    }
  }

  async refreshTranscript(): Promise<void> {
    if (!this.view.sessionId) return;
    try {
      const t = await this.client.transcript(this.view.sessionId);
      this.emit({
        history: t.history,
        diagnosis: t.diagnosis,
        questionCount: t.question_count,
        phase: t.status === "concluded" ? "concluded" : this.view.phase,
        error: null,
      });
    } catch (err) {
      this.emit({ error: this.describe(err) });
    }
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError) {
      return messageFor(err.code, err.message);
    }
    return "The server could not be reached. Your answers are kept; try again.";
  }
}
