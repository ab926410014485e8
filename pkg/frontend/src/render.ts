import type { UiSessionView } from "./state.js";

// view-model builders: pure data out, so ordering is testable without a DOM

export interface DiagnosisRowVm {
  diseaseId: number;
  name: string;
  percent: string; // e.g. "37.2%"
}

export function diagnosisRows(view: UiSessionView): DiagnosisRowVm[] {
  if (!view.diagnosis) return [];
  // exactly the server's order
  return view.diagnosis.map((row) => ({
    diseaseId: row.disease_id,
    name: row.name,
    percent: `${(100 * row.probability).toFixed(1)}%`,
  }));
}

export function historyLines(view: UiSessionView): string[] {
  return view.history.map(
    (row, i) => `${i + 1}. ${row.name}: ${row.answer}`,
  );
}

export interface CatalogEntryVm {
  id: number;
  name: string;
  selected: boolean;
}

export function filteredCatalog(view: UiSessionView, query: string): CatalogEntryVm[] {
  const q = query.trim().toLowerCase();
  return view.catalog
    .filter((s) => !q || s.name.toLowerCase().includes(q))
    .map((s) => ({ id: s.id, name: s.name, selected: view.selected.includes(s.id) }));
}

export function questionPrompt(view: UiSessionView): string | null {
  if (view.phase !== "questioning" || !view.currentQuestion) return null;
  return `Do you have: ${view.currentQuestion.name}?`;
}

export function progressLabel(view: UiSessionView): string {
  return `${view.questionCount} question${view.questionCount === 1 ? "" : "s"} answered`;
}
