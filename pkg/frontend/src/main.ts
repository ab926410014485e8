// DOM wiring: all behavior lives in the controller and render helpers.

import { ConsultationClient } from "./api.js";
import {
  diagnosisRows,
  filteredCatalog,
  historyLines,
  progressLabel,
  questionPrompt,
} from "./render.js";
import { SessionController, UiSessionView } from "./state.js";

const client = new ConsultationClient((url, init) => fetch(url, init));
const controller = new SessionController(client);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const intakePane = el<HTMLDivElement>("intake");
const questionPane = el<HTMLDivElement>("questioning");
const concludedPane = el<HTMLDivElement>("concluded");
const searchBox = el<HTMLInputElement>("symptom-search");
const catalogList = el<HTMLDivElement>("symptom-list");
const startButton = el<HTMLButtonElement>("start-button");
const errorBox = el<HTMLDivElement>("error-box");
const promptBox = el<HTMLDivElement>("question-prompt");
const progressBox = el<HTMLDivElement>("progress");
const historyBox = el<HTMLUListElement>("history");
const resultBody = el<HTMLTableSectionElement>("diagnosis-body");
const yesButton = el<HTMLButtonElement>("answer-yes");
const noButton = el<HTMLButtonElement>("answer-no");

function renderCatalog(view: UiSessionView) {
  catalogList.replaceChildren(
    ...filteredCatalog(view, searchBox.value).map((entry) => {
      const chip = document.createElement("button");
      chip.textContent = entry.name;
      chip.className = entry.selected ? "chip selected" : "chip";
      chip.onclick = () => controller.toggleSymptom(entry.id);
      return chip;
    }),
  );
}

function render(view: UiSessionView) {
  intakePane.hidden = view.phase !== "intake";
  questionPane.hidden = view.phase !== "questioning";
  concludedPane.hidden = view.phase !== "concluded";

  errorBox.textContent = view.error ?? "";
  errorBox.hidden = !view.error;

  if (view.phase === "intake") {
    renderCatalog(view);
    startButton.disabled = !controller.canSubmitIntake();
  }

  if (view.phase === "questioning") {
    promptBox.textContent = questionPrompt(view) ?? "";
    yesButton.disabled = view.busy;
    noButton.disabled = view.busy;
  }

  progressBox.textContent = progressLabel(view);
  historyBox.replaceChildren(
    ...historyLines(view).map((line) => {
      const li = document.createElement("li");
      li.textContent = line;
      return li;
    }),
  );

  if (view.phase === "concluded") {
    resultBody.replaceChildren(
      ...diagnosisRows(view).map((row) => {
        const tr = document.createElement("tr");
        const name = document.createElement("td");
        name.textContent = row.name;
        const pct = document.createElement("td");
        pct.textContent = row.percent;
        tr.append(name, pct);
        return tr;
      }),
    );
  }
}

controller.subscribe(render);
searchBox.addEventListener("input", () => render(controller.snapshot()));
startButton.addEventListener("click", () => void controller.submitIntake());
yesButton.addEventListener("click", () => void controller.submitAnswer("yes"));
noButton.addEventListener("click", () => void controller.submitAnswer("no"));

void controller.loadCatalog();
