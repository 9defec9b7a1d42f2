/**
 * Review UI wiring: queue sidebar, trial canvas, source toggles, keyboard.
 *
 * Interaction model: click a fixation (or step with [ and ]) to select it,
 * press a digit key 0-9 to stage a line assignment, D to stage a discard,
 * U to undo, Ctrl+S / the Save button to post all pending overrides.
 * Navigation away with unsaved edits asks for confirmation.
 */

import { ApiError, ReviewApi } from "./api";
import { fitTransform, hitTestFixation, renderTrial, type ViewTransform } from "./render";
import { ReviewQueue, TrialEditor } from "./state";

const api = new ReviewApi("");
const queue = new ReviewQueue();
let editor: TrialEditor | null = null;
let transform: ViewTransform | null = null;

const canvas = document.getElementById("trial-canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const queueList = document.getElementById("queue-list") as HTMLUListElement;
const statusBar = document.getElementById("status") as HTMLDivElement;
const sourceToggles = document.getElementById("source-toggles") as HTMLDivElement;
const saveButton = document.getElementById("save") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const authorInput = document.getElementById("author") as HTMLInputElement;

function enabledSources(): string[] {
  return Array.from(
    sourceToggles.querySelectorAll<HTMLInputElement>("input:checked"),
    (el) => el.value,
  );
}

function setStatus(text: string, isError = false) {
  statusBar.textContent = text;
  statusBar.className = isError ? "status error" : "status";
}

function redraw() {
  if (!editor || !transform) return;
  renderTrial(ctx, editor, transform, {
    enabledSources: enabledSources(),
    showSaccades: true,
    showDisagreement: true,
  });
  saveButton.disabled = !editor.hasPending;
  undoButton.disabled = !editor.hasPending;
}

function renderQueue() {
  queueList.innerHTML = "";
  queue.items.forEach((item, i) => {
    const li = document.createElement("li");
    li.textContent = `${item.id}  d=${item.disagreement.toFixed(3)}  (${item.overridden_count} overrides)`;
    li.className = i === queue.index ? "active" : "";
    li.onclick = () => {
      void openIndex(i);
    };
    queueList.appendChild(li);
  });
}

function renderToggles() {
  if (!editor) return;
  const names = [...Object.keys(editor.detail.sources).sort(), "woc", "effective"];
  sourceToggles.innerHTML = "";
  for (const name of names) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = name;
    box.checked = name === "woc" || name === "effective";
    box.onchange = redraw;
    label.appendChild(box);
    label.appendChild(document.createTextNode(name));
    sourceToggles.appendChild(label);
  }
}

function guardUnsaved(): boolean {
  if (editor?.hasPending) {
    return window.confirm("Discard unsaved edits on this trial?");
  }
  return true;
}

async function openIndex(i: number): Promise<void> {
  if (!guardUnsaved()) return;
  queue.index = i;
  const summary = queue.current;
  if (!summary) return;
  try {
    const detail = await api.getTrial(summary.id);
    editor = new TrialEditor(detail);
    transform = fitTransform(detail, canvas.width, canvas.height);
    renderQueue();
    renderToggles();
    setStatus(
      `${detail.id}: ${detail.fixations.length} fixations, ` +
        `${detail.line_count} lines, disagreement ${detail.trial_disagreement.toFixed(3)}`,
    );
    redraw();
  } catch (err) {
    setStatus(err instanceof ApiError ? err.message : String(err), true);
  }
}

canvas.addEventListener("click", (ev) => {
  if (!editor || !transform) return;
  const rect = canvas.getBoundingClientRect();
  const cx = ((ev.clientX - rect.left) * canvas.width) / rect.width;
  const cy = ((ev.clientY - rect.top) * canvas.height) / rect.height;
  editor.selectedFixation = hitTestFixation(editor.detail, transform, cx, cy);
  redraw();
});

document.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement) return;
  if (!editor) return;
  if (ev.key >= "0" && ev.key <= "9" && editor.selectedFixation !== null) {
    const line = Number(ev.key);
    if (!editor.assign(editor.selectedFixation, line)) {
      setStatus(editor.lastError ?? "rejected", true);
    } else {
      setStatus(`staged fixation ${editor.selectedFixation} -> line ${line}`);
    }
    redraw();
  } else if ((ev.key === "d" || ev.key === "D") && editor.selectedFixation !== null) {
    editor.assign(editor.selectedFixation, "DISCARD");
    setStatus(`staged fixation ${editor.selectedFixation} -> DISCARD`);
    redraw();
  } else if (ev.key === "u" || ev.key === "U") {
    editor.undo();
    setStatus("undid last pending edit");
    redraw();
  } else if (ev.key === "]") {
    void stepQueue(1);
  } else if (ev.key === "[") {
    void stepQueue(-1);
  } else if (ev.key === "s" && (ev.ctrlKey || ev.metaKey)) {
    ev.preventDefault();
    void save();
  }
});

async function stepQueue(delta: number): Promise<void> {
  const target = queue.index + delta;
  if (target >= 0 && target < queue.items.length) await openIndex(target);
}

async function save(): Promise<void> {
  if (!editor) return;
  const author = authorInput.value.trim() || "reviewer";
  const ok = await editor.save(api, author);
  if (ok) {
    setStatus("saved; server state reloaded");
    await queue.load(api);
    renderQueue();
  } else {
    setStatus(editor.lastError ?? "save failed", true);
  }
  redraw();
}

saveButton.addEventListener("click", () => void save());
undoButton.addEventListener("click", () => {
  editor?.undo();
  redraw();
});

window.addEventListener("beforeunload", (ev) => {
  if (editor?.hasPending) ev.preventDefault();
});

async function boot(): Promise<void> {
  try {
    await queue.load(api, "disagreement");
    renderQueue();
    if (queue.items.length === 0) {
      setStatus("no trials loaded on the service", true);
      return;
    }
    await openIndex(0);
  } catch (err) {
    setStatus(
      `cannot reach the review service (${err instanceof Error ? err.message : err}); retrying in 3s`,
      true,
    );
    setTimeout(() => void boot(), 3000);
  }
}

void boot();
