/**
 * Client-side state: the review queue and the per-trial editor.
 *
 * The editor layers pending (unsaved) line assignments over the server
 * payload. Saving posts each pending override and reloads server truth, so
 * a refresh always reproduces the server state plus zero pending edits.
 * Nothing here touches the server except through the injected ReviewApi.
 */

import { ApiError, type ReviewApiLike } from "./api";
import type { LineChoice, TrialDetail, TrialSummary } from "./types";

/** Ordered review queue; preserves exactly the order the service returns. */
export class ReviewQueue {
  items: TrialSummary[] = [];
  index = -1;

  async load(api: ReviewApiLike, sort: "id" | "disagreement" = "disagreement"): Promise<void> {
    const all: TrialSummary[] = [];
    let page = 1;
    for (;;) {
      const body = await api.listTrials(sort, page);
      all.push(...body.trials);
      if (page >= body.total_pages || body.trials.length === 0) break;
      page += 1;
    }
    this.items = all;
    this.index = all.length ? 0 : -1;
  }

  get current(): TrialSummary | null {
    return this.index >= 0 ? (this.items[this.index] ?? null) : null;
  }

  next(): TrialSummary | null {
    if (this.index + 1 < this.items.length) this.index += 1;
    return this.current;
  }

  prev(): TrialSummary | null {
    if (this.index > 0) this.index -= 1;
    return this.current;
  }
}

export interface PendingEdit {
  fixationIndex: number;
  line: LineChoice;
}

/** Per-trial editing session with optimistic local assignment. */
export class TrialEditor {
  /** Pending edits in application order; later edits shadow earlier ones. */
  private edits: PendingEdit[] = [];
  selectedFixation: number | null = null;
  lastError: string | null = null;

  constructor(public detail: TrialDetail) {}

  /** Validate and stage one assignment; rejects out-of-range lines locally. */
  assign(fixationIndex: number, line: LineChoice): boolean {
    this.lastError = null;
    if (fixationIndex < 0 || fixationIndex >= this.detail.fixations.length) {
      this.lastError = `fixation ${fixationIndex} out of range`;
      return false;
    }
    if (line !== "DISCARD" && (line < 0 || line >= this.detail.line_count)) {
      this.lastError = `line ${line} outside 0..${this.detail.line_count - 1}`;
      return false;
    }
    this.edits.push({ fixationIndex, line });
    return true;
  }

  /** Revert the most recent pending edit. */
  undo(): void {
    this.edits.pop();
  }

  /** Drop every pending edit. */
  undoAll(): void {
    this.edits = [];
  }

  get pending(): PendingEdit[] {
    return [...this.edits];
  }

  get hasPending(): boolean {
    return this.edits.length > 0;
  }

  /** Latest pending line per fixation (later edits win). */
  pendingByFixation(): Map<number, LineChoice> {
    const map = new Map<number, LineChoice>();
    for (const e of this.edits) map.set(e.fixationIndex, e.line);
    return map;
  }

  /** Effective line for rendering: pending edit, else server effective. */
  effectiveLine(fixationIndex: number): number | null {
    const pending = this.pendingByFixation().get(fixationIndex);
    if (pending !== undefined) return pending === "DISCARD" ? null : pending;
    return this.detail.effective_lines[fixationIndex] ?? null;
  }

  effectiveDiscarded(fixationIndex: number): boolean {
    const pending = this.pendingByFixation().get(fixationIndex);
    if (pending !== undefined) return pending === "DISCARD";
    return this.detail.effective_discarded[fixationIndex] ?? false;
  }

  /**
   * Post every pending override, then reload server truth. A 422 keeps the
   * failing edit staged and surfaces the error; earlier edits stay saved.
   */
  async save(api: ReviewApiLike, author: string): Promise<boolean> {
    this.lastError = null;
    const toSave = this.pendingByFixation();
    for (const [fixationIndex, line] of toSave) {
      try {
        await api.postOverride(this.detail.id, fixationIndex, line, author);
        this.edits = this.edits.filter((e) => e.fixationIndex !== fixationIndex);
      } catch (err) {
        this.lastError = err instanceof ApiError ? err.detail : String(err);
        this.detail = await api.getTrial(this.detail.id);
        return false;
      }
    }
    this.detail = await api.getTrial(this.detail.id);
    return true;
  }
}

/**
 * Per-fixation disagreement among the toggled sources.
 *
 * Source names resolve against the payload: algorithm names, "woc", and
 * "effective" (the override-shadowed assignment). A fixation is highlighted
 * when the selected sources do not all agree on its line.
 */
export function compareSources(
  editor: TrialEditor,
  enabled: string[],
): boolean[] {
  const n = editor.detail.fixations.length;
  const columns: (number | null)[][] = enabled.map((name) => {
    if (name === "woc") return editor.detail.woc;
    if (name === "effective") {
      return editor.detail.fixations.map((_, i) => editor.effectiveLine(i));
    }
    return editor.detail.sources[name] ?? [];
  });
  const mask: boolean[] = [];
  for (let i = 0; i < n; i++) {
    const values = columns.filter((c) => c.length === n).map((c) => c[i]);
    mask.push(values.length > 1 && new Set(values).size > 1);
  }
  return mask;
}
