/** Payload shapes served by the review service. */

export interface TrialSummary {
  id: string;
  fixation_count: number;
  disagreement: number;
  overridden_count: number;
}

export interface TrialListPage {
  trials: TrialSummary[];
  page: number;
  page_size: number;
  total_trials: number;
  total_pages: number;
}

export interface FixationPayload {
  x: number;
  y: number;
  start: number;
  duration: number;
  gold_line: number | null;
  discarded: boolean;
}

export interface CharBoxPayload {
  ch: string;
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  line: number;
}

export interface OverrideRecord {
  trial_id: string;
  fixation_index: number;
  line: number | "DISCARD";
  author: string;
  timestamp: string;
}

export interface TrialDetail {
  id: string;
  dataset: string;
  line_count: number;
  fixations: FixationPayload[];
  chars: CharBoxPayload[];
  sources: Record<string, number[]>;
  woc: number[];
  disagreement: number[];
  trial_disagreement: number;
  overrides: OverrideRecord[];
  effective_lines: (number | null)[];
  effective_discarded: boolean[];
}

export type LineChoice = number | "DISCARD";
