/** Typed client for the review service HTTP API. */

import type { LineChoice, OverrideRecord, TrialDetail, TrialListPage } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail);
}

/** Surface the stores depend on; lets tests substitute fakes. */
export interface ReviewApiLike {
  listTrials(sort?: "id" | "disagreement", page?: number, pageSize?: number): Promise<TrialListPage>;
  getTrial(id: string): Promise<TrialDetail>;
  postOverride(
    trialId: string,
    fixationIndex: number,
    line: LineChoice,
    author: string,
  ): Promise<OverrideRecord>;
  fetchExport(): Promise<ArrayBuffer>;
}

export class ReviewApi implements ReviewApiLike {
  constructor(private readonly base: string = "") {}

  async listTrials(sort: "id" | "disagreement" = "disagreement", page = 1, pageSize = 100): Promise<TrialListPage> {
    const params = new URLSearchParams({
      sort,
      page: String(page),
      page_size: String(pageSize),
    });
    const res = await fetch(`${this.base}/trials?${params}`);
    if (!res.ok) await parseError(res);
    return (await res.json()) as TrialListPage;
  }

  async getTrial(id: string): Promise<TrialDetail> {
    const res = await fetch(`${this.base}/trials/${encodeURIComponent(id)}`);
    if (!res.ok) await parseError(res);
    return (await res.json()) as TrialDetail;
  }

  async postOverride(
    trialId: string,
    fixationIndex: number,
    line: LineChoice,
    author: string,
  ): Promise<OverrideRecord> {
    const res = await fetch(`${this.base}/trials/${encodeURIComponent(trialId)}/overrides`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ fixation_index: fixationIndex, line, author }),
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as OverrideRecord;
  }

  async fetchExport(): Promise<ArrayBuffer> {
    const res = await fetch(`${this.base}/export`);
    if (!res.ok) await parseError(res);
    return res.arrayBuffer();
  }
}
