/**
 * Canvas rendering of one trial: character boxes with a text layer,
 * fixation markers colored by effective line, the saccade polyline in time
 * order, disagreement heat, and diff highlights from source comparison.
 *
 * Stimulus coordinates are screen pixels (y grows downward); the canvas
 * shares that orientation, so the view transform is scale-and-translate
 * with no axis flip needed.
 */

import { compareSources, TrialEditor } from "./state";
import type { CharBoxPayload, TrialDetail } from "./types";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

const LINE_COLORS = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#76b7b2",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
];

export function lineColor(line: number | null): string {
  if (line === null || line < 0) return "#666666";
  return LINE_COLORS[line % LINE_COLORS.length] ?? "#666666";
}

export function stimulusExtent(chars: CharBoxPayload[]): [number, number, number, number] {
  let x0 = Infinity,
    y0 = Infinity,
    x1 = -Infinity,
    y1 = -Infinity;
  for (const b of chars) {
    x0 = Math.min(x0, b.x0);
    y0 = Math.min(y0, b.y0);
    x1 = Math.max(x1, b.x1);
    y1 = Math.max(y1, b.y1);
  }
  return [x0, y0, x1, y1];
}

/** Fit the stimulus extent (plus fixation spill) into a canvas, centered. */
export function fitTransform(
  detail: TrialDetail,
  canvasWidth: number,
  canvasHeight: number,
  margin = 20,
): ViewTransform {
  const [bx0, by0, bx1, by1] = stimulusExtent(detail.chars);
  let x0 = bx0,
    y0 = by0,
    x1 = bx1,
    y1 = by1;
  for (const f of detail.fixations) {
    x0 = Math.min(x0, f.x);
    y0 = Math.min(y0, f.y);
    x1 = Math.max(x1, f.x);
    y1 = Math.max(y1, f.y);
  }
  const width = Math.max(x1 - x0, 1);
  const height = Math.max(y1 - y0, 1);
  const scale = Math.min(
    (canvasWidth - 2 * margin) / width,
    (canvasHeight - 2 * margin) / height,
  );
  return {
    scale,
    offsetX: margin + (canvasWidth - 2 * margin - scale * width) / 2 - scale * x0,
    offsetY: margin + (canvasHeight - 2 * margin - scale * height) / 2 - scale * y0,
  };
}

export function toCanvas(tf: ViewTransform, x: number, y: number): [number, number] {
  return [tf.offsetX + tf.scale * x, tf.offsetY + tf.scale * y];
}

export function fromCanvas(tf: ViewTransform, cx: number, cy: number): [number, number] {
  return [(cx - tf.offsetX) / tf.scale, (cy - tf.offsetY) / tf.scale];
}

/** Index of the fixation nearest a canvas point, or null beyond maxDist px. */
export function hitTestFixation(
  detail: TrialDetail,
  tf: ViewTransform,
  cx: number,
  cy: number,
  maxDist = 12,
): number | null {
  let best: number | null = null;
  let bestDist = maxDist;
  detail.fixations.forEach((f, i) => {
    const [px, py] = toCanvas(tf, f.x, f.y);
    const d = Math.hypot(px - cx, py - cy);
    if (d < bestDist) {
      bestDist = d;
      best = i;
    }
  });
  return best;
}

export interface RenderOptions {
  enabledSources: string[];
  showSaccades: boolean;
  showDisagreement: boolean;
}

export function renderTrial(
  ctx: CanvasRenderingContext2D,
  editor: TrialEditor,
  tf: ViewTransform,
  opts: RenderOptions,
): void {
  const detail = editor.detail;
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  // character boxes and text layer
  for (const b of detail.chars) {
    const [x0, y0] = toCanvas(tf, b.x0, b.y0);
    const w = tf.scale * (b.x1 - b.x0);
    const h = tf.scale * (b.y1 - b.y0);
    ctx.fillStyle = "#f2f2f2";
    ctx.fillRect(x0, y0, w, h);
    if (b.ch.trim() && h > 6) {
      ctx.fillStyle = "#999999";
      ctx.font = `${Math.max(6, h * 0.6)}px monospace`;
      ctx.textBaseline = "middle";
      ctx.fillText(b.ch, x0 + w * 0.15, y0 + h / 2);
    }
  }

  // saccade polyline in time order
  if (opts.showSaccades && detail.fixations.length > 1) {
    ctx.strokeStyle = "rgba(80, 80, 80, 0.35)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    detail.fixations.forEach((f, i) => {
      const [px, py] = toCanvas(tf, f.x, f.y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  const diffMask = compareSources(editor, opts.enabledSources);

  detail.fixations.forEach((f, i) => {
    const [px, py] = toCanvas(tf, f.x, f.y);
    const line = editor.effectiveLine(i);
    const discarded = editor.effectiveDiscarded(i);
    const radius = 5;

    // disagreement heat ring
    if (opts.showDisagreement) {
      const heat = detail.disagreement[i] ?? 0;
      if (heat > 0) {
        ctx.beginPath();
        ctx.fillStyle = `rgba(220, 60, 40, ${Math.min(0.85, heat)})`;
        ctx.arc(px, py, radius + 5, 0, 2 * Math.PI);
        ctx.fill();
      }
    }

    // source-comparison highlight
    if (diffMask[i]) {
      ctx.beginPath();
      ctx.strokeStyle = "#d62728";
      ctx.lineWidth = 2.5;
      ctx.arc(px, py, radius + 8, 0, 2 * Math.PI);
      ctx.stroke();
    }

    ctx.beginPath();
    ctx.fillStyle = discarded ? "#cccccc" : lineColor(line);
    ctx.arc(px, py, radius, 0, 2 * Math.PI);
    ctx.fill();
    if (editor.selectedFixation === i) {
      ctx.beginPath();
      ctx.strokeStyle = "#000000";
      ctx.lineWidth = 2;
      ctx.arc(px, py, radius + 2.5, 0, 2 * Math.PI);
      ctx.stroke();
    }
    if (editor.pendingByFixation().has(i)) {
      ctx.beginPath();
      ctx.strokeStyle = "#ff9900";
      ctx.lineWidth = 2;
      ctx.setLineDash([3, 2]);
      ctx.arc(px, py, radius + 4.5, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  });
}
