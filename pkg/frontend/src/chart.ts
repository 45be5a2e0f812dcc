/**
 * Desire-probability chart: one line per filter state, all sharing the
 * step axis.  Goal lines reuse their tile colors; the undecided state is
 * black and the irrational state red.  Hovering a step prints its numbers.
 *
 * The series are drawn as separate lines rather than cumulative bands so
 * each state's trajectory (lock-on, collapse after a veer) stays readable;
 * the rows are normalized anyway, so no information is lost.
 */

import { stateColor } from "./colors.js";

export interface ChartLayout {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_LAYOUT: ChartLayout = {
  width: 460,
  height: 240,
  padLeft: 36,
  padRight: 12,
  padTop: 10,
  padBottom: 22,
};

/** Layout for a canvas of the given size (padding from the defaults). */
export function layoutFor(width: number, height: number): ChartLayout {
  return { ...DEFAULT_LAYOUT, width, height };
}

// ---------- geometry ----------

function plotWidth(layout: ChartLayout): number {
  return layout.width - layout.padLeft - layout.padRight;
}

function plotHeight(layout: ChartLayout): number {
  return layout.height - layout.padTop - layout.padBottom;
}

/** Steps shown on the x axis; a lone prior still gets a non-degenerate axis. */
export function axisMaxStep(nRows: number): number {
  return Math.max(nRows - 1, 1);
}

export function xForStep(layout: ChartLayout, step: number, maxStep: number): number {
  return layout.padLeft + (step / maxStep) * plotWidth(layout);
}

export function yForProb(layout: ChartLayout, p: number): number {
  return layout.padTop + (1 - p) * plotHeight(layout);
}

/** Polyline for one state column of the series, in canvas coordinates. */
export function seriesPoints(
  layout: ChartLayout,
  series: number[][],
  stateIndex: number,
): Array<[number, number]> {
  const maxStep = axisMaxStep(series.length);
  return series.map((row, step) => [
    xForStep(layout, step, maxStep),
    yForProb(layout, row[stateIndex] ?? 0),
  ]);
}

/** Step index under the cursor, or null when outside the plot area. */
export function hoverStep(layout: ChartLayout, nRows: number, mouseX: number): number | null {
  if (nRows < 1) return null;
  const maxStep = axisMaxStep(nRows);
  const frac = (mouseX - layout.padLeft) / plotWidth(layout);
  if (frac < -0.02 || frac > 1.02) return null;
  const step = Math.round(frac * maxStep);
  return step >= 0 && step < nRows ? step : null;
}

export function formatProb(p: number): string {
  return p.toFixed(3);
}

// ---------- drawing ----------

export function drawChart(
  canvas: HTMLCanvasElement,
  series: number[][],
  states: string[],
  hover: number | null,
): void {
  const layout = layoutFor(canvas.width, canvas.height);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, layout.width, layout.height);
  ctx.font = "11px system-ui, sans-serif";

  // Frame and probability gridlines.
  ctx.strokeStyle = "#cfd8dc";
  ctx.fillStyle = "#607d8b";
  ctx.lineWidth = 1;
  for (const p of [0, 0.25, 0.5, 0.75, 1]) {
    const y = yForProb(layout, p);
    ctx.beginPath();
    ctx.moveTo(layout.padLeft, y);
    ctx.lineTo(layout.width - layout.padRight, y);
    ctx.stroke();
    ctx.textAlign = "right";
    ctx.textBaseline = "middle";
    ctx.fillText(p.toFixed(2), layout.padLeft - 4, y);
  }

  if (series.length === 0 || states.length === 0) return;
  const maxStep = axisMaxStep(series.length);

  // Step ticks: ends only, to keep the axis quiet.
  ctx.textAlign = "center";
  ctx.textBaseline = "top";
  ctx.fillText("0", xForStep(layout, 0, maxStep), layout.height - layout.padBottom + 4);
  if (series.length > 1) {
    const last = series.length - 1;
    ctx.fillText(String(last), xForStep(layout, last, maxStep), layout.height - layout.padBottom + 4);
  }

  // One line per state, in state order so goal colors match tile labels.
  for (let s = 0; s < states.length; s++) {
    const pts = seriesPoints(layout, series, s);
    ctx.strokeStyle = stateColor(s, states.length);
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    for (const [x, y] of pts) ctx.lineTo(x, y);
    ctx.stroke();
    if (series.length === 1) {
      // A lone prior would be an invisible zero-length path; mark it.
      ctx.fillStyle = stateColor(s, states.length);
      ctx.beginPath();
      ctx.arc(pts[0][0], pts[0][1], 2.5, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  // Hover readout: vertical cursor plus the numeric probabilities.
  if (hover !== null && hover >= 0 && hover < series.length) {
    const x = xForStep(layout, hover, maxStep);
    ctx.strokeStyle = "#90a4ae";
    ctx.lineWidth = 1;
    ctx.setLineDash([3, 3]);
    ctx.beginPath();
    ctx.moveTo(x, layout.padTop);
    ctx.lineTo(x, layout.height - layout.padBottom);
    ctx.stroke();
    ctx.setLineDash([]);

    const lines = [`step ${hover}`].concat(
      states.map((name, s) => `${name} ${formatProb(series[hover][s] ?? 0)}`),
    );
    const boxW = 86;
    const boxH = 14 * lines.length + 8;
    const boxX = x + boxW + 8 > layout.width - layout.padRight ? x - boxW - 8 : x + 8;
    const boxY = layout.padTop + 2;
    ctx.fillStyle = "rgba(255,255,255,0.92)";
    ctx.strokeStyle = "#b0bec5";
    ctx.fillRect(boxX, boxY, boxW, boxH);
    ctx.strokeRect(boxX, boxY, boxW, boxH);
    ctx.textAlign = "left";
    ctx.textBaseline = "top";
    lines.forEach((text, i) => {
      ctx.fillStyle = i === 0 ? "#455a64" : stateColor(i - 1, states.length);
      ctx.fillText(text, boxX + 6, boxY + 4 + 14 * i);
    });
  }
}
