/**
 * World canvas: occupancy tiles, vision overlay, per-goal path polylines
 * and the agent marker with its heading arrow.
 *
 * The grid uses x growing east and y growing south (row 0 on top), while
 * heading angles grow counterclockwise with 0 pointing east — hence the
 * negated sine when projecting headings onto the canvas.
 */

import {
  AGENT_COLOR,
  FREE_COLOR,
  GRID_LINE_COLOR,
  VISIBLE_COLOR,
  WALL_COLOR,
  goalColor,
} from "./colors.js";
import type { SessionViewModel } from "./viewmodel.js";

// ---------- geometry ----------

/** Side of one square cell so the whole map fits the canvas. */
export function cellSize(
  canvasWidth: number,
  canvasHeight: number,
  gridWidth: number,
  gridHeight: number,
): number {
  return Math.max(1, Math.floor(Math.min(canvasWidth / gridWidth, canvasHeight / gridHeight)));
}

/** Unit vector of a heading index in canvas coordinates (y grows down). */
export function headingVector(heading: number): [number, number] {
  const angle = (heading * Math.PI) / 4;
  return [Math.cos(angle), -Math.sin(angle)];
}

// ---------- drawing ----------

export function drawWorld(canvas: HTMLCanvasElement, vm: SessionViewModel): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const map = vm.map;
  if (!map) return;

  const size = cellSize(canvas.width, canvas.height, map.width, map.height);
  const center = (cx: number, cy: number): [number, number] => [
    (cx + 0.5) * size,
    (cy + 0.5) * size,
  ];

  // Tiles: walls, free space, then the vision overlay on top of free cells.
  for (let y = 0; y < map.height; y++) {
    for (let x = 0; x < map.width; x++) {
      ctx.fillStyle = map.rows[y][x] === "#" ? WALL_COLOR : FREE_COLOR;
      ctx.fillRect(x * size, y * size, size, size);
    }
  }
  ctx.fillStyle = VISIBLE_COLOR;
  for (const [x, y] of vm.visible) {
    ctx.fillRect(x * size, y * size, size, size);
  }

  // Goal tiles, colored like their chart lines and tagged with the label.
  map.goals.forEach((goal, index) => {
    ctx.fillStyle = goalColor(index);
    ctx.fillRect(goal.x * size, goal.y * size, size, size);
    ctx.fillStyle = "#ffffff";
    ctx.font = `${Math.max(10, size * 0.6)}px system-ui, sans-serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    const [cx, cy] = center(goal.x, goal.y);
    ctx.fillText(String(goal.label), cx, cy);
  });

  // Cell borders.
  ctx.strokeStyle = GRID_LINE_COLOR;
  ctx.lineWidth = 1;
  for (let x = 0; x <= map.width; x++) {
    ctx.beginPath();
    ctx.moveTo(x * size, 0);
    ctx.lineTo(x * size, map.height * size);
    ctx.stroke();
  }
  for (let y = 0; y <= map.height; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * size);
    ctx.lineTo(map.width * size, y * size);
    ctx.stroke();
  }

  // Hypothesized paths, one polyline per goal through cell centers.
  map.goals.forEach((goal, index) => {
    const cells = vm.paths[String(goal.label)] ?? [];
    if (cells.length < 2) return;
    ctx.strokeStyle = goalColor(index);
    ctx.globalAlpha = 0.55;
    ctx.lineWidth = Math.max(2, size * 0.18);
    ctx.lineJoin = "round";
    ctx.beginPath();
    for (const [x, y] of cells) {
      const [cx, cy] = center(x, y);
      ctx.lineTo(cx, cy);
    }
    ctx.stroke();
    ctx.globalAlpha = 1;
  });

  // Agent marker: disc plus heading arrow.
  if (vm.pose) {
    const [cx, cy] = center(vm.pose.x, vm.pose.y);
    const radius = size * 0.32;
    ctx.fillStyle = AGENT_COLOR;
    ctx.beginPath();
    ctx.arc(cx, cy, radius, 0, 2 * Math.PI);
    ctx.fill();
    const [dx, dy] = headingVector(vm.pose.heading);
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = Math.max(2, size * 0.1);
    ctx.lineCap = "round";
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + dx * radius * 0.9, cy + dy * radius * 0.9);
    ctx.stroke();
    // Arrow tip outside the disc so the heading reads at small cell sizes.
    ctx.strokeStyle = AGENT_COLOR;
    ctx.beginPath();
    ctx.moveTo(cx + dx * radius, cy + dy * radius);
    ctx.lineTo(cx + dx * size * 0.48, cy + dy * size * 0.48);
    ctx.stroke();
  }
}
