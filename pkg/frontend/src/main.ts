/**
 * Entry point: wires the WebSocket session to the viewmodel, the keyboard
 * to outbound actions, and the viewmodel to the canvas renderers.
 */

import { drawChart, formatProb, hoverStep, layoutFor } from "./chart.js";
import { stateColor } from "./colors.js";
import { KEY_HELP, keyToAction } from "./keyboard.js";
import { parseServerMessage, ProtocolError } from "./protocol.js";
import { drawWorld } from "./render.js";
import { SessionViewModel } from "./viewmodel.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const worldCanvas = byId<HTMLCanvasElement>("world");
const chartCanvas = byId<HTMLCanvasElement>("chart");
const statusEl = byId<HTMLSpanElement>("status");
const bannerEl = byId<HTMLDivElement>("banner");
const barsEl = byId<HTMLDivElement>("bars");
const phiEl = byId<HTMLSpanElement>("phi");
const stepEl = byId<HTMLSpanElement>("step");
const flagsEl = byId<HTMLDivElement>("flags");
const lastActionEl = byId<HTMLSpanElement>("last-action");
const errorEl = byId<HTMLDivElement>("error");
const configEl = byId<HTMLDListElement>("config");
const resetBtn = byId<HTMLButtonElement>("reset-btn");
byId<HTMLParagraphElement>("help").textContent = KEY_HELP;

const vm = new SessionViewModel();
let hover: number | null = null;

// ---------- rendering ----------

function renderStatus(): void {
  statusEl.textContent = vm.phase;
  statusEl.className = `pill ${vm.phase}`;
  bannerEl.hidden = vm.phase !== "closed";
  resetBtn.disabled = !vm.ready;
}

function renderBars(): void {
  const probs = vm.latestEstimate;
  barsEl.replaceChildren();
  if (!probs) return;
  vm.states.forEach((name, i) => {
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent = name;
    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${(probs[i] ?? 0) * 100}%`;
    fill.style.background = stateColor(i, vm.states.length);
    track.append(fill);
    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = formatProb(probs[i] ?? 0);
    row.append(label, track, value);
    barsEl.append(row);
  });
}

function renderDetails(): void {
  stepEl.textContent = String(vm.step);
  phiEl.textContent = vm.phi === null ? "–" : vm.phi.toFixed(3);
  lastActionEl.textContent =
    vm.lastIntended === null
      ? "–"
      : vm.lastIntended === vm.lastRealized
        ? vm.lastIntended
        : `${vm.lastIntended} → ${vm.lastRealized}`;
  flagsEl.replaceChildren();
  if (vm.consistent) {
    vm.consistent.forEach((ok, i) => {
      const chip = document.createElement("span");
      chip.className = `flag ${ok ? "ok" : "bad"}`;
      chip.textContent = `${vm.states[i] ?? `G${i + 1}`} ${ok ? "✓" : "✗"}`;
      flagsEl.append(chip);
    });
  }
  errorEl.textContent = vm.lastError ?? "";
  errorEl.hidden = vm.lastError === null;
}

function renderConfig(): void {
  configEl.replaceChildren();
  const entries: Array<[string, string]> = [
    ["server", vm.serverVersion ?? "?"],
    ["map hash", vm.mapHash.slice(0, 12)],
    ["states", vm.states.join(" ")],
  ];
  for (const [key, value] of Object.entries(vm.params)) {
    entries.push([key, String(value)]);
  }
  for (const [key, value] of entries) {
    const dt = document.createElement("dt");
    dt.textContent = key;
    const dd = document.createElement("dd");
    dd.textContent = value;
    configEl.append(dt, dd);
  }
}

function redraw(): void {
  renderStatus();
  renderBars();
  renderDetails();
  drawWorld(worldCanvas, vm);
  drawChart(chartCanvas, vm.series, vm.states, hover);
}

// ---------- socket ----------

const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/session`;
const socket = new WebSocket(url);

socket.onopen = () => {
  socket.send(vm.greeting());
};

socket.onmessage = (event) => {
  try {
    const msg = parseServerMessage(String(event.data));
    vm.handle(msg);
    if (msg.kind === "init") renderConfig();
    if (msg.kind === "estimate" || msg.kind === "init") hover = null;
  } catch (exc) {
    if (!(exc instanceof ProtocolError)) throw exc;
    console.error(exc.message);
  }
  redraw();
};

socket.onclose = () => {
  vm.socketClosed();
  redraw();
};

// ---------- input ----------

window.addEventListener("keydown", (event) => {
  if (event.repeat || event.altKey || event.ctrlKey || event.metaKey) return;
  const action = keyToAction(event.key);
  if (action === null) return;
  event.preventDefault();
  const frame = vm.requestAction(action);
  if (frame !== null) {
    socket.send(frame);
    redraw();
  }
});

resetBtn.addEventListener("click", () => {
  const frame = vm.requestReset();
  if (frame !== null) {
    socket.send(frame);
    redraw();
  }
});

chartCanvas.addEventListener("mousemove", (event) => {
  const rect = chartCanvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * chartCanvas.width;
  const next = hoverStep(layoutFor(chartCanvas.width, chartCanvas.height), vm.series.length, x);
  if (next !== hover) {
    hover = next;
    drawChart(chartCanvas, vm.series, vm.states, hover);
  }
});

chartCanvas.addEventListener("mouseleave", () => {
  if (hover !== null) {
    hover = null;
    drawChart(chartCanvas, vm.series, vm.states, hover);
  }
});

redraw();
