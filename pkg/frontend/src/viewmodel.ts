/**
 * Client-side session state.
 *
 * The server owns the world; this class only mirrors what it was told and
 * enforces the one UI-side rule that matters: at most one action is in
 * flight, and input stays ignored until the matching estimate (or the init
 * reply to a reset) lands.  All rendered probabilities come from the last
 * estimate received; the per-step series is append-only within a session.
 */

import {
  actionFrame,
  helloFrame,
  resetFrame,
  type ActionName,
  type Cell,
  type InitMsg,
  type MapSpec,
  type PoseMsg,
  type ServerMessage,
} from "./protocol.js";

export type Phase = "connecting" | "live" | "closed";

export class SessionViewModel {
  phase: Phase = "connecting";
  serverVersion: string | null = null;

  map: MapSpec | null = null;
  mapHash = "";
  states: string[] = [];
  actions: string[] = [];
  params: Record<string, unknown> = {};

  start: PoseMsg | null = null;
  pose: PoseMsg | null = null;
  visible: Cell[] = [];
  paths: Record<string, Cell[]> = {};

  /** series[i] = desire estimate after step i; row 0 is the prior. */
  series: number[][] = [];
  step = 0;
  phi: number | null = null;
  observation: number[] | null = null;
  consistent: boolean[] | null = null;
  lastIntended: string | null = null;
  lastRealized: string | null = null;
  lastError: string | null = null;

  private inFlight = false;

  // ---------- derived ----------

  /** True while a request is awaiting its reply; input must be ignored. */
  get busy(): boolean {
    return this.inFlight;
  }

  get ready(): boolean {
    return this.phase === "live" && !this.inFlight;
  }

  /** The probabilities the UI should be showing right now. */
  get latestEstimate(): number[] | null {
    return this.series.length > 0 ? this.series[this.series.length - 1] : null;
  }

  // ---------- outbound ----------

  /** Opening handshake; safe to send any time, the server ignores matches. */
  greeting(): string {
    return helloFrame();
  }

  /**
   * Frame for an intended action, or null when input is currently ignored
   * (not live yet, socket closed, or a step already in flight).
   */
  requestAction(name: ActionName): string | null {
    if (!this.ready) return null;
    this.inFlight = true;
    this.lastError = null;
    return actionFrame(name);
  }

  /** Frame for a session reset; the init reply clears the in-flight latch. */
  requestReset(): string | null {
    if (!this.ready) return null;
    this.inFlight = true;
    this.lastError = null;
    return resetFrame();
  }

  // ---------- inbound ----------

  handle(msg: ServerMessage): void {
    switch (msg.kind) {
      case "hello":
        this.serverVersion = msg.version;
        break;
      case "init":
        this.applyInit(msg);
        break;
      case "state":
        this.pose = msg.pose;
        this.visible = msg.visible;
        this.paths = msg.paths;
        this.step = msg.step;
        this.lastIntended = msg.intended;
        this.lastRealized = msg.realized;
        break;
      case "estimate":
        this.series.push(msg.probs);
        this.phi = msg.phi;
        this.observation = msg.observation;
        this.consistent = msg.consistent;
        this.inFlight = false;
        break;
      case "error":
        // Keep the session usable: report and release the input latch.
        this.lastError = msg.message;
        this.inFlight = false;
        break;
    }
  }

  socketClosed(): void {
    this.phase = "closed";
    this.inFlight = false;
  }

  private applyInit(msg: InitMsg): void {
    this.phase = "live";
    this.map = msg.map;
    this.mapHash = msg.map_hash;
    this.states = msg.states;
    this.actions = msg.actions;
    this.params = msg.params;
    this.start = msg.start;
    this.pose = msg.pose;
    this.visible = msg.visible;
    this.paths = msg.paths;
    this.series = [msg.estimate];
    this.step = msg.step;
    this.phi = null;
    this.observation = null;
    this.consistent = null;
    this.lastIntended = null;
    this.lastRealized = null;
    this.lastError = null;
    this.inFlight = false;
  }
}
