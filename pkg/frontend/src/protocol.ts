/**
 * Wire protocol for the /session WebSocket.
 *
 * Everything the client sends is built by the frame helpers below and
 * everything it receives goes through parseServerMessage, so malformed
 * traffic is caught at the boundary instead of deep inside the UI.
 */

export const PROTOCOL_VERSION = 1;

export const ACTION_NAMES = [
  "Up",
  "Down",
  "Left",
  "Right",
  "R",
  "L",
  "Stay",
] as const;

export type ActionName = (typeof ACTION_NAMES)[number];

export type Cell = [number, number];

export interface PoseMsg {
  x: number;
  y: number;
  heading: number;
}

export interface GoalSpec {
  label: number;
  x: number;
  y: number;
}

export interface MapSpec {
  width: number;
  height: number;
  rows: string[];
  goals: GoalSpec[];
}

export interface HelloMsg {
  kind: "hello";
  protocol: number;
  version: string;
}

export interface InitMsg {
  kind: "init";
  protocol: number;
  map: MapSpec;
  map_hash: string;
  start: PoseMsg;
  pose: PoseMsg;
  states: string[];
  actions: string[];
  params: Record<string, unknown>;
  step: number;
  estimate: number[];
  visible: Cell[];
  paths: Record<string, Cell[]>;
}

export interface StateMsg {
  kind: "state";
  step: number;
  pose: PoseMsg;
  intended: string;
  realized: string;
  visible: Cell[];
  paths: Record<string, Cell[]>;
}

export interface EstimateMsg {
  kind: "estimate";
  step: number;
  probs: number[];
  phi: number;
  observation: number[];
  consistent: boolean[];
}

export interface ErrorMsg {
  kind: "error";
  message: string;
}

export type ServerMessage = HelloMsg | InitMsg | StateMsg | EstimateMsg | ErrorMsg;

export class ProtocolError extends Error {}

// ---------- validation helpers ----------

function fail(path: string, want: string): never {
  throw new ProtocolError(`bad server message: ${path} is not ${want}`);
}

function asObject(value: unknown, path: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    fail(path, "an object");
  }
  return value as Record<string, unknown>;
}

function asNumber(value: unknown, path: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) fail(path, "a finite number");
  return value;
}

function asInt(value: unknown, path: string): number {
  const n = asNumber(value, path);
  if (!Number.isInteger(n)) fail(path, "an integer");
  return n;
}

function asString(value: unknown, path: string): string {
  if (typeof value !== "string") fail(path, "a string");
  return value;
}

function asStringArray(value: unknown, path: string): string[] {
  if (!Array.isArray(value)) fail(path, "an array");
  return value.map((v, i) => asString(v, `${path}[${i}]`));
}

function asNumberArray(value: unknown, path: string): number[] {
  if (!Array.isArray(value)) fail(path, "an array");
  return value.map((v, i) => asNumber(v, `${path}[${i}]`));
}

function asBoolArray(value: unknown, path: string): boolean[] {
  if (!Array.isArray(value)) fail(path, "an array");
  return value.map((v, i) => {
    if (typeof v !== "boolean") fail(`${path}[${i}]`, "a boolean");
    return v;
  });
}

function asPose(value: unknown, path: string): PoseMsg {
  const obj = asObject(value, path);
  return {
    x: asInt(obj.x, `${path}.x`),
    y: asInt(obj.y, `${path}.y`),
    heading: asInt(obj.heading, `${path}.heading`),
  };
}

function asCellList(value: unknown, path: string): Cell[] {
  if (!Array.isArray(value)) fail(path, "an array");
  return value.map((v, i) => {
    if (!Array.isArray(v) || v.length !== 2) fail(`${path}[${i}]`, "an [x, y] pair");
    return [asInt(v[0], `${path}[${i}][0]`), asInt(v[1], `${path}[${i}][1]`)];
  });
}

function asPaths(value: unknown, path: string): Record<string, Cell[]> {
  const obj = asObject(value, path);
  const out: Record<string, Cell[]> = {};
  for (const [label, cells] of Object.entries(obj)) {
    out[label] = asCellList(cells, `${path}.${label}`);
  }
  return out;
}

function asMapSpec(value: unknown, path: string): MapSpec {
  const obj = asObject(value, path);
  const rows = asStringArray(obj.rows, `${path}.rows`);
  if (!Array.isArray(obj.goals)) fail(`${path}.goals`, "an array");
  const goals = (obj.goals as unknown[]).map((g, i) => {
    const goal = asObject(g, `${path}.goals[${i}]`);
    return {
      label: asInt(goal.label, `${path}.goals[${i}].label`),
      x: asInt(goal.x, `${path}.goals[${i}].x`),
      y: asInt(goal.y, `${path}.goals[${i}].y`),
    };
  });
  return {
    width: asInt(obj.width, `${path}.width`),
    height: asInt(obj.height, `${path}.height`),
    rows,
    goals,
  };
}

// ---------- inbound ----------

export function parseServerMessage(raw: string): ServerMessage {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch (exc) {
    throw new ProtocolError(`bad server message: not JSON (${exc})`);
  }
  const obj = asObject(value, "message");
  const kind = asString(obj.kind, "kind");
  switch (kind) {
    case "hello":
      return {
        kind,
        protocol: asInt(obj.protocol, "protocol"),
        version: asString(obj.version, "version"),
      };
    case "init":
      return {
        kind,
        protocol: asInt(obj.protocol, "protocol"),
        map: asMapSpec(obj.map, "map"),
        map_hash: asString(obj.map_hash, "map_hash"),
        start: asPose(obj.start, "start"),
        pose: asPose(obj.pose, "pose"),
        states: asStringArray(obj.states, "states"),
        actions: asStringArray(obj.actions, "actions"),
        params: asObject(obj.params, "params"),
        step: asInt(obj.step, "step"),
        estimate: asNumberArray(obj.estimate, "estimate"),
        visible: asCellList(obj.visible, "visible"),
        paths: asPaths(obj.paths, "paths"),
      };
    case "state":
      return {
        kind,
        step: asInt(obj.step, "step"),
        pose: asPose(obj.pose, "pose"),
        intended: asString(obj.intended, "intended"),
        realized: asString(obj.realized, "realized"),
        visible: asCellList(obj.visible, "visible"),
        paths: asPaths(obj.paths, "paths"),
      };
    case "estimate":
      return {
        kind,
        step: asInt(obj.step, "step"),
        probs: asNumberArray(obj.probs, "probs"),
        phi: asNumber(obj.phi, "phi"),
        observation: asNumberArray(obj.observation, "observation"),
        consistent: asBoolArray(obj.consistent, "consistent"),
      };
    case "error":
      return { kind, message: asString(obj.message, "message") };
    default:
      throw new ProtocolError(`bad server message: unknown kind ${JSON.stringify(kind)}`);
  }
}

// ---------- outbound ----------

export function helloFrame(): string {
  return JSON.stringify({ kind: "hello", protocol: PROTOCOL_VERSION });
}

export function actionFrame(name: ActionName): string {
  if (!ACTION_NAMES.includes(name)) {
    throw new ProtocolError(`not an action name: ${JSON.stringify(name)}`);
  }
  return JSON.stringify({ kind: "action", name });
}

export function resetFrame(): string {
  return JSON.stringify({ kind: "reset" });
}
