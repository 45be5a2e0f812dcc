/** Wire-shaped sample messages for exercising the client without a server. */

export function initPayload(): Record<string, unknown> {
  return {
    kind: "init",
    protocol: 1,
    map: {
      width: 4,
      height: 3,
      rows: ["....", ".1.2", "...."],
      goals: [
        { label: 1, x: 1, y: 1 },
        { label: 2, x: 3, y: 1 },
      ],
    },
    map_hash: "a".repeat(64),
    start: { x: 0, y: 0, heading: 0 },
    pose: { x: 0, y: 0, heading: 0 },
    states: ["G1", "G2", "G?", "Gx"],
    actions: ["Up", "Down", "Left", "Right", "R", "L", "Stay"],
    params: { gamma: 0.95, mode: "deterministic", seed: 0 },
    step: 0,
    estimate: [0, 0, 1, 0],
    visible: [
      [0, 0],
      [1, 0],
      [2, 0],
    ],
    paths: {
      "1": [
        [0, 0],
        [1, 1],
      ],
      "2": [
        [0, 0],
        [1, 0],
        [2, 0],
        [3, 1],
      ],
    },
  };
}

export function statePayload(step: number): Record<string, unknown> {
  return {
    kind: "state",
    step,
    pose: { x: 1, y: 0, heading: 0 },
    intended: "Right",
    realized: "Right",
    visible: [
      [1, 0],
      [2, 0],
    ],
    paths: { "1": [[1, 1]], "2": [[3, 1]] },
  };
}

export function estimatePayload(step: number, probs?: number[]): Record<string, unknown> {
  return {
    kind: "estimate",
    step,
    probs: probs ?? [0.25, 0.25, 0.4, 0.1],
    phi: 0.9,
    observation: [0.8, 0.7, 0.1],
    consistent: [true, true, false],
  };
}

export function raw(payload: Record<string, unknown>): string {
  return JSON.stringify(payload);
}

/** Tiny deterministic generator so fuzz failures replay exactly. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
