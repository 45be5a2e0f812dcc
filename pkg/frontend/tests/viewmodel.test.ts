import { describe, expect, it } from "vitest";

import { keyToAction } from "../src/keyboard";
import { ACTION_NAMES, parseServerMessage } from "../src/protocol";
import { SessionViewModel } from "../src/viewmodel";
import { estimatePayload, initPayload, lcg, raw, statePayload } from "./helpers";

function live(): SessionViewModel {
  const vm = new SessionViewModel();
  vm.handle(parseServerMessage(raw({ kind: "hello", protocol: 1, version: "0.1.0" })));
  vm.handle(parseServerMessage(raw(initPayload())));
  return vm;
}

/** Assert a frame is one of the three legal client messages, field-exact. */
function checkClientFrame(frame: string): void {
  const msg = JSON.parse(frame) as Record<string, unknown>;
  switch (msg.kind) {
    case "hello":
      expect(msg).toEqual({ kind: "hello", protocol: 1 });
      break;
    case "action":
      expect(Object.keys(msg).sort()).toEqual(["kind", "name"]);
      expect(ACTION_NAMES).toContain(msg.name);
      break;
    case "reset":
      expect(msg).toEqual({ kind: "reset" });
      break;
    default:
      throw new Error(`illegal client frame: ${frame}`);
  }
}

describe("session lifecycle", () => {
  it("ignores input until the init arrives", () => {
    const vm = new SessionViewModel();
    expect(vm.phase).toBe("connecting");
    expect(vm.requestAction("Up")).toBeNull();
    expect(vm.requestReset()).toBeNull();
    checkClientFrame(vm.greeting());
  });

  it("goes live on init with the prior as the only series row", () => {
    const vm = live();
    expect(vm.phase).toBe("live");
    expect(vm.ready).toBe(true);
    expect(vm.series).toEqual([[0, 0, 1, 0]]);
    expect(vm.latestEstimate).toEqual([0, 0, 1, 0]);
    expect(vm.pose).toEqual({ x: 0, y: 0, heading: 0 });
    expect(vm.states).toEqual(["G1", "G2", "G?", "Gx"]);
    expect(vm.serverVersion).toBe("0.1.0");
    expect(vm.paths["2"]).toHaveLength(4);
  });

  it("closes hard: no more frames after socketClosed", () => {
    const vm = live();
    vm.socketClosed();
    expect(vm.phase).toBe("closed");
    expect(vm.requestAction("Stay")).toBeNull();
    expect(vm.requestReset()).toBeNull();
  });
});

describe("one action in flight", () => {
  it("latches on request and releases on the estimate", () => {
    const vm = live();
    const frame = vm.requestAction("Right");
    expect(frame).not.toBeNull();
    checkClientFrame(frame!);
    expect(vm.busy).toBe(true);
    expect(vm.requestAction("Right")).toBeNull();
    expect(vm.requestReset()).toBeNull();

    vm.handle(parseServerMessage(raw(statePayload(1))));
    expect(vm.busy).toBe(true); // state alone is not enough
    expect(vm.pose).toEqual({ x: 1, y: 0, heading: 0 });
    expect(vm.lastIntended).toBe("Right");

    vm.handle(parseServerMessage(raw(estimatePayload(1, [0.3, 0.2, 0.4, 0.1]))));
    expect(vm.busy).toBe(false);
    expect(vm.step).toBe(1);
    expect(vm.latestEstimate).toEqual([0.3, 0.2, 0.4, 0.1]);
    expect(vm.phi).toBeCloseTo(0.9, 12);
    expect(vm.consistent).toEqual([true, true, false]);
    expect(vm.requestAction("Up")).not.toBeNull();
  });

  it("releases the latch on an error so input cannot deadlock", () => {
    const vm = live();
    expect(vm.requestAction("Up")).not.toBeNull();
    vm.handle(parseServerMessage(raw({ kind: "error", message: "unknown action" })));
    expect(vm.busy).toBe(false);
    expect(vm.lastError).toBe("unknown action");
    const retry = vm.requestAction("Down");
    expect(retry).not.toBeNull();
    expect(vm.lastError).toBeNull(); // a fresh request clears the report
  });

  it("reset stays latched until the new init lands", () => {
    const vm = live();
    vm.handle(parseServerMessage(raw(statePayload(1))));
    vm.handle(parseServerMessage(raw(estimatePayload(1))));
    const frame = vm.requestReset();
    expect(frame).not.toBeNull();
    checkClientFrame(frame!);
    expect(vm.requestAction("Up")).toBeNull();

    vm.handle(parseServerMessage(raw(initPayload())));
    expect(vm.busy).toBe(false);
    expect(vm.step).toBe(0);
    expect(vm.series).toEqual([[0, 0, 1, 0]]);
    expect(vm.phi).toBeNull();
    expect(vm.consistent).toBeNull();
    expect(vm.lastIntended).toBeNull();
  });
});

describe("series", () => {
  it("is append-only within a session and earlier rows never change", () => {
    const vm = live();
    const first = vm.series[0];
    const snapshot = [...first];
    for (let step = 1; step <= 5; step++) {
      vm.requestAction("Stay");
      vm.handle(parseServerMessage(raw(statePayload(step))));
      vm.handle(parseServerMessage(raw(estimatePayload(step, [0.1 * step, 0.1, 0.7 - 0.1 * step, 0.1]))));
      expect(vm.series).toHaveLength(step + 1);
      expect(vm.series[0]).toBe(first);
      expect(vm.series[0]).toEqual(snapshot);
    }
    expect(vm.latestEstimate).toEqual(vm.series[5]);
  });
});

describe("fuzzed input", () => {
  it("emits only protocol-valid frames and never double-sends", () => {
    const rand = lcg(2026);
    const keys = [
      "ArrowUp",
      "ArrowDown",
      "ArrowLeft",
      "ArrowRight",
      "q",
      "e",
      "s",
      "Enter",
      "x",
      " ",
      "Escape",
    ];
    const vm = new SessionViewModel();
    vm.handle(parseServerMessage(raw(initPayload())));

    let pending: "action" | "reset" | null = null;
    let step = 0;
    let sent = 0;

    for (let i = 0; i < 800; i++) {
      const roll = rand();
      if (roll < 0.55) {
        const key = keys[Math.floor(rand() * keys.length)];
        const action = keyToAction(key);
        const frame = action === null ? null : vm.requestAction(action);
        if (frame !== null) {
          expect(pending).toBeNull(); // no overlap, ever
          checkClientFrame(frame);
          pending = "action";
          sent += 1;
        } else if (action !== null && pending === null) {
          expect(vm.phase).not.toBe("live"); // live+idle must accept input
        }
      } else if (roll < 0.62) {
        const frame = vm.requestReset();
        if (frame !== null) {
          expect(pending).toBeNull();
          checkClientFrame(frame);
          pending = "reset";
          sent += 1;
        }
      } else if (pending === "action") {
        if (rand() < 0.1) {
          vm.handle(parseServerMessage(raw({ kind: "error", message: "fuzzed refusal" })));
        } else {
          step += 1;
          const a = rand();
          const b = rand() * (1 - a);
          const c = rand() * (1 - a - b);
          vm.handle(parseServerMessage(raw(statePayload(step))));
          vm.handle(parseServerMessage(raw(estimatePayload(step, [a, b, c, 1 - a - b - c]))));
        }
        pending = null;
      } else if (pending === "reset") {
        vm.handle(parseServerMessage(raw(initPayload())));
        pending = null;
        step = 0;
      }
      const rows = vm.series.length;
      expect(rows).toBeGreaterThan(0);
      for (const row of vm.series) {
        const sum = row.reduce((acc, p) => acc + p, 0);
        expect(Math.abs(sum - 1)).toBeLessThan(1e-9);
      }
    }
    expect(sent).toBeGreaterThan(100);
  });
});
