/** Keyboard layer: one key, one action, nothing stateful. */

import type { ActionName } from "./protocol.js";

/**
 * Map a KeyboardEvent.key to an action name.
 *
 * Arrows translate, Q/E turn counterclockwise/clockwise, S stays.  Anything
 * else returns null so the event can fall through to the browser.
 */
export function keyToAction(key: string): ActionName | null {
  switch (key) {
    case "ArrowUp":
      return "Up";
    case "ArrowDown":
      return "Down";
    case "ArrowLeft":
      return "Left";
    case "ArrowRight":
      return "Right";
  }
  switch (key.length === 1 ? key.toLowerCase() : key) {
    case "e":
      return "R";
    case "q":
      return "L";
    case "s":
      return "Stay";
  }
  return null;
}

/** Help line shown under the world canvas. */
export const KEY_HELP = "arrows move · Q turn ccw · E turn cw · S stay";
