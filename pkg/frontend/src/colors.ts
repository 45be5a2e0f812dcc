/** Shared palette: goal tiles and their chart lines use the same colors. */

export const GOAL_PALETTE = [
  "#2e7d32", // green
  "#1565c0", // blue
  "#ef6c00", // orange
  "#6a1b9a", // purple
  "#00838f", // teal
  "#9e9d24", // olive
  "#ad1457", // magenta
  "#4e342e", // brown
];

export const UNKNOWN_COLOR = "#000000";
export const IRRATIONAL_COLOR = "#d32f2f";

export const WALL_COLOR = "#37474f";
export const FREE_COLOR = "#eceff1";
export const VISIBLE_COLOR = "#fff9c4";
export const GRID_LINE_COLOR = "#b0bec5";
export const AGENT_COLOR = "#212121";

export function goalColor(index: number): string {
  return GOAL_PALETTE[index % GOAL_PALETTE.length];
}

/**
 * Color for the i-th filter state out of n, ordered goals first, then the
 * undecided state (black) and the irrational state (red).
 */
export function stateColor(index: number, nStates: number): string {
  if (index === nStates - 2) return UNKNOWN_COLOR;
  if (index === nStates - 1) return IRRATIONAL_COLOR;
  return goalColor(index);
}
