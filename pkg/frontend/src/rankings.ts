// Reward assignment from drag-to-reorder rankings. Failures keep the fixed
// failure reward; successful demos get evenly spaced rewards inside the
// success band, best-ranked highest. Sliders can still fine-tune afterwards.

export interface Ranked {
  id: string;
  outcome: "failed" | "succeeded";
}

export interface RankingBounds {
  rFail: number; // fixed reward for failures (< 0)
  rMin: number; // worst successful reward (>= 0)
  rMax: number; // best successful reward
}

export const DEFAULT_BOUNDS: RankingBounds = { rFail: -0.5, rMin: 0.25, rMax: 2.0 };

/**
 * Map an ordering (best first) to rewards. Successful demos are spread
 * evenly over [rMin, rMax] by rank; failures all get rFail regardless of
 * where they sit in the list.
 */
export function spreadRewards(
  order: Ranked[],
  bounds: RankingBounds = DEFAULT_BOUNDS,
): Map<string, number> {
  if (bounds.rFail >= 0) throw new Error("failure reward must be negative");
  if (bounds.rMin < 0 || bounds.rMax < bounds.rMin) {
    throw new Error("success band must satisfy 0 <= rMin <= rMax");
  }
  const successes = order.filter((d) => d.outcome === "succeeded");
  const rewards = new Map<string, number>();
  const n = successes.length;
  successes.forEach((d, rank) => {
    const t = n > 1 ? rank / (n - 1) : 0;
    rewards.set(d.id, bounds.rMax - t * (bounds.rMax - bounds.rMin));
  });
  for (const d of order) {
    if (d.outcome === "failed") rewards.set(d.id, bounds.rFail);
  }
  return rewards;
}

/** Slider range for a demo class: failures stay negative, successes stay >= 0. */
export function sliderRange(outcome: "failed" | "succeeded", bounds: RankingBounds = DEFAULT_BOUNDS): [number, number] {
  return outcome === "failed" ? [2 * bounds.rFail, -0.01] : [0, bounds.rMax];
}
