/** Small numeric helpers shared by the aggregate computations. */

export function mean(xs: number[]): number {
  if (xs.length === 0) {
    throw new Error("mean of empty list");
  }
  let s = 0;
  for (const x of xs) s += x;
  return s / xs.length;
}

/**
 * Percentile with linear interpolation between order statistics, i.e. the
 * value at fractional rank (n - 1) * q / 100 of the sorted sample. This is
 * the same convention the simulator uses for its p95 aggregate.
 */
export function percentile(xs: number[], q: number): number {
  if (xs.length === 0) {
    throw new Error("percentile of empty list");
  }
  if (q < 0 || q > 100) {
    throw new Error(`percentile ${q} out of [0, 100]`);
  }
  const sorted = [...xs].sort((a, b) => a - b);
  const rank = ((sorted.length - 1) * q) / 100;
  const lo = Math.floor(rank);
  const hi = Math.ceil(rank);
  if (lo === hi) return sorted[lo];
  return sorted[lo] + (rank - lo) * (sorted[hi] - sorted[lo]);
}

export function extent(xs: number[]): [number, number] {
  if (xs.length === 0) {
    throw new Error("extent of empty list");
  }
  let lo = xs[0];
  let hi = xs[0];
  for (const x of xs) {
    if (x < lo) lo = x;
    if (x > hi) hi = x;
  }
  return [lo, hi];
}
