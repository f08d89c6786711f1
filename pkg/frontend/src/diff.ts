/**
 * Placement diff between two snapshots.
 *
 * A device counts as changed when its origin, size or orientation differ, or
 * when it exists on only one side. Wires and constraints are not part of the
 * diff; the highlight answers "which devices moved".
 */
import type { Geometry, DeviceRect } from "./types.js";

function placementKey(d: DeviceRect): string {
  return `${d.x},${d.y},${d.w},${d.h},${d.orientation}`;
}

export function diffPlacements(a: Geometry, b: Geometry): Set<string> {
  const left = new Map<string, string>();
  for (const d of a.devices) left.set(d.name, placementKey(d));
  const changed = new Set<string>();
  const seen = new Set<string>();
  for (const d of b.devices) {
    seen.add(d.name);
    const prev = left.get(d.name);
    if (prev === undefined || prev !== placementKey(d)) changed.add(d.name);
  }
  for (const name of left.keys()) {
    if (!seen.has(name)) changed.add(name);
  }
  return changed;
}
