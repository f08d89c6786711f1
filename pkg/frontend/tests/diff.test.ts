import { describe, expect, it } from "vitest";
import { diffPlacements } from "../src/diff.js";
import type { Geometry, DeviceRect } from "../src/types.js";

function dev(name: string, x: number, y: number, orientation = "R0"): DeviceRect {
  return { name, x, y, w: 2, h: 3, orientation, pins: [] };
}

function geo(devices: DeviceRect[]): Geometry {
  return { grid: { width: 40, height: 40 }, devices, wires: [], sym_axes: [], groups: [] };
}

describe("diffPlacements", () => {
  it("is empty for identical snapshots", () => {
    const a = geo([dev("M1", 0, 0), dev("M2", 5, 5)]);
    const b = geo([dev("M2", 5, 5), dev("M1", 0, 0)]); // order must not matter
    expect(diffPlacements(a, b)).toEqual(new Set());
  });

  it("reports exactly the moved devices (set equality)", () => {
    const before = geo([dev("M1", 0, 0), dev("M2", 5, 5), dev("M3", 9, 9), dev("M4", 2, 8)]);
    const after = geo([dev("M1", 0, 0), dev("M2", 6, 5), dev("M3", 9, 9), dev("M4", 2, 8, "MY")]);
    // M2 moved, M4 flipped; nothing else may appear
    expect(diffPlacements(before, after)).toEqual(new Set(["M2", "M4"]));
  });

  it("counts devices present on one side only", () => {
    const before = geo([dev("M1", 0, 0), dev("M2", 5, 5)]);
    const after = geo([dev("M1", 0, 0), dev("M9", 5, 5)]);
    expect(diffPlacements(before, after)).toEqual(new Set(["M2", "M9"]));
  });

  it("ignores wires and constraint changes", () => {
    const a = geo([dev("M1", 0, 0)]);
    const b = geo([dev("M1", 0, 0)]);
    b.wires = [{ net: "X", index: 1, layer: 1, width: 1, routed: true, path: [[0, 0], [1, 0]] }];
    b.sym_axes = [{ a: "M1", b: "M1", axis2: 2 }];
    expect(diffPlacements(a, b)).toEqual(new Set());
  });
});
