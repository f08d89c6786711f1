import type {
  CommandsResponse,
  Geometry,
  LayoutDoc,
  SnapshotRef,
  TurnResponse,
  ValidationReport,
} from "../src/types.js";

export const passReport: ValidationReport = {
  formatting: { ok: true, reason: null },
  validity: {},
  syntax: [],
  logic: [],
  overall: true,
};

export function geometry(deviceCount: number, axes = 0): Geometry {
  const g: Geometry = {
    grid: { width: 48, height: 36 },
    devices: [],
    wires: [],
    sym_axes: [],
    groups: [],
  };
  for (let i = 0; i < deviceCount; i++) {
    g.devices.push({
      name: `M${i + 1}`,
      x: (i % 6) * 7,
      y: Math.floor(i / 6) * 8,
      w: 4,
      h: 5,
      orientation: "R0",
      pins: [],
    });
  }
  for (let i = 0; i < axes; i++) {
    g.sym_axes.push({ a: `M${2 * i + 1}`, b: `M${2 * i + 2}`, axis2: 20 + i });
  }
  return g;
}

export function layoutDoc(
  label: string,
  history: SnapshotRef[],
  geo: Geometry,
): LayoutDoc {
  return {
    session: "sess-1",
    label,
    hash: `hash-${label}`,
    history,
    geometry: geo,
    snapshot: "",
  };
}

export function okTurn(overrides: Partial<TurnResponse> = {}): TurnResponse {
  return {
    reply: "done",
    kind: "Concrete",
    executed: [],
    report: null,
    snapshot: null,
    failed: false,
    ...overrides,
  };
}

export function okCommands(snapshot: SnapshotRef): CommandsResponse {
  return { ok: true, report: passReport, log: [], snapshot };
}

/** Poll until the check stops throwing. */
export async function until(check: () => void, ms = 4000): Promise<void> {
  const start = Date.now();
  for (;;) {
    try {
      check();
      return;
    } catch (err) {
      if (Date.now() - start > ms) throw err;
      await new Promise((r) => setTimeout(r, 10));
    }
  }
}
