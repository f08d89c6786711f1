/**
 * Wire types for the layoutlab service JSON documents.
 *
 * These mirror the HTTP payloads exactly; the UI never derives geometry on
 * its own, it renders what the service sends.
 */

export interface PinDot {
  terminal: string;
  x: number;
  y: number;
}

export interface DeviceRect {
  name: string;
  x: number;
  y: number;
  w: number;
  h: number;
  orientation: string;
  pins: PinDot[];
}

export interface WirePath {
  net: string;
  index: number;
  layer: number;
  width: number;
  routed: boolean;
  path: [number, number][];
}

export interface SymAxis {
  a: string;
  b: string;
  axis2: number; // doubled so half-cell axes stay integral
}

export interface ArrayGroup {
  id: string;
  members: string[];
  rows: number;
  cols: number;
  hspace: number;
  vspace: number;
}

export interface Geometry {
  grid: { width: number; height: number };
  devices: DeviceRect[];
  wires: WirePath[];
  sym_axes: SymAxis[];
  groups: ArrayGroup[];
}

export interface SnapshotRef {
  label: string;
  hash: string;
}

export interface LayoutDoc {
  session: string;
  label: string;
  hash: string;
  history: SnapshotRef[];
  geometry: Geometry;
  snapshot: string;
}

export interface RuleHit {
  rule: string;
  index: number;
  message: string;
}

export interface ValidationReport {
  formatting: { ok: boolean; reason: string | null };
  validity: Record<string, boolean>;
  syntax: RuleHit[];
  logic: RuleHit[];
  overall: boolean;
}

export interface TurnResponse {
  reply: string;
  kind: string | null;
  executed: string[];
  report: ValidationReport | null;
  snapshot: SnapshotRef | null;
  failed: boolean;
  solutions?: string[];
}

export interface CommandsResponse {
  ok: boolean;
  report: ValidationReport;
  log: { index: number; command: string; ops: string[]; hash: string }[];
  snapshot?: SnapshotRef;
  execution_error?: { index: number; command: string; cause: string };
}

export interface TranscriptEntry {
  role: string;
  text: string;
  meta: Record<string, unknown>;
}

export interface TranscriptDoc {
  session: string;
  entries: TranscriptEntry[];
}
