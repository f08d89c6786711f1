/**
 * View state for one editing session.
 *
 * The store is a plain object plus a change listener list. Mutations go
 * through the exported transition functions so the two invariants hold
 * everywhere: a pending script always carries its validation report, and at
 * most one turn is in flight at a time.
 */
import type { SnapshotRef, TurnResponse, ValidationReport } from "./types.js";

export interface ChatEntry {
  role: "designer" | "assistant" | "system";
  text: string;
}

export interface PendingScript {
  script: string;
  report: ValidationReport;
}

export interface ViewState {
  sessionId: string | null;
  history: SnapshotRef[];
  // labels picked for the snapshot pane; two selections mean diff view
  selectedLabels: string[];
  chat: ChatEntry[];
  solutions: string[] | null;
  pending: PendingScript | null;
  turnInFlight: boolean;
}

export type Listener = (s: ViewState) => void;

export class Store {
  state: ViewState;
  private listeners: Listener[] = [];

  constructor() {
    this.state = {
      sessionId: null,
      history: [],
      selectedLabels: [],
      chat: [],
      solutions: null,
      pending: null,
      turnInFlight: false,
    };
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  startSession(sessionId: string, first: SnapshotRef): void {
    this.state.sessionId = sessionId;
    this.state.history = [first];
    this.state.selectedLabels = [first.label];
    this.state.chat = [];
    this.state.solutions = null;
    this.state.pending = null;
    this.state.turnInFlight = false;
    this.emit();
  }

  /** Take the client-side turn lock. False means a turn is already running. */
  beginTurn(): boolean {
    if (this.state.turnInFlight) return false;
    this.state.turnInFlight = true;
    this.emit();
    return true;
  }

  endTurn(): void {
    this.state.turnInFlight = false;
    this.emit();
  }

  say(role: ChatEntry["role"], text: string): void {
    this.state.chat.push({ role, text });
    this.emit();
  }

  /** Fold a /turns response into the view. */
  applyTurn(res: TurnResponse): void {
    this.state.chat.push({ role: "assistant", text: res.reply });
    this.state.solutions = res.solutions ?? null;
    if (res.snapshot) {
      this.state.history.push(res.snapshot);
      this.state.selectedLabels = [res.snapshot.label];
    }
    if (res.executed.length > 0 && res.report) {
      // generated script staged for review; approval re-posts it explicitly
      this.state.pending = {
        script: res.executed.join("\n"),
        report: res.report,
      };
    } else if (res.failed && res.report) {
      this.state.pending = null;
    }
    this.emit();
  }

  /** Stage a script for approval. Refused without a report. */
  stage(script: string, report: ValidationReport | null): void {
    if (!report) {
      this.state.pending = null;
    } else {
      this.state.pending = { script, report };
    }
    this.emit();
  }

  clearPending(): void {
    this.state.pending = null;
    this.emit();
  }

  recordSnapshot(snap: SnapshotRef): void {
    this.state.history.push(snap);
    this.state.selectedLabels = [snap.label];
    this.emit();
  }

  /** Toggle a history label; keeps at most two selected (diff view). */
  toggleLabel(label: string): void {
    const sel = this.state.selectedLabels;
    const at = sel.indexOf(label);
    if (at >= 0) {
      if (sel.length > 1) sel.splice(at, 1);
    } else {
      sel.push(label);
      while (sel.length > 2) sel.shift();
    }
    this.emit();
  }
}

/** A script may be approved only when its report passed every check. */
export function canApprove(pending: PendingScript | null): boolean {
  return pending !== null && pending.report.overall;
}
