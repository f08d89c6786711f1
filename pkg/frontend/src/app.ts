/**
 * DOM wiring for the designer console.
 *
 * One Store instance drives the chat pane, solution picker, script review
 * card and snapshot strip. All layout mutations go through the ApiClient;
 * the scene is re-fetched after every change rather than patched locally.
 */
import { ApiClient, ApiError } from "./api.js";
import { Store, canApprove } from "./state.js";
import { renderInto, attachPanZoom } from "./render.js";
import { diffPlacements } from "./diff.js";
import type { ValidationReport } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function reportLines(report: ValidationReport): string[] {
  const lines: string[] = [];
  lines.push(report.formatting.ok ? "formatting: ok" : `formatting: ${report.formatting.reason}`);
  for (const [check, ok] of Object.entries(report.validity)) {
    if (!ok) lines.push(`validity: ${check} failed`);
  }
  for (const h of [...report.syntax, ...report.logic]) {
    lines.push(`${h.rule} @${h.index}: ${h.message}`);
  }
  lines.push(report.overall ? "overall: pass" : "overall: fail");
  return lines;
}

function solutionLead(text: string): string {
  const first = text.split(/[;.\n]/)[0] ?? text;
  return first.trim();
}

export interface App {
  store: Store;
  actions: {
    createSession(netlist: string, placement: string): Promise<void>;
    submitTurn(text: string): Promise<void>;
    selectSolution(index: number): Promise<void>;
    approveScript(): Promise<void>;
    toggleSnapshot(label: string): Promise<void>;
    refreshScenes(): Promise<void>;
  };
}

export function createApp(root: HTMLElement, api: ApiClient): App {
  const store = new Store();

  root.innerHTML = "";
  root.classList.add("app");

  // --- static skeleton -----------------------------------------------------
  const toasts = el("div", "toasts");

  const setup = el("section", "setup-card");
  const netlistIn = el("textarea", "netlist-input");
  netlistIn.placeholder = "netlist";
  const placementIn = el("textarea", "placement-input");
  placementIn.placeholder = "placement";
  const startBtn = el("button", "start-btn", "Start session");
  startBtn.id = "start-btn";
  setup.append(
    el("h2", undefined, "New session"),
    netlistIn,
    placementIn,
    startBtn,
  );

  const main = el("div", "panes hidden");

  const left = el("section", "talk-pane");
  const chatLog = el("div", "chat-log");
  const solutionsCard = el("div", "solutions-card hidden");
  const reviewCard = el("div", "review-card hidden");
  const inputRow = el("div", "input-row");
  const chatInput = el("textarea", "chat-input");
  chatInput.id = "chat-input";
  chatInput.placeholder = "describe the change you want";
  const sendBtn = el("button", "send-btn", "Send");
  sendBtn.id = "send-btn";
  inputRow.append(chatInput, sendBtn);
  left.append(chatLog, solutionsCard, reviewCard, inputRow);

  const right = el("section", "scene-pane");
  const strip = el("div", "snapshot-strip");
  const caption = el("div", "scene-caption");
  const sceneHost = el("div", "scene-host");
  const hoverInfo = el("div", "hover-info");
  right.append(strip, caption, sceneHost, hoverInfo);

  main.append(left, right);
  root.append(setup, main, toasts);

  // --- helpers -------------------------------------------------------------
  function toast(message: string, detail: string[] = []): void {
    const box = el("div", "toast");
    box.appendChild(el("div", "toast-title", message));
    for (const line of detail) box.appendChild(el("div", "toast-line", line));
    toasts.appendChild(box);
    setTimeout(() => box.remove(), 8000);
  }

  function errorToast(context: string, err: unknown): void {
    if (err instanceof ApiError) {
      const body = err.body as
        | { detail?: string; report?: ValidationReport; execution_error?: { command: string; cause: string } }
        | null;
      const detail: string[] = [];
      if (body?.detail) detail.push(body.detail);
      if (body?.report) detail.push(...reportLines(body.report));
      if (body?.execution_error)
        detail.push(`${body.execution_error.command}: ${body.execution_error.cause}`);
      toast(`${context} failed (${err.status})`, detail);
    } else {
      toast(`${context} failed`, [String(err)]);
    }
  }

  function renderChat(): void {
    chatLog.textContent = "";
    for (const entry of store.state.chat) {
      chatLog.appendChild(el("div", `chat-entry ${entry.role}`, entry.text));
    }
    chatLog.scrollTop = chatLog.scrollHeight;
  }

  function renderSolutions(): void {
    const sols = store.state.solutions;
    solutionsCard.textContent = "";
    if (!sols || sols.length === 0) {
      solutionsCard.classList.add("hidden");
      return;
    }
    solutionsCard.classList.remove("hidden");
    solutionsCard.appendChild(el("h3", undefined, "Proposed solutions"));
    const list = el("ol", "solutions");
    sols.forEach((text, i) => {
      const item = el("li");
      const btn = el("button", "solution-btn", text);
      btn.dataset.solution = String(i + 1);
      btn.disabled = store.state.turnInFlight;
      btn.addEventListener("click", () => void actions.selectSolution(i + 1));
      item.appendChild(btn);
      list.appendChild(item);
    });
    solutionsCard.appendChild(list);
  }

  function renderReview(): void {
    const pending = store.state.pending;
    reviewCard.textContent = "";
    if (!pending) {
      reviewCard.classList.add("hidden");
      return;
    }
    reviewCard.classList.remove("hidden");
    reviewCard.appendChild(el("h3", undefined, "Generated script"));
    const pre = el("pre", "pending-script", pending.script);
    reviewCard.appendChild(pre);
    const rep = el("div", "report");
    for (const line of reportLines(pending.report)) {
      rep.appendChild(el("div", "report-line", line));
    }
    reviewCard.appendChild(rep);
    const approve = el("button", "approve-btn", "Approve and run");
    approve.id = "approve-btn";
    approve.disabled = !canApprove(pending) || store.state.turnInFlight;
    approve.addEventListener("click", () => void actions.approveScript());
    const dismiss = el("button", "dismiss-btn", "Dismiss");
    dismiss.addEventListener("click", () => store.clearPending());
    reviewCard.append(approve, dismiss);
  }

  function renderStrip(): void {
    strip.textContent = "";
    for (const snap of store.state.history) {
      const btn = el("button", "snapshot-btn", snap.label);
      btn.dataset.label = snap.label;
      if (store.state.selectedLabels.includes(snap.label)) btn.classList.add("selected");
      btn.addEventListener("click", () => void actions.toggleSnapshot(snap.label));
      strip.appendChild(btn);
    }
  }

  function renderBusy(): void {
    const busy = store.state.turnInFlight;
    sendBtn.disabled = busy;
    startBtn.disabled = busy;
    root.classList.toggle("busy", busy);
  }

  store.subscribe(() => {
    setup.classList.toggle("hidden", store.state.sessionId !== null);
    main.classList.toggle("hidden", store.state.sessionId === null);
    renderChat();
    renderSolutions();
    renderReview();
    renderStrip();
    renderBusy();
  });

  sceneHost.addEventListener("mouseover", (ev) => {
    const target = ev.target as Element | null;
    const owner = target?.closest("g.device, polyline.wire, line.sym-axis");
    const title = owner?.querySelector("title")?.textContent;
    hoverInfo.textContent = title ?? "";
  });

  async function refreshScenes(): Promise<void> {
    const sid = store.state.sessionId;
    if (!sid) return;
    const labels = store.state.selectedLabels;
    sceneHost.textContent = "";
    try {
      if (labels.length === 2) {
        const [a, b] = await Promise.all([
          api.getLayout(sid, labels[0]),
          api.getLayout(sid, labels[1]),
        ]);
        const changed = diffPlacements(a!.geometry, b!.geometry);
        caption.textContent = `${a!.label} vs ${b!.label}: ${changed.size} device(s) differ`;
        for (const doc of [a!, b!]) {
          const cellHost = el("div", "scene-cell");
          cellHost.appendChild(el("div", "scene-label", doc.label));
          const inner = el("div", "scene-inner");
          cellHost.appendChild(inner);
          sceneHost.appendChild(cellHost);
          const svg = renderInto(inner, doc.geometry, { highlight: changed });
          if (svg) attachPanZoom(svg);
        }
      } else {
        const doc = await api.getLayout(sid, labels[0]);
        caption.textContent = `${doc.label} (${doc.hash.slice(0, 12)})`;
        const svg = renderInto(sceneHost, doc.geometry);
        if (svg) attachPanZoom(svg);
      }
    } catch (err) {
      errorToast("loading layout", err);
    }
  }

  // --- actions -------------------------------------------------------------
  const actions: App["actions"] = {
    async createSession(netlist: string, placement: string): Promise<void> {
      try {
        const res = await api.createSession(netlist, placement);
        store.startSession(res.id, res.snapshot);
        await refreshScenes();
      } catch (err) {
        errorToast("session create", err);
      }
    },

    async submitTurn(text: string): Promise<void> {
      const sid = store.state.sessionId;
      if (!sid || !text.trim()) return;
      if (!store.beginTurn()) {
        toast("a turn is already running");
        return;
      }
      store.say("designer", text);
      try {
        const res = await api.postTurn(sid, text);
        store.applyTurn(res);
        if (res.snapshot) await refreshScenes();
      } catch (err) {
        errorToast("turn", err);
      } finally {
        store.endTurn();
      }
    },

    async selectSolution(index: number): Promise<void> {
      const sols = store.state.solutions;
      if (!sols || index < 1 || index > sols.length) return;
      const lead = solutionLead(sols[index - 1]!);
      store.stage("", null);
      store.state.solutions = null;
      await actions.submitTurn(`Proceed with solution ${index}: ${lead}.`);
    },

    async approveScript(): Promise<void> {
      const sid = store.state.sessionId;
      const pending = store.state.pending;
      if (!sid || !canApprove(pending)) return;
      if (!store.beginTurn()) {
        toast("a turn is already running");
        return;
      }
      try {
        const res = await api.postCommands(sid, pending!.script);
        if (res.snapshot) {
          store.clearPending();
          store.say("system", `script applied, snapshot ${res.snapshot.label}`);
          store.recordSnapshot(res.snapshot);
          await refreshScenes();
        }
      } catch (err) {
        errorToast("script execution", err);
        if (err instanceof ApiError) {
          const body = err.body as { report?: ValidationReport } | null;
          // server re-check failed: keep the script visible, disable the button
          if (body?.report && pending) store.stage(pending.script, body.report);
        }
      } finally {
        store.endTurn();
      }
    },

    async toggleSnapshot(label: string): Promise<void> {
      store.toggleLabel(label);
      await refreshScenes();
    },

    refreshScenes,
  };

  startBtn.addEventListener("click", () =>
    void actions.createSession(netlistIn.value, placementIn.value),
  );
  sendBtn.addEventListener("click", () => {
    const text = chatInput.value;
    chatInput.value = "";
    void actions.submitTurn(text);
  });

  return { store, actions };
}
