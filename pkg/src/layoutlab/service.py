"""HTTP session service: chat turns, direct script execution, snapshots.

Sessions live in memory and persist as append-only files under a data
directory.  Recovery replays the persisted edit events; a turn that died
mid-flight left no event, so restart lands on the last completed state.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel

from .commands import execute, parse_script, scan_script
from .errors import (
    ExecutionError,
    GroundingFailureError,
    LayoutLabError,
    ModelUnavailableError,
    PipelineTerminationError,
    RoutingError,
    UnparseableSolutionListError,
)
from .knowledge import KnowledgeStore, load_corpus
from .layout import (
    Layout,
    backup_state,
    layout_from_snapshot,
    load_layout,
    restore_state,
    snapshot,
    snapshot_hash,
)
from .model_client import client_from_env
from .netlist import parse_netlist
from .pipeline import PipelineContext, Solution, TranscriptEntry, run_pipeline
from .validator import validate_script


class TurnInFlightError(Exception):
    """A second mutation arrived while the session lock was held."""


class UnknownSessionError(Exception):
    pass


class UnknownSnapshotError(Exception):
    pass


@dataclass
class Session:
    id: str
    ctx: PipelineContext
    path: Path
    snapshots: list[tuple[str, str]] = field(default_factory=list)
    created_at: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


def render_geometry(l: Layout) -> dict:
    """Display geometry: rects, pin dots, wire paths, constraint markers."""
    devices = []
    for name in sorted(l.placements):
        pl = l.placements[name]
        pins = [
            {"terminal": t, "x": pl.pin_position(t)[0], "y": pl.pin_position(t)[1]}
            for t in sorted(pl.pins)
        ]
        devices.append(
            {
                "name": name,
                "x": pl.origin[0],
                "y": pl.origin[1],
                "w": pl.size[0],
                "h": pl.size[1],
                "orientation": pl.orientation,
                "pins": pins,
            }
        )
    wires = []
    for net in sorted(l.nets):
        route = l.nets[net]
        for w in route.wires:
            wires.append(
                {
                    "net": net,
                    "index": w.index,
                    "layer": w.layer,
                    "width": w.width,
                    "routed": route.routed,
                    "path": [[x, y] for x, y in w.path],
                }
            )
    sym_axes = [
        {"a": p.a, "b": p.b, "axis2": p.axis2} for p in l.sym_pairs
    ]
    groups = [
        {
            "id": g.id,
            "members": list(g.members),
            "rows": g.rows,
            "cols": g.cols,
            "hspace": g.hspace,
            "vspace": g.vspace,
        }
        for g in (l.array_groups[gid] for gid in sorted(l.array_groups))
    ]
    return {
        "grid": {"width": l.grid.width, "height": l.grid.height},
        "devices": devices,
        "wires": wires,
        "sym_axes": sym_axes,
        "groups": groups,
    }


class LayoutService:
    """Session store with file persistence; one mutation at a time per session."""

    def __init__(self, data_dir: Path, kb_dir: Path | None = None, env=None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.kb_dir = kb_dir
        self.env = env
        self._registry_lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        for entry in sorted(self.data_dir.iterdir()):
            if entry.is_dir() and (entry / "netlist.ckt").exists():
                session = self._load_session(entry)
                self.sessions[session.id] = session

    # -- construction ------------------------------------------------------

    def _knowledge(self) -> KnowledgeStore:
        if self.kb_dir is not None and Path(self.kb_dir).is_dir():
            return load_corpus(Path(self.kb_dir))
        return KnowledgeStore()

    def _fresh_ctx(self, netlist_text: str, placement_text: str) -> PipelineContext:
        netlist = parse_netlist(netlist_text)
        layout = load_layout(netlist, placement_text)
        return PipelineContext(
            netlist=netlist,
            layout=layout,
            client=client_from_env(self.env),
            kb=self._knowledge(),
        )

    def create(self, netlist_text: str, placement_text: str) -> Session:
        ctx = self._fresh_ctx(netlist_text, placement_text)
        sid = uuid.uuid4().hex[:12]
        path = self.data_dir / sid
        path.mkdir()
        (path / "snapshots").mkdir()
        (path / "netlist.ckt").write_text(netlist_text)
        (path / "placement.txt").write_text(placement_text)
        (path / "events.jsonl").write_text("")
        (path / "transcript.jsonl").write_text("")
        session = Session(sid, ctx, path, created_at=time.time())
        (path / "meta.json").write_text(
            json.dumps({"id": sid, "created_at": session.created_at})
        )
        self._record_snapshot(session)
        self._write_state(session)
        with self._registry_lock:
            self.sessions[sid] = session
        return session

    def _load_session(self, path: Path) -> Session:
        ctx = self._fresh_ctx(
            (path / "netlist.ckt").read_text(), (path / "placement.txt").read_text()
        )
        meta = json.loads((path / "meta.json").read_text())
        session = Session(meta["id"], ctx, path, created_at=meta["created_at"])
        session.snapshots.append(self._store_snapshot(session))
        events_file = path / "events.jsonl"
        for line in events_file.read_text().splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            script = event.get("script", "")
            if script:
                execute(ctx.layout, parse_script(script))
                session.snapshots.append(self._store_snapshot(session))
        index_file = path / "snapshot_index.jsonl"
        if index_file.exists():
            recorded = [
                (doc["label"], doc["hash"])
                for doc in map(json.loads, index_file.read_text().splitlines())
                if doc
            ]
            if recorded != session.snapshots:
                raise RuntimeError(f"replay of {session.id} diverged from its index")
        transcript_file = path / "transcript.jsonl"
        if transcript_file.exists():
            for line in transcript_file.read_text().splitlines():
                if line.strip():
                    doc = json.loads(line)
                    ctx.transcript.append(
                        TranscriptEntry(doc["role"], doc["text"], doc["meta"])
                    )
        state_file = path / "state.json"
        if state_file.exists():
            state = json.loads(state_file.read_text())
            if state["pending"] is not None:
                ctx.pending_solutions = [
                    Solution(s["text"], tuple(s["commands"])) for s in state["pending"]
                ]
            ctx.refine_rounds = state["refine_rounds"]
        return session

    # -- persistence helpers ----------------------------------------------

    def _store_snapshot(self, session: Session) -> tuple[str, str]:
        label = f"S{len(session.snapshots) + 1}"
        text = snapshot(session.ctx.layout)
        (session.path / "snapshots" / f"{label}.txt").write_text(text)
        return label, snapshot_hash(session.ctx.layout)

    def _record_snapshot(self, session: Session) -> tuple[str, str]:
        label, digest = self._store_snapshot(session)
        session.snapshots.append((label, digest))
        with (session.path / "snapshot_index.jsonl").open("a") as f:
            f.write(json.dumps({"label": label, "hash": digest}) + "\n")
        return label, digest

    def _append_event(self, session: Session, event: dict) -> None:
        with (session.path / "events.jsonl").open("a") as f:
            f.write(json.dumps(event) + "\n")

    def _append_transcript(self, session: Session, start: int) -> None:
        entries = session.ctx.transcript[start:]
        if not entries:
            return
        with (session.path / "transcript.jsonl").open("a") as f:
            for e in entries:
                f.write(json.dumps(e.to_doc()) + "\n")

    def _write_state(self, session: Session) -> None:
        ctx = session.ctx
        pending = (
            None
            if ctx.pending_solutions is None
            else [{"text": s.text, "commands": list(s.commands)} for s in ctx.pending_solutions]
        )
        (session.path / "state.json").write_text(
            json.dumps({"pending": pending, "refine_rounds": ctx.refine_rounds})
        )

    # -- operations --------------------------------------------------------

    def get(self, sid: str) -> Session:
        try:
            return self.sessions[sid]
        except KeyError:
            raise UnknownSessionError(sid) from None

    def turn(self, sid: str, text: str) -> dict:
        session = self.get(sid)
        if not session.lock.acquire(blocking=False):
            raise TurnInFlightError(sid)
        try:
            ctx = session.ctx
            start = len(ctx.transcript)
            terminated = False
            try:
                result = run_pipeline(ctx, text)
                reply = result.reply
                kind = result.kind.value if result.kind else None
                executed = [e.command for e in result.executed]
                report = result.report.to_doc() if result.report else None
            except PipelineTerminationError as exc:
                ctx.pending_solutions = None
                ctx.refine_rounds = 0
                reply, kind, executed, report = str(exc), None, [], None
                terminated = True
            except (RoutingError, UnparseableSolutionListError, GroundingFailureError) as exc:
                reply = f"The turn could not be completed: {exc}"
                kind, executed, report = None, [], None
                terminated = True
            snap = None
            if executed:
                label, digest = self._record_snapshot(session)
                snap = {"label": label, "hash": digest}
                self._append_event(
                    session,
                    {"type": "turn", "text": text, "script": "\n".join(executed), "label": label},
                )
            else:
                self._append_event(session, {"type": "turn", "text": text, "script": ""})
            self._append_transcript(session, start)
            self._write_state(session)
            out = {
                "reply": reply,
                "kind": kind,
                "executed": executed,
                "report": report,
                "snapshot": snap,
                "failed": terminated,
            }
            if session.ctx.pending_solutions is not None:
                out["solutions"] = [s.text for s in session.ctx.pending_solutions]
            return out
        finally:
            session.lock.release()

    def commands(self, sid: str, script_text: str) -> dict:
        session = self.get(sid)
        if not session.lock.acquire(blocking=False):
            raise TurnInFlightError(sid)
        try:
            ctx = session.ctx
            scanned = scan_script(script_text)
            report = validate_script(scanned, ctx.netlist, ctx.layout)
            if report.syntax or report.logic:
                return {"ok": False, "report": report.to_doc(), "log": []}
            script = parse_script(script_text)
            if not script.commands:
                label, digest = session.snapshots[-1]
                return {
                    "ok": True,
                    "log": [],
                    "report": report.to_doc(),
                    "snapshot": {"label": label, "hash": digest},
                }
            state = backup_state(ctx.layout)
            try:
                log = execute(ctx.layout, script)
            except ExecutionError as exc:
                restore_state(ctx.layout, state)
                return {
                    "ok": False,
                    "report": report.to_doc(),
                    "log": [],
                    "execution_error": {
                        "index": exc.index,
                        "command": exc.command,
                        "cause": str(exc.cause),
                    },
                }
            start = len(ctx.transcript)
            executed_text = "\n".join(e.command for e in log)
            label, digest = self._record_snapshot(session)
            self._append_event(
                session, {"type": "commands", "script": executed_text, "label": label}
            )
            ctx.say("script", executed_text, snapshot=label)
            self._append_transcript(session, start)
            return {
                "ok": True,
                "report": report.to_doc(),
                "log": [
                    {
                        "index": e.index,
                        "command": e.command,
                        "ops": list(e.ops),
                        "hash": e.snapshot_hash,
                    }
                    for e in log
                ],
                "snapshot": {"label": label, "hash": digest},
            }
        finally:
            session.lock.release()

    def layout_doc(self, sid: str, label: str | None = None) -> dict:
        session = self.get(sid)
        if label is None:
            label = session.snapshots[-1][0]
        snap_file = session.path / "snapshots" / f"{label}.txt"
        if not snap_file.exists():
            raise UnknownSnapshotError(label)
        text = snap_file.read_text()
        l = layout_from_snapshot(text, session.ctx.netlist)
        return {
            "session": sid,
            "label": label,
            "hash": snapshot_hash(l),
            "history": [{"label": lb, "hash": h} for lb, h in session.snapshots],
            "geometry": render_geometry(l),
            "snapshot": text,
        }

    def transcript_doc(self, sid: str) -> dict:
        session = self.get(sid)
        return {
            "session": sid,
            "entries": [e.to_doc() for e in session.ctx.transcript],
        }


class CreateBody(BaseModel):
    netlist: str
    placement: str


class TurnBody(BaseModel):
    text: str


class CommandsBody(BaseModel):
    script: str


def create_app(service: LayoutService):
    from fastapi import FastAPI
    from fastapi.responses import JSONResponse

    app = FastAPI(title="layoutlab service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(service.sessions)}

    @app.post("/sessions")
    def create_session(body: CreateBody):
        try:
            session = service.create(body.netlist, body.placement)
        except LayoutLabError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        label, digest = session.snapshots[0]
        return {"id": session.id, "snapshot": {"label": label, "hash": digest}}

    @app.post("/sessions/{sid}/turns")
    def post_turn(sid: str, body: TurnBody):
        try:
            return service.turn(sid, body.text)
        except UnknownSessionError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        except TurnInFlightError:
            return JSONResponse({"detail": "turn in flight"}, status_code=409)
        except ModelUnavailableError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=502)

    @app.post("/sessions/{sid}/commands")
    def post_commands(sid: str, body: CommandsBody):
        try:
            result = service.commands(sid, body.script)
        except UnknownSessionError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        except TurnInFlightError:
            return JSONResponse({"detail": "turn in flight"}, status_code=409)
        if not result["ok"]:
            return JSONResponse(result, status_code=422)
        return result

    @app.get("/sessions/{sid}/layout")
    def get_layout(sid: str, label: str | None = None):
        try:
            return service.layout_doc(sid, label)
        except UnknownSessionError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        except UnknownSnapshotError:
            return JSONResponse({"detail": "unknown snapshot label"}, status_code=404)

    @app.get("/sessions/{sid}/transcript")
    def get_transcript(sid: str):
        try:
            return service.transcript_doc(sid)
        except UnknownSessionError:
            return JSONResponse({"detail": "unknown session"}, status_code=404)

    return app
