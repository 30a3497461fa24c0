"""HTTP chat/trace service: the contract the browser console consumes.

Endpoints:

* ``POST /sessions`` — create a session (201, returns the id)
* ``POST /sessions/{id}/messages`` — run one turn, returns the TurnTrace
* ``GET /sessions/{id}/trace`` — all traces for a session
* ``GET /sessions/{id}/memory`` — entity slots and last call (the inspector)
* ``GET /catalog`` — the 21 tool specs
* ``GET /transitions`` — the transition ledger
* admin: ``POST /admin/seed``, ``POST /admin/fault``, ``DELETE /admin/fault``,
  ``GET /admin/snapshot``
* state: ``GET /state`` / ``POST /state`` — session persistence round-trip
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .catalog import catalog
from .config import Config
from .endpoint import build_pipeline
from .orchestrator import Orchestrator
from .sim import FAULT_MODES, OfficeSimulator, UnknownFixtureError
from .transitions import ledger
from .types import Session


class MessageIn(BaseModel):
    text: str


class SeedIn(BaseModel):
    fixture: str = "f1"
    seed: int = 7


class FaultIn(BaseModel):
    api_name: str
    mode: str


class StateIn(BaseModel):
    sessions: list[dict]
    traces: dict[str, list[dict]]


def create_app(config: Optional[Config] = None) -> FastAPI:
    config = config or Config()
    app = FastAPI(title="office-agents", version="0.1.0")

    sim = OfficeSimulator(config.fixture, config.seed)
    rewriter, plan_backend, notes = build_pipeline(config)
    orch = Orchestrator(
        sim,
        rewriter=rewriter,
        plan_backend=plan_backend,
        retrieval_k=config.retrieval_k,
        retry_budget=config.retry_budget,
        memory_window=config.memory_window,
        static_notes=notes,
    )
    app.state.orchestrator = orch
    app.state.sim = sim
    app.state.config = config

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "fixture": sim.fixture_name}

    @app.post("/sessions", status_code=201)
    def create_session():
        session = orch.create_session()
        return {"session_id": session.id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, message: MessageIn):
        try:
            trace = orch.handle_message(session_id, message.text)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return trace.to_dict()

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        if session_id not in orch.sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return {"traces": [t.to_dict() for t in orch.traces[session_id]]}

    @app.get("/sessions/{session_id}/memory")
    def get_memory(session_id: str):
        if session_id not in orch.sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return orch.sessions[session_id].memory.to_dict()

    @app.get("/catalog")
    def get_catalog():
        return {"tools": [spec.to_dict() for spec in catalog().values()]}

    @app.get("/transitions")
    def get_transitions():
        return {"rules": [rule.to_dict() for rule in ledger()]}

    @app.post("/admin/seed")
    def admin_seed(body: SeedIn):
        try:
            sim.seed(body.fixture, body.seed)
        except UnknownFixtureError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"status": "ok", "fixture": body.fixture, "seed": body.seed}

    @app.post("/admin/fault")
    def admin_fault(body: FaultIn):
        if body.mode not in FAULT_MODES:
            raise HTTPException(status_code=422, detail=f"mode must be one of {FAULT_MODES}")
        try:
            sim.inject_fault(body.api_name, body.mode)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown api {body.api_name}")
        return {"status": "ok", "faults": dict(sim._faults)}

    @app.delete("/admin/fault")
    def admin_clear_faults():
        sim.clear_faults()
        return {"status": "ok"}

    @app.get("/admin/snapshot")
    def admin_snapshot():
        return sim.snapshot()

    @app.get("/state")
    def get_state():
        return {
            "sessions": [s.to_dict() for s in orch.sessions.values()],
            "traces": {
                sid: [t.to_dict() for t in traces] for sid, traces in orch.traces.items()
            },
        }

    @app.post("/state")
    def post_state(body: StateIn):
        import threading

        from .orchestrator import RepairTrace, TurnTrace
        from .types import DialogueTurn

        restored = 0
        for sdict in body.sessions:
            session = Session.from_dict(sdict)
            if session.id in orch.sessions:
                continue
            orch.sessions[session.id] = session
            orch.traces[session.id] = [
                TurnTrace(
                    session_id=t["session_id"],
                    turn=DialogueTurn.from_dict(t["turn"]),
                    worker=t["worker"],
                    stages=t.get("stages", []),
                    candidates=[tuple(c) for c in t.get("candidates", [])],
                    repairs=[RepairTrace(**r) for r in t.get("repairs", [])],
                    clarification=tuple(t.get("clarification", [])),
                    notes=t.get("notes", []),
                )
                for t in body.traces.get(session.id, [])
            ]
            orch._session_locks[session.id] = threading.Lock()
            restored += 1
        return {"status": "ok", "restored": restored}

    return app
