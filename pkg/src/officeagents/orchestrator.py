"""The master node: rewrite, route to a worker, execute, manage memory.

One ``DialogueTurn`` is appended per incoming message, on error paths too.
Sessions are strictly serialized (one lock each) while different sessions can
run concurrently. Routing is a pure function of the rewrite backend's intent
label; only the office worker is a complex agent, the other three labels are
canned-response stubs.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import grammar
from . import planner as planner_mod
from . import retrieval, solver
from .catalog import catalog, get_tool
from .rewrite import RewriteOutput, RuleRewriter, WORKER_LABELS
from .sim import OfficeSimulator
from .timeexpr import iso
from .types import (
    DialogueTurn,
    Plan,
    Session,
    SessionMemory,
    ToolCall,
    ToolResult,
    update_memory,
)

DEFAULT_RETRIEVAL_K = 5
DEFAULT_RETRY_BUDGET = 1


@dataclass
class WorkerRequest:
    session_id: str
    raw_query: str
    rewritten: str
    related: bool
    memory: SessionMemory
    clock_now: object  # datetime


@dataclass
class RepairTrace:
    api_name: str
    error_code: str
    action: str  # retried | gave_up
    attempt: int

    def to_dict(self) -> dict:
        return {
            "api_name": self.api_name,
            "error_code": self.error_code,
            "action": self.action,
            "attempt": self.attempt,
        }


@dataclass
class WorkerResult:
    reply: str
    plan: Optional[Plan] = None
    calls: list[tuple[ToolCall, ToolResult]] = field(default_factory=list)
    candidates: list[tuple[str, float]] = field(default_factory=list)
    repairs: list[RepairTrace] = field(default_factory=list)
    clarification: tuple[str, ...] = ()


@dataclass(frozen=True)
class WorkerRegistration:
    label: str
    handler: Callable[[WorkerRequest], WorkerResult]
    kind: str  # simple | complex

    def __post_init__(self):
        if self.label not in WORKER_LABELS:
            raise ValueError(f"unknown worker label {self.label!r}")
        if self.kind not in ("simple", "complex"):
            raise ValueError(f"kind must be simple or complex, got {self.kind!r}")


@dataclass
class TurnTrace:
    session_id: str
    turn: DialogueTurn
    worker: str
    stages: list[dict] = field(default_factory=list)  # {stage, ms} in pipeline order
    candidates: list[tuple[str, float]] = field(default_factory=list)
    repairs: list[RepairTrace] = field(default_factory=list)
    clarification: tuple[str, ...] = ()
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "turn": self.turn.to_dict(),
            "worker": self.worker,
            "stages": list(self.stages),
            "candidates": [[n, s] for n, s in self.candidates],
            "repairs": [r.to_dict() for r in self.repairs],
            "clarification": list(self.clarification),
            "notes": list(self.notes),
        }


def _render_slots(free: list[dict]) -> str:
    return "; ".join(f"{s['start']} to {s['end']}" for s in free) or "never"


def compose_reply(call: ToolCall, result: ToolResult) -> str:
    """Deterministic one-line reply for an executed call."""
    if not result.ok:
        return f"Sorry, {call.api_name} failed ({result.error.code})."
    payload = result.payload
    kind = payload.get("kind")
    records = payload.get("records", [])
    ids = ", ".join(r["id"] for r in records)
    if kind == "summary":
        return payload.get("text", "")
    if kind == "emails":
        return f"Found {len(records)} emails ({ids})." if records else "Found no emails."
    if kind == "email_sent":
        rec = records[0]
        return f"Email sent to {', '.join(rec['recipients'])} ({rec['id']})."
    if kind == "schedule":
        rec = records[0]
        if call.api_name in ("create_schedule", "create_meeting"):
            return f"Created {rec['title']} at {rec['start_time']} ({rec['id']})."
        return f"Updated schedule {rec['id']}."
    if kind == "schedules":
        return f"Found {len(records)} meetings ({ids})." if records else "Found no meetings."
    if kind == "schedule_status":
        return f"{payload['person']} is free: {_render_slots(payload.get('free', []))}."
    if kind == "deleted":
        return f"Deleted {records[0]['id']}."
    if kind == "rooms":
        return f"Found {len(records)} rooms ({ids})." if records else "Found no rooms."
    if kind == "messages":
        return f"Found {len(records)} messages ({ids})." if records else "Found no messages."
    if kind == "message_sent":
        return f"Message posted in {records[0]['chat_id']} ({records[0]['id']})."
    if kind in ("group_chats", "chats"):
        return f"Found {len(records)} chats ({ids})." if records else "Found no chats."
    if kind == "todo":
        return f"Added todo {records[0]['id']}."
    if kind == "todos":
        return f"Found {len(records)} todos ({ids})." if records else "Found no todos."
    if kind == "files":
        return f"Found {len(records)} files ({ids})." if records else "Found no files."
    return "Done."


class OfficeWorker:
    """The complex worker: tool retrieval, planning, solving, execution, repair."""

    def __init__(
        self,
        sim: OfficeSimulator,
        index: Optional[retrieval.ToolIndex] = None,
        plan_backend=None,
        retrieval_k: int = DEFAULT_RETRIEVAL_K,
        retry_budget: int = DEFAULT_RETRY_BUDGET,
    ):
        self.sim = sim
        self.index = index or retrieval.build_index()
        self.plan_backend = plan_backend or planner_mod.RulePlanner()
        self.retrieval_k = retrieval_k
        self.retry_budget = retry_budget

    def __call__(self, request: WorkerRequest) -> WorkerResult:
        out = WorkerResult(reply="")
        out.candidates = retrieval.recall(self.index, request.rewritten, self.retrieval_k)
        cand_names = [name for name, _ in out.candidates]
        # grammar-matched tools join the candidate set: idiom expansions may
        # need a helper tool (find_meetings) that ranks low for the raw query
        for clause_no, clause in enumerate(grammar.split_clauses(request.rewritten), start=1):
            steps = grammar.match_steps(clause, request.clock_now, position=clause_no)
            for step in steps or []:
                if step.api_name not in cand_names:
                    cand_names.append(step.api_name)
        cand_specs = [get_tool(name) for name in cand_names]
        plan = self.plan_backend.plan(
            request.rewritten, cand_specs, request.memory, request.clock_now
        )
        out.plan = plan
        ctx = solver.SolveContext(memory=request.memory)
        pieces: list[str] = []

        for sub_task in plan.sub_tasks:
            if sub_task.api_name == planner_mod.NONE_API:
                continue
            spec = get_tool(sub_task.api_name)
            outcome = solver.solve(sub_task, spec, ctx, request.clock_now)
            if outcome.needs_clarification:
                out.clarification = outcome.missing
                pieces.append(
                    f"To run {sub_task.api_name} I still need: {', '.join(outcome.missing)}."
                )
                break
            call = outcome.call
            result = self.sim.execute(call)
            attempt = 0
            while not result.ok and attempt < self.retry_budget:
                attempt += 1
                fix = solver.repair(call, result.error, ctx)
                if fix.gave_up:
                    out.repairs.append(
                        RepairTrace(call.api_name, result.error.code, "gave_up", attempt)
                    )
                    break
                out.repairs.append(
                    RepairTrace(call.api_name, result.error.code, "retried", attempt)
                )
                call = fix.call
                result = self.sim.execute(call)
            out.calls.append((call, result))
            ctx.evidence[sub_task.evidence_id] = (sub_task.api_name, result)
            pieces.append(compose_reply(call, result))
            if not result.ok:
                break  # dependent sub-tasks cannot proceed

        if not pieces:
            pieces.append("Nothing in that for the office tools; anything else?")
        out.reply = pieces[-1]
        return out


def make_stub(label: str) -> Callable[[WorkerRequest], WorkerResult]:
    replies = {
        "chitchat": "Hello! How can I help with your office work today?",
        "text_to_image": "[image-generation stub] Requested: {q}",
        "online_search": "[online-search stub] Searched the web for: {q}",
    }
    template = replies[label]

    def handler(request: WorkerRequest) -> WorkerResult:
        return WorkerResult(reply=template.format(q=request.rewritten))

    return handler


class Orchestrator:
    """Session owner. Many sessions may run concurrently; each session's turns
    are strictly serialized by its own lock."""

    def __init__(
        self,
        sim: OfficeSimulator,
        rewriter=None,
        plan_backend=None,
        index: Optional[retrieval.ToolIndex] = None,
        retrieval_k: int = DEFAULT_RETRIEVAL_K,
        retry_budget: int = DEFAULT_RETRY_BUDGET,
        memory_window: int = 10,
        register_defaults: bool = True,
        static_notes: list[str] | None = None,
    ):
        self.sim = sim
        self.rewriter = rewriter or RuleRewriter()
        self.memory_window = memory_window
        self.static_notes = list(static_notes or [])
        self.sessions: dict[str, Session] = {}
        self.traces: dict[str, list[TurnTrace]] = {}
        self._workers: dict[str, WorkerRegistration] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._counter = 0
        if register_defaults:
            office = OfficeWorker(
                sim,
                index=index,
                plan_backend=plan_backend,
                retrieval_k=retrieval_k,
                retry_budget=retry_budget,
            )
            self.register_worker(WorkerRegistration("wps365", office, "complex"))
            for label in ("chitchat", "text_to_image", "online_search"):
                self.register_worker(WorkerRegistration(label, make_stub(label), "simple"))

    # -- worker registry -----------------------------------------------------

    def register_worker(self, registration: WorkerRegistration) -> None:
        with self._registry_lock:
            if registration.label in self._workers:
                raise ValueError(f"worker {registration.label!r} already registered")
            self._workers[registration.label] = registration

    @property
    def worker_labels(self) -> list[str]:
        return list(self._workers)

    # -- sessions --------------------------------------------------------------

    def create_session(self, session_id: str | None = None) -> Session:
        with self._registry_lock:
            if session_id is None:
                self._counter += 1
                session_id = f"s-{self._counter:04d}"
            if session_id in self.sessions:
                raise ValueError(f"session {session_id!r} already exists")
            memory = SessionMemory(window_size=self.memory_window)
            session = Session(id=session_id, memory=memory)
            self.sessions[session_id] = session
            self.traces[session_id] = []
            self._session_locks[session_id] = threading.Lock()
            return session

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session {session_id!r}") from None

    # -- the pipeline ------------------------------------------------------------

    def handle_message(self, session_id: str, text: str) -> TurnTrace:
        if not text or not text.strip():
            raise ValueError("message text must be non-empty")
        session = self.get_session(session_id)
        with self._session_locks[session_id]:
            return self._handle_locked(session, text)

    def _handle_locked(self, session: Session, text: str) -> TurnTrace:
        stages: list[dict] = []
        notes: list[str] = list(self.static_notes)
        clock_now = self.sim.clock.now

        def timed(stage: str, fn, *args):
            t0 = time.perf_counter()
            value = fn(*args)
            stages.append({"stage": stage, "ms": (time.perf_counter() - t0) * 1000.0})
            return value

        rw: RewriteOutput = timed(
            "rewrite", self.rewriter.rewrite, session.memory, text, clock_now
        )
        registration = timed("route", self._route, rw.intent, notes)

        request = WorkerRequest(
            session_id=session.id,
            raw_query=text,
            rewritten=rw.rewritten,
            related=rw.related,
            memory=session.memory,
            clock_now=clock_now,
        )
        try:
            result: WorkerResult = timed("worker", registration.handler, request)
        except Exception as exc:  # worker bug or exhausted retries: keep session usable
            notes.append(f"worker error: {exc}")
            result = WorkerResult(reply="Sorry, something went wrong handling that turn.")

        turn = DialogueTurn(
            user_query=text,
            related=rw.related,
            rewritten_query=rw.rewritten,
            intent=rw.intent,
            plan=result.plan,
            calls=tuple(result.calls),
            reply=result.reply,
            timestamp=iso(clock_now),
        )
        session.memory = update_memory(session.memory, turn)
        session.turns.append(turn)
        stages.append({"stage": "reply", "ms": 0.0})

        trace = TurnTrace(
            session_id=session.id,
            turn=turn,
            worker=registration.label,
            stages=stages,
            candidates=result.candidates,
            repairs=result.repairs,
            clarification=result.clarification,
            notes=notes,
        )
        self.traces[session.id].append(trace)
        return trace

    def _route(self, intent: str, notes: list[str]) -> WorkerRegistration:
        registration = self._workers.get(intent)
        if registration is None:
            notes.append(f"no worker registered for {intent!r}; using chitchat")
            registration = self._workers.get("chitchat") or self._workers["wps365"]
        return registration
