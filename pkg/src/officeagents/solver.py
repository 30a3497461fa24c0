"""Argument extraction for planned sub-tasks, plus the error-correction pass.

For each sub-task the solver parses explicit values out of the clause text,
pulls evidence-dependent values from prior results (the execution-time meaning
of a tool transition), falls back to memory slots for id-shaped required
params, and resolves relative dates against the simulated clock. A call is
only emitted when it validates; otherwise the outcome asks for the missing
param names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Optional

from . import grammar, timeexpr
from .catalog import ToolSpec, get_tool, validate_call
from .types import SessionMemory, SubTask, ToolCall, ToolResult

_MISSING_RE = re.compile(r"<missing:(\w+)>")


@dataclass
class SolveContext:
    memory: SessionMemory = field(default_factory=SessionMemory)
    evidence: dict[str, tuple[str, ToolResult]] = field(default_factory=dict)
    # evidence_id -> (api that produced it, its result)


@dataclass(frozen=True)
class SolveOutcome:
    call: Optional[ToolCall] = None
    missing: tuple[str, ...] = ()  # params that need clarification
    note: str = ""

    @property
    def needs_clarification(self) -> bool:
        return bool(self.missing)

    @property
    def skipped(self) -> bool:
        return self.call is None and not self.missing


def _records(payload: dict) -> list[dict]:
    return payload.get("records", []) if payload else []


def _ids(payload: dict) -> list[str]:
    return [r["id"] for r in _records(payload)]


def _fill_free_slot(payload, args, clock):
    free = payload.get("free", [])
    if not free:
        return
    start = datetime.fromisoformat(free[0]["start"])
    end = min(start + timedelta(hours=1), datetime.fromisoformat(free[0]["end"]))
    args.setdefault("start_time", timeexpr.iso(start))
    args.setdefault("end_time", timeexpr.iso(end))
    if payload.get("person"):
        args.setdefault("participants", [payload["person"]])


def _fill_first_schedule(payload, args, clock):
    ids = _ids(payload)
    if ids:
        args.setdefault("schedule_id", ids[0])


def _fill_busy_schedule(payload, args, clock):
    busy = [r["id"] for r in payload.get("busy", [])]
    if busy:
        args.setdefault("schedule_id", busy[0])


def _fill_summary_body(payload, args, clock):
    if payload.get("text"):
        args.setdefault("body", payload["text"])
        args.setdefault("subject", "Email summary")


EVIDENCE_FILLERS = {
    ("search_email", "summary_email"): lambda p, a, c: a.setdefault("email_ids", _ids(p)),
    ("search_email", "send_email"): lambda p, a, c: a.setdefault("attachments", _ids(p)),
    ("summary_email", "send_email"): _fill_summary_body,
    ("create_schedule", "update_schedule"): _fill_first_schedule,
    ("create_schedule", "delete_schedule"): _fill_first_schedule,
    ("create_meeting", "update_schedule"): _fill_first_schedule,
    ("create_meeting", "delete_schedule"): _fill_first_schedule,
    ("update_schedule", "update_schedule"): _fill_first_schedule,
    ("update_schedule", "delete_schedule"): _fill_first_schedule,
    ("find_meetings", "update_schedule"): _fill_first_schedule,
    ("find_meetings", "delete_schedule"): _fill_first_schedule,
    ("find_schedule_status", "create_schedule"): _fill_free_slot,
    ("find_schedule_status", "update_schedule"): _fill_busy_schedule,
    ("find_schedule_status", "delete_schedule"): _fill_busy_schedule,
    ("find_todo", "delete_todo"): lambda p, a, c: (
        a.setdefault("todo_id", _ids(p)[0]) if _ids(p) else None
    ),
    ("create_todo", "delete_todo"): lambda p, a, c: (
        a.setdefault("todo_id", _ids(p)[0]) if _ids(p) else None
    ),
    ("search_chatmsg", "summary_chatmsg"): lambda p, a, c: a.setdefault("message_ids", _ids(p)),
    ("search_chatmsg", "withdraw_chatmsg"): lambda p, a, c: (
        a.setdefault("message_id", _ids(p)[0]) if _ids(p) else None
    ),
    ("search_group_chat", "summary_chatmsg"): lambda p, a, c: (
        a.setdefault("message_ids", list(_records(p)[0].get("message_ids", [])))
        if _records(p)
        else None
    ),
    ("find_recent_chat_list", "summary_chatmsg"): lambda p, a, c: (
        a.setdefault("message_ids", list(_records(p)[0].get("message_ids", [])))
        if _records(p)
        else None
    ),
    ("summary_chatmsg", "send_chatmsg"): lambda p, a, c: (
        a.setdefault("content", p["text"]) if p.get("text") else None
    ),
    ("search_group_chat", "send_chatmsg"): lambda p, a, c: (
        a.setdefault("chat_id", _ids(p)[0]) if _ids(p) else None
    ),
    ("search_files", "summary_files"): lambda p, a, c: a.setdefault("file_ids", _ids(p)),
}

# memory-slot fallback for required id-shaped params
_SLOT_FALLBACK = {
    "schedule_id": "schedule_id",
    "todo_id": "todo_id",
    "email_ids": "email_ids",
    "message_ids": "message_ids",
    "chat_id": "chat_id",
    "file_ids": "file_ids",
    "person": "person",
}


def extract_args(sub_task: SubTask, clock: datetime) -> dict:
    """Parse explicit arg values out of the clause text."""
    steps = grammar.match_steps(
        sub_task.text, clock, position=2 if sub_task.depends_on else 1
    )
    if steps:
        for step in steps:
            if step.api_name == sub_task.api_name:
                return dict(step.args)
    args: dict = {}
    grammar._apply_phrases(
        sub_task.api_name, grammar.split_segments(grammar.normalize_clause(sub_task.text)),
        args, clock,
    )
    return args


def solve(
    sub_task: SubTask,
    spec: ToolSpec | None,
    context: SolveContext,
    clock: datetime,
) -> SolveOutcome:
    """Produce a validated call for a sub-task, or a clarification request."""
    if sub_task.api_name == "none":
        return SolveOutcome(note="no tool intent")
    if spec is None:
        spec = get_tool(sub_task.api_name)
    if spec.name != sub_task.api_name:
        raise ValueError(f"sub-task targets {sub_task.api_name!r}, spec is {spec.name!r}")

    args = extract_args(sub_task, clock)

    for dep in sub_task.depends_on:
        entry = context.evidence.get(dep)
        if entry is None:
            continue
        prev_api, prev_result = entry
        if not prev_result.ok or prev_result.payload is None:
            continue
        filler = EVIDENCE_FILLERS.get((prev_api, sub_task.api_name))
        if filler is not None:
            filler(prev_result.payload, args, clock)

    if spec.name == "send_email" and "body" in args and "subject" not in args:
        args["subject"] = grammar.default_subject(args["body"])

    for name in spec.required_names:
        if name in args:
            continue
        slot_name = _SLOT_FALLBACK.get(name)
        if slot_name:
            value = context.memory.slot(slot_name)
            if value not in (None, [], ""):
                args[name] = value

    marked = sorted(set(_MISSING_RE.findall(sub_task.text)))
    missing = [n for n in spec.required_names if n not in args]
    if missing or marked:
        return SolveOutcome(missing=tuple(dict.fromkeys(missing + marked)))

    call = ToolCall(api_name=spec.name, args=args)
    report = validate_call(spec, call)
    if not report.ok:
        # parser and fillers only produce schema params; anything left is a
        # value-shape problem, surfaced as clarification rather than a bad call
        bad = tuple(v.param for v in report.violations)
        return SolveOutcome(missing=bad, note="unusable values")
    return SolveOutcome(call=call)


def solve_specified(
    sub_task: SubTask,
    spec: ToolSpec,
    context: SolveContext,
    clock: datetime,
    wanted: list[str],
) -> SolveOutcome:
    """Extract only the requested params; unresolved ones are reported."""
    unknown = [w for w in wanted if w not in spec.param_names]
    if unknown:
        raise ValueError(f"unknown params for {spec.name}: {unknown}")
    full = solve(sub_task, spec, context, clock)
    source = dict(full.call.args) if full.call else {}
    if not full.call:
        # re-extract what we can even when required params are missing
        source = extract_args(sub_task, clock)
        for name in wanted:
            slot_name = _SLOT_FALLBACK.get(name)
            if name not in source and slot_name:
                value = context.memory.slot(slot_name)
                if value not in (None, [], ""):
                    source[name] = value
    picked = {k: v for k, v in source.items() if k in wanted}
    unresolved = tuple(w for w in wanted if w not in picked)
    return SolveOutcome(
        call=ToolCall(api_name=spec.name, args=picked),
        missing=unresolved,
        note="specified-params extraction",
    )


@dataclass(frozen=True)
class RepairOutcome:
    call: Optional[ToolCall] = None  # None means give up

    @property
    def gave_up(self) -> bool:
        return self.call is None


_UNKNOWN_ID_RE = re.compile(r"unknown_(\w+)_id")

_ID_PARAM_BY_KIND = {
    "schedule": "schedule_id",
    "todo": "todo_id",
    "message": "message_id",
    "chat": "chat_id",
    "email": "email_ids",
    "file": "file_ids",
}


def repair(call: ToolCall, error, context: SolveContext) -> RepairOutcome:
    """One corrective attempt keyed on the error code; give-up is a value."""
    code = getattr(error, "code", None) or ""
    if code == "transient_failure":
        return RepairOutcome(call=call)  # retry unchanged

    m = _UNKNOWN_ID_RE.fullmatch(code)
    if m:
        param = _ID_PARAM_BY_KIND.get(m.group(1))
        if param and param in call.args:
            slot_name = _SLOT_FALLBACK.get(param, param)
            fresh = context.memory.slot(slot_name)
            if isinstance(fresh, list) and param.endswith("_id"):
                fresh = fresh[0] if fresh else None
            if fresh not in (None, [], "") and fresh != call.args[param]:
                new_args = dict(call.args)
                new_args[param] = fresh
                return RepairOutcome(call=ToolCall(call.api_name, new_args))
        return RepairOutcome()

    if code == "room_unavailable" and "room_id" in call.args:
        new_args = {k: v for k, v in call.args.items() if k != "room_id"}
        return RepairOutcome(call=ToolCall(call.api_name, new_args))

    return RepairOutcome()
