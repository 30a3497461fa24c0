"""Shared domain types: tool calls and results, plans, dialogue turns, session state.

Everything here is a plain value object with a JSON wire form (``to_dict`` /
``from_dict``). Mutation happens only in the orchestrator, which owns sessions.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Optional

DEFAULT_MEMORY_WINDOW = 10


@dataclass(frozen=True)
class ToolCall:
    """An API invocation: name plus a param-name -> value mapping."""

    api_name: str
    args: dict[str, Any]

    def to_dict(self) -> dict:
        return {"api_name": self.api_name, "args": copy.deepcopy(self.args)}

    @classmethod
    def from_dict(cls, d: dict) -> "ToolCall":
        return cls(api_name=d["api_name"], args=dict(d.get("args", {})))


@dataclass(frozen=True)
class ToolError:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict) -> "ToolError":
        return cls(code=d["code"], message=d["message"])


@dataclass(frozen=True)
class ToolResult:
    """Simulator response. ``payload`` is present iff ok, ``error`` iff not."""

    status: str  # "ok" | "error"
    payload: Optional[dict] = None
    error: Optional[ToolError] = None

    def __post_init__(self):
        if self.status == "ok" and (self.payload is None or self.error is not None):
            raise ValueError("ok result must carry a payload and no error")
        if self.status == "error" and (self.error is None or self.payload is not None):
            raise ValueError("error result must carry an error and no payload")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        d: dict = {"status": self.status}
        if self.payload is not None:
            d["payload"] = copy.deepcopy(self.payload)
        if self.error is not None:
            d["error"] = self.error.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ToolResult":
        err = ToolError.from_dict(d["error"]) if d.get("error") else None
        return cls(status=d["status"], payload=d.get("payload"), error=err)


def ok_result(kind: str, **fields) -> ToolResult:
    payload = {"kind": kind}
    payload.update(fields)
    return ToolResult(status="ok", payload=payload)


def error_result(code: str, message: str) -> ToolResult:
    return ToolResult(status="error", error=ToolError(code=code, message=message))


@dataclass(frozen=True)
class SubTask:
    """One planned clause: its text, the assigned API (or "none"), and evidence wiring."""

    index: int  # 1-based
    text: str
    api_name: str  # catalog name or "none"
    evidence_id: str = ""  # "#E<index>"
    depends_on: tuple[str, ...] = ()

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("sub-task index must be >= 1")
        eid = self.evidence_id or f"#E{self.index}"
        object.__setattr__(self, "evidence_id", eid)
        for dep in self.depends_on:
            if not dep.startswith("#E") or int(dep[2:]) >= self.index:
                raise ValueError(f"dependency {dep} must reference a lower index")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "text": self.text,
            "api_name": self.api_name,
            "evidence_id": self.evidence_id,
            "depends_on": list(self.depends_on),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubTask":
        return cls(
            index=d["index"],
            text=d["text"],
            api_name=d["api_name"],
            evidence_id=d.get("evidence_id", ""),
            depends_on=tuple(d.get("depends_on", ())),
        )


@dataclass(frozen=True)
class Plan:
    """Ordered sub-tasks with consecutive evidence ids #E1..#Ek."""

    sub_tasks: tuple[SubTask, ...]

    def __post_init__(self):
        for pos, st in enumerate(self.sub_tasks, start=1):
            if st.index != pos or st.evidence_id != f"#E{pos}":
                raise ValueError("evidence ids must run #E1..#Ek consecutively")

    def api_names(self) -> list[str]:
        return [st.api_name for st in self.sub_tasks]

    def to_dict(self) -> dict:
        return {"sub_tasks": [st.to_dict() for st in self.sub_tasks]}

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        return cls(sub_tasks=tuple(SubTask.from_dict(s) for s in d["sub_tasks"]))


@dataclass(frozen=True)
class DialogueTurn:
    """A completed turn: raw and rewritten query, plan, executed calls, reply."""

    user_query: str
    related: bool
    rewritten_query: str
    intent: str
    plan: Optional[Plan]
    calls: tuple[tuple[ToolCall, ToolResult], ...]
    reply: str
    timestamp: str  # simulator clock, ISO-8601

    def __post_init__(self):
        if not self.related and self.rewritten_query != self.user_query:
            raise ValueError("unrelated turns must keep the query unchanged")

    def to_dict(self) -> dict:
        return {
            "user_query": self.user_query,
            "related": self.related,
            "rewritten_query": self.rewritten_query,
            "intent": self.intent,
            "plan": self.plan.to_dict() if self.plan else None,
            "calls": [[c.to_dict(), r.to_dict()] for c, r in self.calls],
            "reply": self.reply,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueTurn":
        return cls(
            user_query=d["user_query"],
            related=d["related"],
            rewritten_query=d["rewritten_query"],
            intent=d["intent"],
            plan=Plan.from_dict(d["plan"]) if d.get("plan") else None,
            calls=tuple(
                (ToolCall.from_dict(c), ToolResult.from_dict(r)) for c, r in d.get("calls", [])
            ),
            reply=d["reply"],
            timestamp=d["timestamp"],
        )


@dataclass
class SessionMemory:
    """Entity slots plus the last executed call and a bounded turn window."""

    entity_slots: dict[str, Any] = field(default_factory=dict)
    last_call: Optional[tuple[ToolCall, ToolResult]] = None
    turn_window: list[DialogueTurn] = field(default_factory=list)
    window_size: int = DEFAULT_MEMORY_WINDOW

    def is_empty(self) -> bool:
        return not self.entity_slots and self.last_call is None and not self.turn_window

    def slot(self, name: str, default=None):
        return self.entity_slots.get(name, default)

    def to_dict(self) -> dict:
        return {
            "entity_slots": copy.deepcopy(self.entity_slots),
            "last_call": [self.last_call[0].to_dict(), self.last_call[1].to_dict()]
            if self.last_call
            else None,
            "turn_window": [t.to_dict() for t in self.turn_window],
            "window_size": self.window_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionMemory":
        lc = d.get("last_call")
        return cls(
            entity_slots=dict(d.get("entity_slots", {})),
            last_call=(ToolCall.from_dict(lc[0]), ToolResult.from_dict(lc[1])) if lc else None,
            turn_window=[DialogueTurn.from_dict(t) for t in d.get("turn_window", [])],
            window_size=d.get("window_size", DEFAULT_MEMORY_WINDOW),
        )


@dataclass
class Session:
    id: str
    turns: list[DialogueTurn] = field(default_factory=list)
    memory: SessionMemory = field(default_factory=SessionMemory)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "turns": [t.to_dict() for t in self.turns],
            "memory": self.memory.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        return cls(
            id=d["id"],
            turns=[DialogueTurn.from_dict(t) for t in d.get("turns", [])],
            memory=SessionMemory.from_dict(d.get("memory", {})),
        )


# Slot extraction is shared between the orchestrator's memory update and the
# data generator's gold computation, so both see identical session state.

_LIST_SLOT_KINDS = {
    "emails": "email_ids",
    "messages": "message_ids",
    "todos": "todo_ids",
    "files": "file_ids",
}


def slots_from_result(call: ToolCall, result: ToolResult) -> dict[str, Any]:
    """Derive entity slots contributed by one ok (call, result) pair."""
    if not result.ok or result.payload is None:
        return {}
    payload = result.payload
    kind = payload.get("kind")
    records = payload.get("records", [])
    slots: dict[str, Any] = {}

    if kind in _LIST_SLOT_KINDS:
        slots[_LIST_SLOT_KINDS[kind]] = [r["id"] for r in records]
        if kind == "todos" and records:
            slots["todo_id"] = records[0]["id"]
    elif kind in ("schedule", "schedules"):
        if records:
            slots["schedule_id"] = records[0]["id"]
    elif kind == "schedule_status":
        slots["person"] = payload.get("person")
        slots["free_slots"] = copy.deepcopy(payload.get("free", []))
        slots["busy_ids"] = [r["id"] for r in payload.get("busy", [])]
        if slots["busy_ids"]:
            slots["schedule_id"] = slots["busy_ids"][0]
    elif kind in ("group_chats", "chats"):
        if records:
            slots["chat_id"] = records[0]["id"]
            slots["message_ids"] = list(records[0].get("message_ids", []))
    elif kind == "summary":
        slots["summary"] = payload.get("text", "")
    elif kind == "message_sent" and records:
        slots["message_ids"] = [records[0]["id"]]
    elif kind == "todo" and records:
        slots["todo_id"] = records[0]["id"]
        slots["todo_ids"] = [records[0]["id"]]
    elif kind == "deleted" and records:
        slots["deleted_id"] = records[0]["id"]

    # person-valued args mentioned in the call win the "last person" slot
    for key in ("person", "sender", "recipient", "organizer"):
        if isinstance(call.args.get(key), str):
            slots["person"] = call.args[key]
    for key in ("to", "participants", "mentions"):
        val = call.args.get(key)
        if isinstance(val, list) and val and isinstance(val[0], str):
            slots["person"] = val[0]
    return slots


def update_memory(memory: SessionMemory, turn: DialogueTurn) -> SessionMemory:
    """Fold a completed turn into memory: merge slots, set last_call, trim window."""
    slots = dict(memory.entity_slots)
    last_call = memory.last_call
    for call, result in turn.calls:
        slots.update(slots_from_result(call, result))
        last_call = (call, result)
        if result.ok and result.payload and result.payload.get("kind") == "deleted":
            deleted = slots.get("deleted_id")
            if slots.get("schedule_id") == deleted:
                slots.pop("schedule_id", None)
            if slots.get("todo_id") == deleted:
                slots.pop("todo_id", None)
    window = (memory.turn_window + [turn])[-memory.window_size :]
    return SessionMemory(
        entity_slots=slots,
        last_call=last_call,
        turn_window=window,
        window_size=memory.window_size,
    )
