"""Deterministic in-memory backend for all 21 office tools.

Stores (mailbox, calendar, rooms, chats, todos, cloud files) are seeded from a
named fixture and driven by a settable simulated clock, so every execution is
replayable. Searches filter conjunctively over the provided params and order
results by descending timestamp with ascending-id tiebreak. Summaries are
extractive (first sentence per record plus a count) so exact-match comparisons
against them are stable.

Fault injection covers the error paths: ``fail_once`` / ``fail_always`` return
a transient error, ``unknown_id`` fakes a missing-record error once.
"""

from __future__ import annotations

import copy
import json
import threading
from dataclasses import dataclass, field, fields as dc_fields
from datetime import datetime, timedelta
from importlib import resources
from typing import Any, Optional

from .catalog import get_tool, validate_call
from .timeexpr import DAY_END, DAY_START, iso
from .types import ToolCall, ToolResult, error_result, ok_result

DEFAULT_DURATION = timedelta(hours=1)

FAULT_MODES = ("fail_once", "fail_always", "unknown_id")


class UnknownFixtureError(Exception):
    pass


@dataclass
class SimClock:
    """Settable simulated wall clock; never moves backwards on its own."""

    now: datetime

    def set(self, dt: datetime) -> None:
        self.now = dt

    def advance(self, minutes: int) -> None:
        self.now += timedelta(minutes=minutes)


def _dt(value) -> datetime:
    return value if isinstance(value, datetime) else datetime.fromisoformat(value)


@dataclass
class EmailRecord:
    id: str
    sender: str
    recipients: list[str]
    cc: list[str]
    subject: str
    body: str
    folder: str
    has_attachment: bool
    received_at: datetime
    read: bool


@dataclass
class ScheduleRecord:
    id: str
    title: str
    start_time: datetime
    end_time: datetime
    participants: list[str]
    location: str
    organizer: str
    is_meeting: bool
    room_id: Optional[str] = None


@dataclass
class ChatMessage:
    id: str
    chat_id: str
    sender: str
    content: str
    mentions: list[str]
    sent_at: datetime


@dataclass
class GroupChat:
    id: str
    name: str
    members: list[str]
    created_at: datetime


@dataclass
class TodoItem:
    id: str
    title: str
    status: str  # open | done
    due_time: Optional[datetime]
    created_at: datetime


@dataclass
class CloudFile:
    id: str
    name: str
    file_type: str
    owner: str
    shared_by: str
    folder: str
    tags: list[str]
    content: str
    created_at: datetime
    modified_at: datetime
    size_kb: int


@dataclass
class MeetingRoom:
    id: str
    name: str
    capacity: int
    equipment: list[str]
    location: str


_RECORD_TYPES = {
    "emails": EmailRecord,
    "schedules": ScheduleRecord,
    "messages": ChatMessage,
    "group_chats": GroupChat,
    "todos": TodoItem,
    "files": CloudFile,
    "rooms": MeetingRoom,
}

_DT_FIELDS = {
    "received_at",
    "start_time",
    "end_time",
    "sent_at",
    "created_at",
    "due_time",
    "modified_at",
}


def record_to_dict(rec) -> dict:
    out = {}
    for f in dc_fields(rec):
        val = getattr(rec, f.name)
        if isinstance(val, datetime):
            val = iso(val)
        elif isinstance(val, list):
            val = list(val)
        out[f.name] = val
    return out


def record_from_dict(cls, d: dict):
    kwargs = {}
    for f in dc_fields(cls):
        val = d.get(f.name)
        if f.name in _DT_FIELDS and isinstance(val, str):
            val = datetime.fromisoformat(val)
        kwargs[f.name] = val
    return cls(**kwargs)


def first_sentence(text: str) -> str:
    head, dot, _ = text.partition(".")
    return head.strip() + ("." if dot else "")


def load_fixture(name: str) -> dict:
    """Load a fixture document from package data or a filesystem path."""
    if name.endswith(".json"):
        with open(name) as fh:
            return json.load(fh)
    ref = resources.files("officeagents.data.fixtures").joinpath(f"{name.lower()}.json")
    try:
        return json.loads(ref.read_text())
    except FileNotFoundError:
        raise UnknownFixtureError(f"unknown fixture {name!r}") from None


def _contains(haystack: str, needle: str) -> bool:
    return needle.lower() in haystack.lower()


def _name_eq(a: str, b: str) -> bool:
    return a.lower() == b.lower()


def _overlaps(s1: datetime, e1: datetime, s2: datetime, e2: datetime) -> bool:
    return s1 < e2 and s2 < e1


class OfficeSimulator:
    """All 21 tools over seeded stores. One lock per store keeps concurrent
    executes serializable; the clock is shared and only tests reset it."""

    def __init__(self, fixture: str = "f1", seed: int = 0):
        self.clock = SimClock(now=datetime(2000, 1, 1))
        self._locks = {store: threading.RLock() for store in _RECORD_TYPES}
        self._faults: dict[str, str] = {}
        self.seed(fixture, seed)

    # -- lifecycle -----------------------------------------------------------

    def seed(self, fixture: str, seed: int = 0) -> None:
        doc = load_fixture(fixture)
        self.fixture_name = fixture
        self.seed_value = seed
        self.clock.set(datetime.fromisoformat(doc["epoch"]))
        self.stores: dict[str, dict[str, Any]] = {}
        for store, cls in _RECORD_TYPES.items():
            recs = [record_from_dict(cls, d) for d in doc.get(store, [])]
            ids = [r.id for r in recs]
            if len(set(ids)) != len(ids):
                raise ValueError(f"duplicate ids in fixture store {store}")
            self.stores[store] = {r.id: r for r in recs}
        self._counters = {store: len(recs) for store, recs in self.stores.items()}
        self._faults.clear()

    def snapshot(self) -> dict:
        """Deterministic full-state dump (stores sorted by id) for golden tests."""
        return {
            "fixture": self.fixture_name,
            "clock": iso(self.clock.now),
            "stores": {
                store: [record_to_dict(recs[i]) for i in sorted(recs)]
                for store, recs in sorted(self.stores.items())
            },
        }

    def dump_json(self) -> str:
        return json.dumps(self.snapshot(), indent=2, sort_keys=True)

    def _new_id(self, store: str, prefix: str) -> str:
        self._counters[store] += 1
        return f"{prefix}-{self._counters[store]:04d}"

    # -- fault injection -----------------------------------------------------

    def inject_fault(self, api_name: str, mode: str) -> None:
        get_tool(api_name)
        if mode not in FAULT_MODES:
            raise ValueError(f"unknown fault mode {mode!r}")
        self._faults[api_name] = mode

    def clear_fault(self, api_name: str) -> None:
        self._faults.pop(api_name, None)

    def clear_faults(self) -> None:
        self._faults.clear()

    def _check_fault(self, api_name: str) -> Optional[ToolResult]:
        mode = self._faults.get(api_name)
        if mode is None:
            return None
        if mode == "fail_once":
            del self._faults[api_name]
            return error_result("transient_failure", f"{api_name} failed, try again")
        if mode == "fail_always":
            return error_result("transient_failure", f"{api_name} is unavailable")
        del self._faults[api_name]  # unknown_id fires once
        kind = _ID_KIND.get(api_name, "record")
        return error_result(f"unknown_{kind}_id", f"{api_name}: no such {kind}")

    # -- dispatch ------------------------------------------------------------

    def execute(self, call: ToolCall) -> ToolResult:
        spec = get_tool(call.api_name)
        report = validate_call(spec, call)
        if not report.ok:
            return error_result("invalid_call", "; ".join(
                f"{v.kind}:{v.param}" for v in report.violations
            ))
        fault = self._check_fault(call.api_name)
        if fault is not None:
            return fault
        handler = getattr(self, f"_op_{call.api_name}")
        store = _API_STORE[call.api_name]
        with self._locks[store]:
            return handler(dict(call.args))

    # -- email ----------------------------------------------------------------

    def _op_search_email(self, args: dict) -> ToolResult:
        def keep(e: EmailRecord) -> bool:
            if "sender" in args and not _name_eq(e.sender, args["sender"]):
                return False
            if "recipient" in args and not any(
                _name_eq(r, args["recipient"]) for r in e.recipients
            ):
                return False
            if "cc" in args and not any(_name_eq(c, args["cc"]) for c in e.cc):
                return False
            if "subject_keywords" in args and not _contains(e.subject, args["subject_keywords"]):
                return False
            if "body_keywords" in args and not _contains(e.body, args["body_keywords"]):
                return False
            if "folder" in args and e.folder != args["folder"]:
                return False
            if "has_attachment" in args and e.has_attachment != args["has_attachment"]:
                return False
            if "start_time" in args and e.received_at < _dt(args["start_time"]):
                return False
            if "end_time" in args and e.received_at > _dt(args["end_time"]):
                return False
            if "read_status" in args and e.read != (args["read_status"] == "read"):
                return False
            return True

        hits = sorted(
            (e for e in self.stores["emails"].values() if keep(e)),
            key=lambda e: (-e.received_at.timestamp(), e.id),
        )
        if "limit" in args:
            hits = hits[: max(args["limit"], 0)]
        return ok_result("emails", records=[record_to_dict(e) for e in hits])

    def _op_send_email(self, args: dict) -> ToolResult:
        rec = EmailRecord(
            id=self._new_id("emails", "em"),
            sender="me",
            recipients=list(args["to"]),
            cc=list(args.get("cc", [])),
            subject=args["subject"],
            body=args["body"],
            folder="sent",
            has_attachment=bool(args.get("attachments")),
            received_at=self.clock.now,
            read=True,
        )
        self.stores["emails"][rec.id] = rec
        return ok_result("email_sent", records=[record_to_dict(rec)])

    def _op_summary_email(self, args: dict) -> ToolResult:
        emails = []
        for eid in args["email_ids"]:
            rec = self.stores["emails"].get(eid)
            if rec is None:
                return error_result("unknown_email_id", f"no such email {eid}")
            emails.append(rec)
        parts = [f"{len(emails)} emails."]
        for i, e in enumerate(emails, 1):
            parts.append(f"{i}. {e.subject}: {first_sentence(e.body)}")
        if "focus" in args:
            parts.append(f"Focus: {args['focus']}.")
        return ok_result("summary", text=" ".join(parts))

    # -- schedule ---------------------------------------------------------------

    def _create_schedule(self, args: dict, is_meeting: bool, room_id: Optional[str]) -> ToolResult:
        start = _dt(args["start_time"])
        end = _dt(args["end_time"]) if "end_time" in args else start + DEFAULT_DURATION
        if end <= start:
            return error_result("invalid_time_range", "end_time must be after start_time")
        if room_id is not None:
            if room_id not in self.stores["rooms"]:
                return error_result("unknown_room_id", f"no such room {room_id}")
            for other in self.stores["schedules"].values():
                if other.room_id == room_id and _overlaps(
                    start, end, other.start_time, other.end_time
                ):
                    return error_result("room_unavailable", f"{room_id} is booked")
        participants = list(args.get("participants", []))
        rec = ScheduleRecord(
            id=self._new_id("schedules", "sch"),
            title=args["title"],
            start_time=start,
            end_time=end,
            participants=participants,
            location=args.get("location", ""),
            organizer="me",
            is_meeting=is_meeting or bool(participants),
            room_id=room_id,
        )
        self.stores["schedules"][rec.id] = rec
        return ok_result("schedule", records=[record_to_dict(rec)])

    def _op_create_schedule(self, args: dict) -> ToolResult:
        return self._create_schedule(args, is_meeting=False, room_id=None)

    def _op_create_meeting(self, args: dict) -> ToolResult:
        sched_args = {k: v for k, v in args.items() if k != "room_id"}
        return self._create_schedule(sched_args, is_meeting=True, room_id=args.get("room_id"))

    def _op_update_schedule(self, args: dict) -> ToolResult:
        rec = self.stores["schedules"].get(args["schedule_id"])
        if rec is None:
            return error_result("unknown_schedule_id", f"no such schedule {args['schedule_id']}")
        updated = copy.deepcopy(rec)
        if "title" in args:
            updated.title = args["title"]
        if "start_time" in args:
            updated.start_time = _dt(args["start_time"])
            if "end_time" not in args and updated.end_time <= updated.start_time:
                updated.end_time = updated.start_time + DEFAULT_DURATION
        if "end_time" in args:
            updated.end_time = _dt(args["end_time"])
        if "participants" in args:
            updated.participants = list(args["participants"])
            updated.is_meeting = updated.is_meeting or bool(updated.participants)
        if "location" in args:
            updated.location = args["location"]
        if updated.end_time <= updated.start_time:
            return error_result("invalid_time_range", "end_time must be after start_time")
        self.stores["schedules"][updated.id] = updated
        return ok_result("schedule", records=[record_to_dict(updated)])

    def _op_find_schedule_status(self, args: dict) -> ToolResult:
        person = args["person"]
        day = self.clock.now.date()
        start = _dt(args["start_time"]) if "start_time" in args else datetime.combine(day, DAY_START)
        end = _dt(args["end_time"]) if "end_time" in args else datetime.combine(start.date(), DAY_END)

        def involves(s: ScheduleRecord) -> bool:
            return _name_eq(s.organizer, person) or any(
                _name_eq(p, person) for p in s.participants
            )

        busy = sorted(
            (
                s
                for s in self.stores["schedules"].values()
                if involves(s) and _overlaps(s.start_time, s.end_time, start, end)
            ),
            key=lambda s: (s.start_time, s.id),
        )
        free = []
        cursor = start
        for s in busy:
            if s.start_time > cursor:
                free.append({"start": iso(cursor), "end": iso(min(s.start_time, end))})
            cursor = max(cursor, s.end_time)
        if cursor < end:
            free.append({"start": iso(cursor), "end": iso(end)})
        return ok_result(
            "schedule_status",
            person=person,
            window={"start": iso(start), "end": iso(end)},
            free=free,
            busy=[record_to_dict(s) for s in busy],
        )

    def _op_delete_schedule(self, args: dict) -> ToolResult:
        rec = self.stores["schedules"].pop(args["schedule_id"], None)
        if rec is None:
            return error_result("unknown_schedule_id", f"no such schedule {args['schedule_id']}")
        return ok_result("deleted", records=[record_to_dict(rec)])

    # -- meeting ------------------------------------------------------------

    def _op_find_meetings(self, args: dict) -> ToolResult:
        def keep(s: ScheduleRecord) -> bool:
            if not s.is_meeting:
                return False
            if "start_time" in args and s.start_time < _dt(args["start_time"]):
                return False
            if "end_time" in args and s.start_time > _dt(args["end_time"]):
                return False
            return True

        hits = sorted(
            (s for s in self.stores["schedules"].values() if keep(s)),
            key=lambda s: (-s.start_time.timestamp(), s.id),
        )
        return ok_result("schedules", records=[record_to_dict(s) for s in hits])

    def _op_find_meeting_room(self, args: dict) -> ToolResult:
        def keep(r: MeetingRoom) -> bool:
            if "capacity" in args and r.capacity < args["capacity"]:
                return False
            if "equipment" in args and not set(e.lower() for e in args["equipment"]) <= set(
                e.lower() for e in r.equipment
            ):
                return False
            if "location" in args and not _contains(r.location, args["location"]):
                return False
            if "start_time" in args and "end_time" in args:
                want_s, want_e = _dt(args["start_time"]), _dt(args["end_time"])
                for s in self.stores["schedules"].values():
                    if s.room_id == r.id and _overlaps(s.start_time, s.end_time, want_s, want_e):
                        return False
            return True

        hits = sorted(
            (r for r in self.stores["rooms"].values() if keep(r)), key=lambda r: r.id
        )
        return ok_result("rooms", records=[record_to_dict(r) for r in hits])

    # -- chat -----------------------------------------------------------------

    def _op_search_chatmsg(self, args: dict) -> ToolResult:
        def keep(m: ChatMessage) -> bool:
            if "chat_id" in args and m.chat_id != args["chat_id"]:
                return False
            if "sender" in args and not _name_eq(m.sender, args["sender"]):
                return False
            if "keywords" in args and not _contains(m.content, args["keywords"]):
                return False
            if "start_time" in args and m.sent_at < _dt(args["start_time"]):
                return False
            if "end_time" in args and m.sent_at > _dt(args["end_time"]):
                return False
            if "mentions" in args and not any(_name_eq(p, args["mentions"]) for p in m.mentions):
                return False
            return True

        hits = sorted(
            (m for m in self.stores["messages"].values() if keep(m)),
            key=lambda m: (-m.sent_at.timestamp(), m.id),
        )
        if "limit" in args:
            hits = hits[: max(args["limit"], 0)]
        return ok_result("messages", records=[record_to_dict(m) for m in hits])

    def _op_send_chatmsg(self, args: dict) -> ToolResult:
        if args["chat_id"] not in self.stores["group_chats"]:
            return error_result("unknown_chat_id", f"no such chat {args['chat_id']}")
        rec = ChatMessage(
            id=self._new_id("messages", "msg"),
            chat_id=args["chat_id"],
            sender="me",
            content=args["content"],
            mentions=list(args.get("mentions", [])),
            sent_at=self.clock.now,
        )
        self.stores["messages"][rec.id] = rec
        return ok_result("message_sent", records=[record_to_dict(rec)])

    def _op_withdraw_chatmsg(self, args: dict) -> ToolResult:
        rec = self.stores["messages"].get(args["message_id"])
        if rec is None:
            return error_result("unknown_message_id", f"no such message {args['message_id']}")
        if "chat_id" in args and rec.chat_id != args["chat_id"]:
            return error_result(
                "unknown_message_id", f"{args['message_id']} is not in {args['chat_id']}"
            )
        del self.stores["messages"][rec.id]
        return ok_result("deleted", records=[record_to_dict(rec)])

    def _op_summary_chatmsg(self, args: dict) -> ToolResult:
        msgs = []
        for mid in args["message_ids"]:
            rec = self.stores["messages"].get(mid)
            if rec is None:
                return error_result("unknown_message_id", f"no such message {mid}")
            msgs.append(rec)
        parts = [f"{len(msgs)} messages."]
        for i, m in enumerate(msgs, 1):
            parts.append(f"{i}. {m.sender}: {first_sentence(m.content)}")
        return ok_result("summary", text=" ".join(parts))

    def _chat_record(self, chat: GroupChat) -> dict:
        msgs = sorted(
            (m for m in self.stores["messages"].values() if m.chat_id == chat.id),
            key=lambda m: (-m.sent_at.timestamp(), m.id),
        )
        rec = record_to_dict(chat)
        rec["message_ids"] = [m.id for m in msgs]
        rec["last_activity"] = iso(msgs[0].sent_at) if msgs else iso(chat.created_at)
        return rec

    def _op_search_group_chat(self, args: dict) -> ToolResult:
        hits = sorted(
            (c for c in self.stores["group_chats"].values() if _contains(c.name, args["keywords"])),
            key=lambda c: c.id,
        )
        return ok_result("group_chats", records=[self._chat_record(c) for c in hits])

    def _op_find_recent_chat_list(self, args: dict) -> ToolResult:
        records = [self._chat_record(c) for c in self.stores["group_chats"].values()]
        if "start_time" in args:
            records = [r for r in records if _dt(r["last_activity"]) >= _dt(args["start_time"])]
        if "end_time" in args:
            records = [r for r in records if _dt(r["last_activity"]) <= _dt(args["end_time"])]
        records.sort(key=lambda r: (-_dt(r["last_activity"]).timestamp(), r["id"]))
        return ok_result("chats", records=records)

    # -- todo -----------------------------------------------------------------

    def _op_create_todo(self, args: dict) -> ToolResult:
        rec = TodoItem(
            id=self._new_id("todos", "td"),
            title=args["title"],
            status="open",
            due_time=_dt(args["due_time"]) if "due_time" in args else None,
            created_at=self.clock.now,
        )
        self.stores["todos"][rec.id] = rec
        return ok_result("todo", records=[record_to_dict(rec)])

    def _op_find_todo(self, args: dict) -> ToolResult:
        def keep(t: TodoItem) -> bool:
            if "keywords" in args and not _contains(t.title, args["keywords"]):
                return False
            if "status" in args and t.status != args["status"]:
                return False
            if "due_before" in args and (
                t.due_time is None or t.due_time > _dt(args["due_before"])
            ):
                return False
            return True

        hits = sorted(
            (t for t in self.stores["todos"].values() if keep(t)),
            key=lambda t: (-t.created_at.timestamp(), t.id),
        )
        return ok_result("todos", records=[record_to_dict(t) for t in hits])

    def _op_delete_todo(self, args: dict) -> ToolResult:
        rec = self.stores["todos"].pop(args["todo_id"], None)
        if rec is None:
            return error_result("unknown_todo_id", f"no such todo {args['todo_id']}")
        return ok_result("deleted", records=[record_to_dict(rec)])

    # -- cloud files -----------------------------------------------------------

    def _op_search_files(self, args: dict) -> ToolResult:
        def keep(f: CloudFile) -> bool:
            if "name_keywords" in args and not _contains(f.name, args["name_keywords"]):
                return False
            if "content_keywords" in args and not _contains(f.content, args["content_keywords"]):
                return False
            if "file_type" in args and f.file_type != args["file_type"]:
                return False
            if "owner" in args and not _name_eq(f.owner, args["owner"]):
                return False
            if "shared_by" in args and not _name_eq(f.shared_by, args["shared_by"]):
                return False
            if "folder" in args and not _contains(f.folder, args["folder"]):
                return False
            if "tags" in args and not set(t.lower() for t in args["tags"]) <= set(
                t.lower() for t in f.tags
            ):
                return False
            if "created_start" in args and f.created_at < _dt(args["created_start"]):
                return False
            if "created_end" in args and f.created_at > _dt(args["created_end"]):
                return False
            if "modified_start" in args and f.modified_at < _dt(args["modified_start"]):
                return False
            if "modified_end" in args and f.modified_at > _dt(args["modified_end"]):
                return False
            if "min_size" in args and f.size_kb < args["min_size"]:
                return False
            return True

        hits = sorted(
            (f for f in self.stores["files"].values() if keep(f)),
            key=lambda f: (-f.modified_at.timestamp(), f.id),
        )
        if "limit" in args:
            hits = hits[: max(args["limit"], 0)]
        return ok_result("files", records=[record_to_dict(f) for f in hits])

    def _op_summary_files(self, args: dict) -> ToolResult:
        docs = []
        for fid in args["file_ids"]:
            rec = self.stores["files"].get(fid)
            if rec is None:
                return error_result("unknown_file_id", f"no such file {fid}")
            docs.append(rec)
        parts = [f"{len(docs)} files."]
        for i, f in enumerate(docs, 1):
            parts.append(f"{i}. {f.name}: {first_sentence(f.content)}")
        return ok_result("summary", text=" ".join(parts))


_API_STORE = {
    "search_email": "emails",
    "send_email": "emails",
    "summary_email": "emails",
    "create_schedule": "schedules",
    "update_schedule": "schedules",
    "find_schedule_status": "schedules",
    "delete_schedule": "schedules",
    "create_meeting": "schedules",
    "find_meetings": "schedules",
    "find_meeting_room": "rooms",
    "search_chatmsg": "messages",
    "send_chatmsg": "messages",
    "withdraw_chatmsg": "messages",
    "summary_chatmsg": "messages",
    "search_group_chat": "group_chats",
    "find_recent_chat_list": "group_chats",
    "create_todo": "todos",
    "find_todo": "todos",
    "delete_todo": "todos",
    "search_files": "files",
    "summary_files": "files",
}

_ID_KIND = {
    "search_email": "email",
    "summary_email": "email",
    "update_schedule": "schedule",
    "delete_schedule": "schedule",
    "find_schedule_status": "schedule",
    "withdraw_chatmsg": "message",
    "summary_chatmsg": "message",
    "send_chatmsg": "chat",
    "delete_todo": "todo",
    "summary_files": "file",
    "create_meeting": "room",
}
