"""Multi-turn dialogue sample generation: Flow -> Task -> Role -> Agent.

A Flow is an ordered list of Tasks; a Task targets either one API or one tool
transition; Roles (user / assistant / simulator) carry the participating
personas; an Agent binds a generation strategy to a Role. The reference
agents are template-grammar strategies, so at noise level 0 the rule pipeline
reproduces every gold field exactly (the closed-loop property). The noise
level injects colloquial perturbations (unknown verb synonyms, trailing
filler clauses, pronoun swaps, dropped phrases) into the user text only.

Determinism: every sample draws from an RNG derived from (seed, sample
index), and runs against a fresh fixture-seeded simulator, so generation is
order-independent and replayable.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Optional

from . import grammar, timeexpr, transitions
from .catalog import catalog, get_tool, validate_call
from .sim import OfficeSimulator
from .types import (
    DialogueTurn,
    Plan,
    SessionMemory,
    SubTask,
    ToolCall,
    ToolResult,
    update_memory,
)

DEFAULT_FIXTURE = "f1"

# pools drawn on by the user-role agent; values never contain double quotes
# or coordination markers, so rendered clauses stay parseable
TITLES = ["project discussion", "budget sync", "planning session", "client call", "design huddle"]
SUBJECTS = ["Meeting notes", "Follow up", "Quick question", "Status update"]
BODIES = [
    "The latest numbers are ready for review.",
    "Please take a look before Friday.",
    "Sharing the final agenda now.",
    "The draft is ready for comments.",
]
LOCATIONS = ["room Aurora", "room Borealis", "the main office", "the east wing"]
FOCUSES = ["deadlines", "action items", "decisions"]
CHAT_TEXTS = ["The report is ready.", "Meeting moved to next week.", "Great work on the launch."]
CHITCHAT = ["hello there", "good morning", "have a nice day", "ok great", "how are you doing"]

UNKNOWN_VERBS = {
    "search": "dig up",
    "find": "hunt down",
    "look": "scope out",
    "create": "arrange",
    "add": "jot down",
    "summarize": "recap",
    "send": "shoot over",
    "update": "rework",
    "delete": "scrap",
    "cancel": "scratch",
    "check": "see about",
    "list": "pull up",
    "withdraw": "yank",
    "forward": "bounce",
    "move": "shift",
    "remove": "scratch",
    "book": "pencil in",
}


@dataclass(frozen=True)
class Role:
    name: str  # user | assistant | simulator
    persona: str = ""


@dataclass(frozen=True)
class Agent:
    name: str
    role: Role
    strategy: str = "template"  # template | endpoint


@dataclass(frozen=True)
class Task:
    name: str
    kind: str  # single_intent | multi_intent | multi_turn | chitchat
    scenario: str = ""
    api: str = ""  # single_intent target
    prev_api: str = ""  # transition target
    cur_api: str = ""

    def __post_init__(self):
        if self.kind not in ("single_intent", "multi_intent", "multi_turn", "chitchat"):
            raise ValueError(f"unknown task kind {self.kind!r}")


@dataclass(frozen=True)
class Flow:
    name: str
    tasks: tuple[Task, ...]
    roles: tuple[Role, ...] = (
        Role("user", "office worker"),
        Role("assistant", "office copilot"),
        Role("simulator", "office backend"),
    )
    agents: tuple[Agent, ...] = ()

    def __post_init__(self):
        if not self.tasks:
            raise ValueError(f"flow {self.name!r} has no tasks")
        agents = self.agents or tuple(
            Agent(f"{role.name}-agent", role) for role in self.roles
        )
        object.__setattr__(self, "agents", agents)
        role_names = {r.name for r in self.roles}
        for agent in agents:
            if agent.role.name not in role_names:
                raise ValueError(f"agent {agent.name} bound to unknown role")


class UnsatisfiableTask(Exception):
    def __init__(self, task: Task, why: str):
        super().__init__(f"task {task.name!r}: {why}")
        self.task = task


@dataclass
class SampleTurn:
    user_text: str
    gold_related: bool
    gold_rewritten: str
    gold_plan: Optional[Plan]
    gold_calls: list[ToolCall]
    sim_results: list[ToolResult]

    def to_dict(self) -> dict:
        return {
            "user_text": self.user_text,
            "gold_related": self.gold_related,
            "gold_rewritten": self.gold_rewritten,
            "gold_plan": self.gold_plan.to_dict() if self.gold_plan else None,
            "gold_calls": [c.to_dict() for c in self.gold_calls],
            "sim_results": [r.to_dict() for r in self.sim_results],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleTurn":
        return cls(
            user_text=d["user_text"],
            gold_related=d["gold_related"],
            gold_rewritten=d["gold_rewritten"],
            gold_plan=Plan.from_dict(d["gold_plan"]) if d.get("gold_plan") else None,
            gold_calls=[ToolCall.from_dict(c) for c in d.get("gold_calls", [])],
            sim_results=[ToolResult.from_dict(r) for r in d.get("sim_results", [])],
        )


@dataclass
class DialogueSample:
    sample_id: int
    scenario: str
    kind: str
    transition_path: list[str]
    combo_index: int
    seed: int
    fixture: str
    noise: float
    turns: list[SampleTurn] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "scenario": self.scenario,
            "kind": self.kind,
            "transition_path": list(self.transition_path),
            "combo_index": self.combo_index,
            "seed": self.seed,
            "fixture": self.fixture,
            "noise": self.noise,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueSample":
        return cls(
            sample_id=d["sample_id"],
            scenario=d["scenario"],
            kind=d["kind"],
            transition_path=list(d.get("transition_path", [])),
            combo_index=d.get("combo_index", 0),
            seed=d["seed"],
            fixture=d.get("fixture", DEFAULT_FIXTURE),
            noise=d.get("noise", 0.0),
            turns=[SampleTurn.from_dict(t) for t in d.get("turns", [])],
        )


# --- value derivation against the fixture -------------------------------------


def _kw(rng: random.Random, text: str) -> str:
    words = [w for w in re.findall(r"[A-Za-z]{5,}", text)]
    return rng.choice(words).lower() if words else text.split()[0].lower()


def _iso(dt: datetime) -> str:
    return timeexpr.iso(dt)


class ValuePool:
    """Derives call args from fixture records so searches always hit."""

    def __init__(self, sim: OfficeSimulator, rng: random.Random):
        self.sim = sim
        self.rng = rng

    def _pick(self, store: str, want: Callable | None = None):
        items = sorted(self.sim.stores[store].values(), key=lambda r: r.id)
        if want is not None:
            items = [r for r in items if want(r)]
        if not items:
            return None
        return self.rng.choice(items)

    def args_for(self, api: str, subset: tuple[str, ...], force: tuple[str, ...] = ()) -> dict:
        subset = tuple(subset)
        spec = get_tool(api)
        wanted = list(dict.fromkeys(list(subset) + spec.required_names + list(force)))
        if api == "create_meeting":
            wanted.append("room_id")  # the room phrase is what marks a meeting clause
        fn = getattr(self, f"_args_{api}", None)
        if fn is None:
            raise UnsatisfiableTask(
                Task(name=api, kind="single_intent", api=api), "no value builder"
            )
        args = fn(wanted)
        return {
            k: v
            for k, v in args.items()
            if (k in wanted or k.startswith("__")) and v is not None
        }

    # email
    def _args_search_email(self, wanted):
        need_cc = "cc" in wanted
        target = self._pick("emails", (lambda e: e.cc) if need_cc else None)
        if target is None:
            target = self._pick("emails")
        return {
            "sender": target.sender,
            "recipient": target.recipients[0] if target.recipients else None,
            "cc": target.cc[0] if target.cc else None,
            "subject_keywords": _kw(self.rng, target.subject),
            "body_keywords": _kw(self.rng, target.body),
            "folder": target.folder,
            "has_attachment": target.has_attachment,
            "start_time": _iso(target.received_at),
            "end_time": _iso(target.received_at),
            "read_status": "read" if target.read else "unread",
            "limit": self.rng.randint(1, 3),
        }

    def _args_send_email(self, wanted):
        persons = self._persons()
        return {
            "to": [self.rng.choice(persons)],
            "cc": [self.rng.choice(persons)] if "cc" in wanted else None,
            "subject": self.rng.choice(SUBJECTS),
            "body": self.rng.choice(BODIES),
            "attachments": None,  # only meaningful with evidence
        }

    def _args_summary_email(self, wanted):
        emails = sorted(self.sim.stores["emails"], key=str)
        k = min(len(emails), self.rng.randint(1, 3))
        return {
            "email_ids": sorted(self.rng.sample(emails, k)),
            "focus": self.rng.choice(FOCUSES),
        }

    # schedule
    def _future_start(self, max_days: int = 6) -> datetime:
        day = self.sim.clock.now.date() + timedelta(days=self.rng.randint(2, max_days))
        hour = self.rng.randint(9, 16)
        minute = self.rng.choice([0, 30])
        return datetime.combine(day, datetime.min.time()) + timedelta(
            hours=hour, minutes=minute
        )

    def _persons(self) -> list[str]:
        return [
            "Jiashu Xia", "Dana Li", "Marcus Webb", "Priya Nair", "Tom Aldren", "Yuki Tanaka"
        ]

    def _args_create_schedule(self, wanted):
        start = self._future_start()
        return {
            "title": self.rng.choice(TITLES),
            "start_time": _iso(start),
            "end_time": _iso(start + timedelta(minutes=self.rng.choice([30, 60, 90]))),
            "participants": [self.rng.choice(self._persons())],
            "location": self.rng.choice(LOCATIONS),
        }

    def _args_update_schedule(self, wanted):
        target = self._pick("schedules")
        if "start_time" in wanted:
            new_start = target.start_time + timedelta(minutes=self.rng.choice([-60, 30, 60]))
            new_end = new_start + timedelta(hours=1)
        else:
            # end_time alone must stay after the record's existing start
            new_start = target.start_time
            new_end = target.start_time + timedelta(minutes=self.rng.choice([30, 60, 90]))
        return {
            "schedule_id": target.id,
            "title": self.rng.choice(TITLES),
            "start_time": _iso(new_start),
            "end_time": _iso(new_end),
            "participants": [self.rng.choice(self._persons())],
            "location": self.rng.choice(LOCATIONS),
            "remind_before": self.rng.choice([5, 10, 15, 30]),
        }

    def _args_find_schedule_status(self, wanted):
        target = self._pick("schedules", lambda s: s.participants or s.organizer != "me")
        person = target.organizer if target.organizer != "me" else target.participants[0]
        day = target.start_time.date()
        return {
            "person": person,
            "start_time": _iso(datetime.combine(day, timeexpr.DAY_START)),
            "end_time": _iso(datetime.combine(day, timeexpr.DAY_END)),
        }

    def _args_delete_schedule(self, wanted):
        return {"schedule_id": self._pick("schedules").id}

    # meeting
    def _args_create_meeting(self, wanted):
        start = self._future_start()
        return {
            "title": self.rng.choice(TITLES),
            "start_time": _iso(start),
            "end_time": _iso(start + timedelta(hours=1)),
            "participants": [self.rng.choice(self._persons())],
            "room_id": self._pick("rooms").id,
        }

    def _args_find_meetings(self, wanted):
        target = self._pick("schedules", lambda s: s.is_meeting)
        return {"start_time": _iso(target.start_time), "end_time": _iso(target.start_time)}

    def _args_find_meeting_room(self, wanted):
        target = self._pick("rooms")
        start = self._future_start(10)
        return {
            "capacity": target.capacity,
            "equipment": [target.equipment[0]] if target.equipment else None,
            "start_time": _iso(start),
            "end_time": _iso(start + timedelta(hours=1)),
            "location": target.location,
        }

    # chat
    def _args_search_chatmsg(self, wanted):
        need_mentions = "mentions" in wanted
        target = self._pick("messages", (lambda m: m.mentions) if need_mentions else None)
        if target is None:
            target = self._pick("messages")
        return {
            "chat_id": target.chat_id,
            "sender": target.sender,
            "keywords": _kw(self.rng, target.content),
            "start_time": _iso(target.sent_at),
            "end_time": _iso(target.sent_at),
            "mentions": target.mentions[0] if target.mentions else None,
            "limit": self.rng.randint(1, 3),
        }

    def _args_send_chatmsg(self, wanted):
        return {
            "chat_id": self._pick("group_chats").id,
            "content": self.rng.choice(CHAT_TEXTS),
            "mentions": [self.rng.choice(self._persons())] if "mentions" in wanted else None,
        }

    def _args_withdraw_chatmsg(self, wanted):
        target = self._pick("messages")
        return {"message_id": target.id, "chat_id": target.chat_id}

    def _args_summary_chatmsg(self, wanted):
        chat = self._pick("group_chats")
        msgs = sorted(m.id for m in self.sim.stores["messages"].values() if m.chat_id == chat.id)
        k = min(len(msgs), self.rng.randint(1, 3))
        return {"message_ids": sorted(self.rng.sample(msgs, k)), "__chat_id": chat.id}

    def _args_search_group_chat(self, wanted):
        target = self._pick("group_chats")
        return {"keywords": _kw(self.rng, target.name)}

    def _args_find_recent_chat_list(self, wanted):
        times = [
            datetime.fromisoformat(self.sim._chat_record(c)["last_activity"])
            for c in self.sim.stores["group_chats"].values()
        ]
        return {"start_time": _iso(min(times)), "end_time": _iso(max(times))}

    # todo
    def _args_create_todo(self, wanted):
        return {
            "title": f"{self.rng.choice(['prepare', 'review', 'draft'])} the {self.rng.choice(['slides', 'report', 'agenda'])}",
            "due_time": _iso(self._future_start()),
        }

    def _args_find_todo(self, wanted):
        need_due = "due_before" in wanted
        target = self._pick("todos", (lambda t: t.due_time) if need_due else None)
        if target is None:
            target = self._pick("todos")
        return {
            "keywords": _kw(self.rng, target.title),
            "status": target.status,
            "due_before": _iso(target.due_time) if target.due_time else None,
        }

    def _args_delete_todo(self, wanted):
        return {"todo_id": self._pick("todos").id}

    # files
    def _args_search_files(self, wanted):
        target = self._pick("files")
        return {
            "name_keywords": _kw(self.rng, target.name),
            "content_keywords": _kw(self.rng, target.content),
            "file_type": target.file_type,
            "owner": target.owner,
            "shared_by": target.shared_by,
            "folder": target.folder,
            "tags": [target.tags[0]] if target.tags else None,
            "created_start": _iso(target.created_at),
            "created_end": _iso(target.created_at),
            "modified_start": _iso(target.modified_at),
            "modified_end": _iso(target.modified_at),
            "min_size": target.size_kb,
            "limit": self.rng.randint(1, 3),
        }

    def _args_summary_files(self, wanted):
        files = sorted(self.sim.stores["files"], key=str)
        k = min(len(files), self.rng.randint(1, 3))
        return {"file_ids": sorted(self.rng.sample(files, k))}


# --- follow-up realizations per transition -------------------------------------


def _update_fields(subset, pool: ValuePool, record: dict) -> dict:
    """New field values for updating a specific schedule record, keeping the
    start/end ordering valid against that record's own timeline."""
    rng = pool.rng
    target_start = datetime.fromisoformat(record["start_time"])
    if "start_time" in subset:
        new_start = target_start + timedelta(minutes=rng.choice([-60, 30, 60]))
        new_end = new_start + timedelta(hours=1)
    else:
        new_start = None
        new_end = target_start + timedelta(minutes=rng.choice([30, 60, 90]))
    candidates = {
        "title": rng.choice(TITLES),
        "start_time": _iso(new_start) if new_start else None,
        "end_time": _iso(new_end),
        "participants": [rng.choice(pool._persons())],
        "location": rng.choice(LOCATIONS),
        "remind_before": rng.choice([5, 10, 15, 30]),
    }
    settable = [p for p in subset if p != "schedule_id"]
    fields = {k: candidates[k] for k in settable if candidates.get(k) is not None}
    fields["schedule_id"] = record["id"]
    return fields


def _set_phrases(fields: dict, clock: datetime) -> str:
    parts = []
    for phrase in grammar.PHRASES["update_schedule"]:
        if phrase.param in fields and phrase.param != "schedule_id":
            parts.append(phrase.render(fields, clock))
    return ", ".join(parts)


@dataclass
class FollowupPlan:
    related_text: str
    unrelated_text: str
    gold_args: dict
    rewritten: str  # self-contained canonical form (gold for the related case)


def build_followup(
    prev_api: str,
    cur_api: str,
    cur_subset: tuple[str, ...],
    prev_result: ToolResult,
    prev_args: dict,
    memory: SessionMemory,
    pool: ValuePool,
    clock: datetime,
) -> FollowupPlan:
    """Realize the current side of a transition: surface forms plus gold args."""
    payload = prev_result.payload or {}
    records = payload.get("records", [])
    ids = [r["id"] for r in records]
    rng = pool.rng

    def resolved(clause: str) -> str:
        fu = grammar.match_followup(clause, clock)
        if fu is None:
            raise UnsatisfiableTask(
                Task(name=f"{prev_api}->{cur_api}", kind="multi_turn"),
                f"follow-up form {clause!r} is not in the grammar",
            )
        rule, m = fu
        return rule.resolver(m, memory, clock)

    pair = (prev_api, cur_api)
    if pair == ("search_email", "summary_email"):
        related = "summarize them"
        gold = {"email_ids": ids}
        unrelated = grammar.render_clause("summary_email", gold, clock)
    elif pair == ("search_email", "send_email"):
        to = rng.choice(pool._persons())
        related = f"forward them to {to}"
        gold = {
            "to": [to],
            "subject": "Fwd: emails",
            "body": "See the attached emails.",
            "attachments": ids,
        }
        unrelated = grammar.render_clause("send_email", gold, clock)
    elif pair == ("summary_email", "send_email"):
        to = rng.choice(pool._persons())
        related = f"send that summary to {to}"
        gold = {"to": [to], "subject": "Email summary", "body": payload.get("text", "")}
        unrelated = grammar.render_clause("send_email", gold, clock)
    elif cur_api == "update_schedule":
        if prev_api == "find_schedule_status":
            busy = payload.get("busy", [])
            record = busy[0] if busy else None
        else:
            record = records[0] if records else None
        if record is None:
            raise UnsatisfiableTask(
                Task(name=f"{prev_api}->{cur_api}", kind="multi_turn"), "no schedule to update"
            )
        fields = _update_fields(cur_subset, pool, record)
        sid = record["id"]
        set_text = _set_phrases(fields, clock)
        only_start = set(fields) == {"schedule_id", "start_time"}
        if only_start:
            when = timeexpr.fmt_datetime(
                datetime.fromisoformat(fields["start_time"]), clock
            )
            related = f"move the start time up to {when}"
        else:
            related = f"update it, {set_text}" if set_text else "update it"
        gold = fields
        unrelated = f"update schedule {sid}" + (f", {set_text}" if set_text else "")
    elif cur_api == "delete_schedule":
        if prev_api == "find_schedule_status":
            sid = payload.get("busy", [{}])[0].get("id")
        else:
            sid = ids[0] if ids else None
        if sid is None:
            raise UnsatisfiableTask(
                Task(name=f"{prev_api}->{cur_api}", kind="multi_turn"), "no schedule to delete"
            )
        related = "cancel it"
        gold = {"schedule_id": sid}
        unrelated = f"delete schedule {sid}"
    elif pair == ("find_schedule_status", "create_schedule"):
        free = payload.get("free", [])
        if not free:
            raise UnsatisfiableTask(
                Task(name="status->create", kind="multi_turn"), "no free slot in window"
            )
        start = datetime.fromisoformat(free[0]["start"])
        end = min(start + timedelta(hours=1), datetime.fromisoformat(free[0]["end"]))
        title = rng.choice(TITLES)
        related = f'book a meeting in the first free slot, titled "{title}"'
        gold = {
            "title": title,
            "start_time": _iso(start),
            "end_time": _iso(end),
            "participants": [payload.get("person")],
        }
        unrelated = grammar.render_clause("create_schedule", gold, clock)
    elif pair in (("find_todo", "delete_todo"), ("create_todo", "delete_todo")):
        tid = ids[0] if ids else None
        if tid is None:
            raise UnsatisfiableTask(Task(name="todo-delete", kind="multi_turn"), "no todo found")
        related = "delete the first one" if prev_api == "find_todo" else "remove it"
        gold = {"todo_id": tid}
        unrelated = f"delete todo {tid}"
    elif cur_api == "summary_chatmsg":
        if prev_api == "search_chatmsg":
            msg_ids = ids
            related = "summarize those messages"
        elif prev_api == "search_group_chat":
            msg_ids = list(records[0].get("message_ids", [])) if records else []
            related = "summarize the latest messages there"
        else:  # find_recent_chat_list
            msg_ids = list(records[0].get("message_ids", [])) if records else []
            related = "summarize the latest chat"
        if not msg_ids:
            raise UnsatisfiableTask(Task(name="chat-summary", kind="multi_turn"), "no messages")
        gold = {"message_ids": msg_ids}
        unrelated = grammar.render_clause("summary_chatmsg", gold, clock)
    elif pair == ("search_chatmsg", "withdraw_chatmsg"):
        if not ids:
            raise UnsatisfiableTask(Task(name="withdraw", kind="multi_turn"), "no messages")
        related = "withdraw the first one"
        gold = {"message_id": ids[0]}
        unrelated = f"withdraw message {ids[0]}"
    elif pair == ("summary_chatmsg", "send_chatmsg"):
        cid = prev_args.get("__chat_id") or memory.slot("chat_id")
        if cid is None:
            raise UnsatisfiableTask(Task(name="summary->chat", kind="multi_turn"), "no chat id")
        related = f"send that summary to chat {cid}"
        gold = {"chat_id": cid, "content": payload.get("text", "")}
        unrelated = grammar.render_clause("send_chatmsg", gold, clock)
    elif pair == ("search_group_chat", "send_chatmsg"):
        if not ids:
            raise UnsatisfiableTask(Task(name="group->chat", kind="multi_turn"), "no group found")
        content = rng.choice(CHAT_TEXTS)
        related = f'send a message there saying "{content}"'
        gold = {"chat_id": ids[0], "content": content}
        unrelated = grammar.render_clause("send_chatmsg", gold, clock)
    elif pair == ("search_files", "summary_files"):
        if not ids:
            raise UnsatisfiableTask(Task(name="files-summary", kind="multi_turn"), "no files")
        related = "summarize those files"
        gold = {"file_ids": ids}
        unrelated = grammar.render_clause("summary_files", gold, clock)
    else:
        raise UnsatisfiableTask(
            Task(name=f"{prev_api}->{cur_api}", kind="multi_turn"),
            "transition has no follow-up realization",
        )

    return FollowupPlan(
        related_text=related,
        unrelated_text=unrelated,
        gold_args=gold,
        rewritten=resolved(related),
    )


# --- perturbation ---------------------------------------------------------------


def _perturb_synonym(text: str, rng: random.Random) -> Optional[str]:
    first = text.split(" ", 1)
    verb = first[0].lower()
    if verb in UNKNOWN_VERBS and len(first) > 1:
        return f"{UNKNOWN_VERBS[verb]} {first[1]}"
    return None


def _perturb_filler(text: str, rng: random.Random) -> Optional[str]:
    return f"{text}, then let me know"


def _perturb_pronoun(text: str, rng: random.Random) -> Optional[str]:
    persons = [
        "Jiashu Xia", "Dana Li", "Marcus Webb", "Priya Nair", "Tom Aldren", "Yuki Tanaka"
    ]
    present = [p for p in persons if p in text]
    if not present:
        return None
    return text.replace(rng.choice(present), "them", 1)


def _perturb_drop(text: str, rng: random.Random) -> Optional[str]:
    segments = grammar.split_segments(text)
    if len(segments) < 2:
        return None
    drop = rng.randrange(1, len(segments))
    return ", ".join(segments[:drop] + segments[drop + 1 :])


_PERTURB_OPS = [_perturb_synonym, _perturb_filler, _perturb_pronoun, _perturb_drop]


def render_utterance(text: str, noise: float, rng: random.Random) -> str:
    """Apply at most one colloquial perturbation at rate ``noise``."""
    if not 0 <= noise <= 1:
        raise ValueError("noise must be in [0, 1]")
    if noise == 0 or rng.random() >= noise:
        return text
    ops = list(_PERTURB_OPS)
    rng.shuffle(ops)
    for op in ops:
        out = op(text, rng)
        if out is not None and out != text:
            return out
    return text


# --- flows ------------------------------------------------------------------


def _transition_tasks(scenario: str) -> list[Task]:
    tasks = []
    for rule in transitions.ledger():
        if rule.scenario != scenario:
            continue
        for kind in ("multi_turn", "multi_intent"):
            tasks.append(
                Task(
                    name=f"{rule.prev_api}->{rule.cur_api}:{kind}",
                    kind=kind,
                    scenario=scenario,
                    prev_api=rule.prev_api,
                    cur_api=rule.cur_api,
                )
            )
    return tasks


def _single_tasks(scenario: str, apis: list[str]) -> list[Task]:
    return [
        Task(name=f"{api}:single", kind="single_intent", scenario=scenario, api=api)
        for api in apis
    ]


def _build_flows() -> dict[str, Flow]:
    email = Flow(
        "email",
        tuple(
            _single_tasks("Email", ["search_email", "send_email", "summary_email"])
            + _transition_tasks("Email")
            + [
                Task(
                    name="search_email->send_email:multi_turn",
                    kind="multi_turn",
                    scenario="Email",
                    prev_api="search_email",
                    cur_api="send_email",
                )
            ]
        ),
    )
    schedule = Flow(
        "schedule",
        tuple(
            _single_tasks(
                "Schedule",
                ["create_schedule", "update_schedule", "find_schedule_status", "delete_schedule"],
            )
            + _transition_tasks("Schedule")
        ),
    )
    meeting = Flow(
        "meeting",
        tuple(
            _single_tasks("Meeting", ["create_meeting", "find_meetings", "find_meeting_room"])
        ),
    )
    chat = Flow(
        "chat",
        tuple(
            _single_tasks(
                "Chat",
                [
                    "search_chatmsg",
                    "send_chatmsg",
                    "withdraw_chatmsg",
                    "summary_chatmsg",
                    "search_group_chat",
                    "find_recent_chat_list",
                ],
            )
            + _transition_tasks("Chat")
        ),
    )
    todo = Flow(
        "todo",
        tuple(
            _single_tasks("Todo", ["create_todo", "find_todo", "delete_todo"])
            + _transition_tasks("Todo")
        ),
    )
    docs = Flow(
        "docs",
        tuple(
            _single_tasks("OnlineDocuments", ["search_files", "summary_files"])
            + [
                Task(
                    name="search_files->summary_files:multi_turn",
                    kind="multi_turn",
                    scenario="OnlineDocuments",
                    prev_api="search_files",
                    cur_api="summary_files",
                ),
                Task(
                    name="search_files->summary_files:multi_intent",
                    kind="multi_intent",
                    scenario="OnlineDocuments",
                    prev_api="search_files",
                    cur_api="summary_files",
                ),
            ]
        ),
    )
    chit = Task(name="chitchat", kind="chitchat", scenario="Email")
    mixed = Flow(
        "mixed",
        tuple(
            list(email.tasks)
            + list(schedule.tasks)
            + list(meeting.tasks)
            + list(chat.tasks)
            + list(todo.tasks)
            + list(docs.tasks)
            + [chit]
        ),
    )
    return {f.name: f for f in (email, schedule, meeting, chat, todo, docs, mixed)}


FLOWS: dict[str, Flow] = _build_flows()


def _rule_for(prev_api: str, cur_api: str) -> transitions.TransitionRule:
    rule = transitions.find_rule(prev_api, cur_api)
    if rule is not None:
        return rule
    m = len(get_tool(prev_api).params)
    n = len(get_tool(cur_api).params)
    count = transitions.combinations(m, n)
    return transitions.TransitionRule(
        scenario=get_tool(cur_api).scenario,
        prev_api=prev_api,
        cur_api=cur_api,
        m=m,
        n=n,
        combinations=count,
        complexity=transitions.classify(count),
    )


def _prev_subset(rule, combo_index: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return transitions.combination_at(rule, combo_index % rule.combinations)


class _SampleBuilder:
    def __init__(self, fixture: str, seed: int, index: int, noise: float):
        self.rng = random.Random(seed * 1_000_003 + index)
        self.sim = OfficeSimulator(fixture, seed)
        self.pool = ValuePool(self.sim, self.rng)
        self.clock = self.sim.clock.now
        self.memory = SessionMemory()
        self.noise = noise
        self.turns: list[SampleTurn] = []

    def _execute_gold(self, calls: list[ToolCall]) -> list[ToolResult]:
        results = []
        for call in calls:
            report = validate_call(get_tool(call.api_name), call)
            if not report.ok:
                raise AssertionError(
                    f"generated an invalid gold call for {call.api_name}: "
                    + "; ".join(f"{v.kind}:{v.param}" for v in report.violations)
                )
            result = self.sim.execute(call)
            if not result.ok:
                raise AssertionError(
                    f"gold call {call.api_name} failed in the simulator: {result.error.code}"
                )
            results.append(result)
        return results

    def _push_turn(
        self,
        user_text: str,
        related: bool,
        rewritten: str,
        plan: Optional[Plan],
        calls: list[ToolCall],
    ) -> None:
        results = self._execute_gold(calls)
        turn = SampleTurn(
            user_text=render_utterance(user_text, self.noise, self.rng),
            gold_related=related,
            gold_rewritten=rewritten,
            gold_plan=plan,
            gold_calls=calls,
            sim_results=results,
        )
        self.turns.append(turn)
        memory_turn = DialogueTurn(
            user_query=user_text,
            related=related,
            rewritten_query=rewritten,
            intent="wps365" if calls else "chitchat",
            plan=plan,
            calls=tuple(zip(calls, results)),
            reply="",
            timestamp=timeexpr.iso(self.clock),
        )
        self.memory = update_memory(self.memory, memory_turn)

    def _single_turn(self, api: str, subset: tuple[str, ...], force: tuple[str, ...] = ()) -> dict:
        args = self.pool.args_for(api, subset, force)
        public_args = {k: v for k, v in args.items() if not k.startswith("__")}
        text = grammar.render_clause(api, public_args, self.clock)
        plan = Plan(
            sub_tasks=(SubTask(index=1, text=text, api_name=api),)
        )
        self._push_turn(text, False, text, plan, [ToolCall(api, public_args)])
        return args

    def build(self, task: Task, combo_index: int) -> tuple[list[str], str]:
        if task.kind == "chitchat":
            text = self.rng.choice(CHITCHAT)
            self._push_turn(text, False, text, None, [])
            return [], task.scenario

        if task.kind == "single_intent":
            spec = get_tool(task.api)
            names = spec.param_names
            mask = self.rng.randrange(1, 2 ** len(names))
            subset = tuple(n for i, n in enumerate(names) if mask >> i & 1)
            self._single_turn(task.api, subset)
            return [task.api], spec.scenario

        rule = _rule_for(task.prev_api, task.cur_api)
        prev_subset, cur_subset = _prev_subset(rule, combo_index)
        force: tuple[str, ...] = ()
        if task.prev_api == "find_schedule_status" and task.cur_api != "create_schedule":
            # the follow-up needs a busy schedule, so pin the window to the
            # target schedule's day rather than defaulting to today
            force = ("start_time", "end_time")
        prev_args = self._single_turn(task.prev_api, prev_subset, force)
        prev_result = self.turns[-1].sim_results[-1]
        fu = build_followup(
            task.prev_api,
            task.cur_api,
            cur_subset,
            prev_result,
            prev_args,
            self.memory,
            self.pool,
            self.clock,
        )
        gold_call = ToolCall(task.cur_api, fu.gold_args)

        if task.kind == "multi_turn":
            related = self.rng.random() < 0.7
            if related:
                plan = Plan(
                    sub_tasks=(SubTask(index=1, text=fu.rewritten, api_name=task.cur_api),)
                )
                self._push_turn(fu.related_text, True, fu.rewritten, plan, [gold_call])
            else:
                plan = Plan(
                    sub_tasks=(
                        SubTask(index=1, text=fu.unrelated_text, api_name=task.cur_api),
                    )
                )
                self._push_turn(fu.unrelated_text, False, fu.unrelated_text, plan, [gold_call])
            return [task.prev_api, task.cur_api], rule.scenario

        # multi_intent: fold both intents into the first turn
        first = self.turns.pop()
        self.memory = SessionMemory()
        self.sim.seed(self.sim.fixture_name, self.sim.seed_value)
        combined = f"{first.gold_plan.sub_tasks[0].text}, then {fu.related_text}"
        plan = Plan(
            sub_tasks=(
                SubTask(index=1, text=first.gold_plan.sub_tasks[0].text, api_name=task.prev_api),
                SubTask(
                    index=2,
                    text=fu.related_text,
                    api_name=task.cur_api,
                    depends_on=("#E1",),
                ),
            )
        )
        self._push_turn(
            combined, False, combined, plan, list(first.gold_calls) + [gold_call]
        )
        return [task.prev_api, task.cur_api], rule.scenario


def generate_sample(
    flow: Flow, index: int, seed: int, noise: float, fixture: str = DEFAULT_FIXTURE
) -> DialogueSample:
    """Build one deterministic sample: task round-robin, coverage-first combos."""
    task = flow.tasks[index % len(flow.tasks)]
    combo_index = index // len(flow.tasks)
    builder = _SampleBuilder(fixture, seed, index, noise)
    path, scenario = builder.build(task, combo_index)
    return DialogueSample(
        sample_id=index,
        scenario=scenario or task.scenario,
        kind=task.kind,
        transition_path=path,
        combo_index=combo_index,
        seed=seed,
        fixture=fixture,
        noise=noise,
        turns=builder.turns,
    )


def run_flow(
    flow: Flow | str,
    count: int,
    seed: int,
    noise: float = 0.0,
    fixture: str = DEFAULT_FIXTURE,
) -> list[DialogueSample]:
    """Generate ``count`` samples; deterministic per (seed, index)."""
    if isinstance(flow, str):
        try:
            flow = FLOWS[flow]
        except KeyError:
            raise KeyError(f"unknown flow {flow!r}; known: {sorted(FLOWS)}") from None
    return [generate_sample(flow, i, seed, noise, fixture) for i in range(count)]


def coverage_report(samples: list[DialogueSample]) -> dict[str, set[int]]:
    """Distinct combination indices exercised per transition."""
    hit: dict[str, set[int]] = {}
    for s in samples:
        if len(s.transition_path) == 2:
            key = "->".join(s.transition_path)
            rule = _rule_for(*s.transition_path)
            hit.setdefault(key, set()).add(s.combo_index % rule.combinations)
    return hit


def export_jsonl(samples: list[DialogueSample], path: str) -> None:
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")


def load_jsonl(path: str) -> list[DialogueSample]:
    samples = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(DialogueSample.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"line {line_no}: malformed sample ({exc})") from None
    return samples
