"""Template grammar shared by the data generator and the rule backends.

Every API has one canonical clause form: a head (which may embed args) plus
comma-separated param phrases in catalog order, with free text double-quoted.
``render_clause`` and ``match_steps`` are inverses on canonical text — that
inverse pair is what the end-to-end closed-loop tests exercise. Parsing also
accepts a superset of colloquial variants (the business idioms the system is
scripted against), some of which expand into two chained steps.

Follow-up forms (``summarize them``, ``move the start time up to 2 PM``) are
context-dependent: inside a multi-clause utterance they resolve against the
previous step's evidence, and as standalone turns the rewriter resolves them
against memory slots into canonical self-contained text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Optional

from . import timeexpr
from .types import SessionMemory

ID_RE = r"[a-z]{2,4}-\d{1,6}"
CLAUSE_SPLIT_RE = re.compile(r",?\s+(?:and\s+)?then\s+|;\s+", re.IGNORECASE)

MISSING_MARK = "<missing:{}>"

# evidence semantics per (prev api, cur api): how a prior ok payload fills the
# current call's args; this is the execution-time meaning of a tool transition
EVIDENCE_PAIRS = {
    ("search_email", "summary_email"),
    ("search_email", "send_email"),
    ("summary_email", "send_email"),
    ("create_schedule", "update_schedule"),
    ("create_schedule", "delete_schedule"),
    ("create_meeting", "update_schedule"),
    ("create_meeting", "delete_schedule"),
    ("update_schedule", "delete_schedule"),
    ("update_schedule", "update_schedule"),
    ("find_meetings", "update_schedule"),
    ("find_meetings", "delete_schedule"),
    ("find_schedule_status", "create_schedule"),
    ("find_schedule_status", "update_schedule"),
    ("find_schedule_status", "delete_schedule"),
    ("find_todo", "delete_todo"),
    ("create_todo", "delete_todo"),
    ("search_chatmsg", "summary_chatmsg"),
    ("search_chatmsg", "withdraw_chatmsg"),
    ("search_group_chat", "summary_chatmsg"),
    ("search_group_chat", "send_chatmsg"),
    ("find_recent_chat_list", "summary_chatmsg"),
    ("summary_chatmsg", "send_chatmsg"),
    ("search_files", "summary_files"),
}


def split_segments(clause: str) -> list[str]:
    """Split a clause on ', ' outside double quotes."""
    segments, buf, quoted = [], [], False
    i = 0
    while i < len(clause):
        ch = clause[i]
        if ch == '"':
            quoted = not quoted
            buf.append(ch)
        elif ch == "," and not quoted and clause[i : i + 2] == ", ":
            segments.append("".join(buf).strip())
            buf = []
            i += 1
        else:
            buf.append(ch)
        i += 1
    if buf:
        segments.append("".join(buf).strip())
    return [s for s in segments if s]


def split_clauses(text: str) -> list[str]:
    """Split an utterance into intent clauses (', then' / '; ' coordination)."""
    return [c.strip() for c in CLAUSE_SPLIT_RE.split(text.strip()) if c.strip()]


def strip_quoted(text: str) -> str:
    return re.sub(r'"[^"]*"', '""', text)


def join_names(names: list[str]) -> str:
    return " and ".join(names)


def join_ids(ids: list[str]) -> str:
    return " and ".join(ids)


def _names(s: str) -> list[str]:
    return [n.strip() for n in re.split(r"\s+and\s+", s.strip()) if n.strip()]


def _ids(s: str) -> list[str]:
    return re.findall(ID_RE, s)


def _text(s: str) -> str:
    return s.strip().strip('"')


_PUNCT_END = re.compile(r"[.?!]+$")


def normalize_clause(clause: str) -> str:
    return _PUNCT_END.sub("", clause.strip())


def default_subject(body: str) -> str:
    """Derived subject line: the body up to its first punctuation mark."""
    head = re.split(r"[.,!?;:]", body, maxsplit=1)[0].strip()
    return head or body.strip()


# --- phrase rules -----------------------------------------------------------


@dataclass(frozen=True)
class Phrase:
    param: str
    render: Callable[[dict, datetime], str]
    patterns: tuple[str, ...]
    convert: Callable  # (match, clock) -> value or None
    const: object = None  # for fixed-value variants (with/without attachments)


def _time_phrase(param: str, render_cue: str, patterns: tuple[str, ...]) -> Phrase:
    def render(args, clock):
        return f"{render_cue} {timeexpr.fmt_datetime(datetime.fromisoformat(args[param]), clock)}"

    def convert(m, clock):
        dt = timeexpr.parse_datetime(m.group(1), clock)
        return timeexpr.iso(dt) if dt else None

    return Phrase(param, render, patterns, convert)


def _quoted_phrase(param: str, render_cue: str, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(
        param,
        lambda args, clock: f'{render_cue} "{args[param]}"',
        patterns,
        lambda m, clock: _text(m.group(1)),
    )


def _person_phrase(param: str, render_cue: str, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(
        param,
        lambda args, clock: f"{render_cue} {args[param]}",
        patterns,
        lambda m, clock: m.group(1).strip(),
    )


def _names_phrase(param: str, render_cue: str, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(
        param,
        lambda args, clock: f"{render_cue} {join_names(args[param])}",
        patterns,
        lambda m, clock: _names(m.group(1)),
    )


def _ids_phrase(param: str, render_cue: str, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(
        param,
        lambda args, clock: f"{render_cue} {join_ids(args[param])}",
        patterns,
        lambda m, clock: _ids(m.group(1)),
    )


def _int_phrase(param: str, render: Callable, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(param, render, patterns, lambda m, clock: int(m.group(1)))


def _const_phrase(param: str, value, render_text: str, patterns: tuple[str, ...]) -> Phrase:
    return Phrase(
        param, lambda args, clock: render_text, patterns, lambda m, clock: value, const=value
    )


PHRASES: dict[str, list[Phrase]] = {
    "search_email": [
        _person_phrase("sender", "from", (r"from (.+)", r"sent by (.+)")),
        _person_phrase("recipient", "addressed to", (r"addressed to (.+)",)),
        _person_phrase("cc", "cc", (r"cc(?:'d)?(?: to)? (.+)", r"copied to (.+)")),
        _quoted_phrase("subject_keywords", "about", (r'about "?([^"]+)"?',)),
        _quoted_phrase("body_keywords", "mentioning", (r'mentioning "?([^"]+)"?',)),
        Phrase(
            "folder",
            lambda args, clock: f"in {args['folder']}",
            (r"in (?:the )?(inbox|sent|drafts|archive)(?: folder)?",),
            lambda m, clock: m.group(1).lower(),
        ),
        _const_phrase("has_attachment", True, "with attachments", (r"with attachments?",)),
        _const_phrase("has_attachment", False, "without attachments", (r"without attachments?",)),
        _time_phrase("start_time", "received after", (r"received after (.+)", r"after (.+)")),
        _time_phrase("end_time", "received before", (r"received before (.+)", r"before (.+)")),
        Phrase(
            "read_status",
            lambda args, clock: f"marked {args['read_status']}",
            (r"marked (read|unread)", r"(read|unread) only"),
            lambda m, clock: m.group(1).lower(),
        ),
        _int_phrase(
            "limit",
            lambda args, clock: f"limit {args['limit']}",
            (r"limit (\d+)", r"top (\d+)", r"first (\d+)"),
        ),
    ],
    "send_email": [
        _names_phrase("to", "to", (r"to (.+)",)),
        _names_phrase("cc", "cc", (r"cc (.+)",)),
        _quoted_phrase("subject", "subject", (r'subject "?([^"]+)"?', r'titled "?([^"]+)"?')),
        _quoted_phrase("body", "saying", (r'saying "([^"]+)"',)),
        _ids_phrase("attachments", "attaching", (r"attach(?:ing)? (.+)",)),
    ],
    "summary_email": [
        _quoted_phrase("focus", "focusing on", (r'focus(?:ing)? on "?([^"]+)"?',)),
    ],
    "create_schedule": [
        _quoted_phrase("title", "titled", (r'titled "?([^"]+)"?', r"the topic is (.+)")),
        _time_phrase("start_time", "at", (r"at (.+)", r"starting (?:at )?(.+)")),
        _time_phrase("end_time", "until", (r"until (.+)", r"ending (?:at )?(.+)")),
        _names_phrase("participants", "with", (r"with (.+)", r"invite (.+)", r"inviting (.+)")),
        _quoted_phrase("location", "located at", (r'located at "?([^"]+)"?',)),
    ],
    "update_schedule": [
        _quoted_phrase(
            "title",
            "set the title to",
            (r'set the title to "?([^"]+)"?', r"change the (?:topic|title) to (.+)"),
        ),
        _time_phrase(
            "start_time",
            "set the start time to",
            (r"set the start time to (.+)", r"move the start time (?:up )?to (.+)"),
        ),
        _time_phrase(
            "end_time",
            "set the end time to",
            (r"set the end time to (.+)", r"move the end time (?:up )?to (.+)"),
        ),
        _names_phrase("participants", "set the participants to", (r"set the participants to (.+)",)),
        _quoted_phrase("location", "set the location to", (r'set the location to "?([^"]+)"?',)),
        _int_phrase(
            "remind_before",
            lambda args, clock: f"set the reminder to {args['remind_before']} minutes before",
            (r"set the reminder to (\d+) minutes before",),
        ),
    ],
    "find_schedule_status": [
        _time_phrase("start_time", "from", (r"from (.+)",)),
        _time_phrase("end_time", "until", (r"until (.+)",)),
    ],
    "delete_schedule": [],
    "create_meeting": [
        _quoted_phrase("title", "titled", (r'titled "?([^"]+)"?', r"the topic is (.+)")),
        _time_phrase("start_time", "at", (r"at (.+)", r"starting (?:at )?(.+)")),
        _time_phrase("end_time", "until", (r"until (.+)", r"ending (?:at )?(.+)")),
        _names_phrase("participants", "with", (r"with (.+)", r"invite (.+)")),
        Phrase(
            "room_id",
            lambda args, clock: f"in room {args['room_id']}",
            (rf"in room ({ID_RE})",),
            lambda m, clock: m.group(1),
        ),
    ],
    "find_meetings": [
        _time_phrase("start_time", "starting after", (r"starting after (.+)",)),
        _time_phrase("end_time", "starting before", (r"starting before (.+)",)),
    ],
    "find_meeting_room": [
        _int_phrase(
            "capacity",
            lambda args, clock: f"for {args['capacity']} people",
            (r"for (\d+) people", r"seating (\d+)"),
        ),
        Phrase(
            "equipment",
            lambda args, clock: f"equipped with {join_names(args['equipment'])}",
            (r"equipped with (.+)", r"that has (.+)"),
            lambda m, clock: _names(m.group(1)),
        ),
        _time_phrase("start_time", "from", (r"from (.+)",)),
        _time_phrase("end_time", "until", (r"until (.+)",)),
        _quoted_phrase("location", "located at", (r'located at "?([^"]+)"?', r"on (floor \w+)")),
    ],
    "search_chatmsg": [
        Phrase(
            "chat_id",
            lambda args, clock: f"in chat {args['chat_id']}",
            (rf"in chat ({ID_RE})",),
            lambda m, clock: m.group(1),
        ),
        _person_phrase("sender", "from", (r"from (.+)", r"sent by (.+)")),
        _quoted_phrase("keywords", "containing", (r'containing "?([^"]+)"?',)),
        _time_phrase("start_time", "sent after", (r"sent after (.+)",)),
        _time_phrase("end_time", "sent before", (r"sent before (.+)",)),
        _person_phrase("mentions", "mentioning", (r"mentioning (.+)",)),
        _int_phrase(
            "limit",
            lambda args, clock: f"limit {args['limit']}",
            (r"limit (\d+)", r"top (\d+)"),
        ),
    ],
    "send_chatmsg": [
        Phrase(
            "chat_id",
            lambda args, clock: f"in chat {args['chat_id']}",
            (rf"in chat ({ID_RE})", rf"to chat ({ID_RE})"),
            lambda m, clock: m.group(1),
        ),
        _quoted_phrase("content", "saying", (r'saying "([^"]+)"',)),
        _names_phrase("mentions", "mentioning", (r"mentioning (.+)",)),
    ],
    "withdraw_chatmsg": [
        Phrase(
            "chat_id",
            lambda args, clock: f"in chat {args['chat_id']}",
            (rf"in chat ({ID_RE})",),
            lambda m, clock: m.group(1),
        ),
    ],
    "summary_chatmsg": [],
    "search_group_chat": [],
    "find_recent_chat_list": [
        _time_phrase("start_time", "active after", (r"active after (.+)",)),
        _time_phrase("end_time", "active before", (r"active before (.+)",)),
    ],
    "create_todo": [
        _time_phrase("due_time", "due", (r"due (?:by )?(.+)",)),
    ],
    "find_todo": [
        _quoted_phrase("keywords", "containing", (r'containing "?([^"]+)"?', r'about "?([^"]+)"?')),
        Phrase(
            "status",
            lambda args, clock: f"that are {args['status']}",
            (r"that are (open|done)", r"(open|done) only"),
            lambda m, clock: m.group(1).lower(),
        ),
        _time_phrase("due_before", "due before", (r"due before (.+)",)),
    ],
    "delete_todo": [],
    "search_files": [
        _quoted_phrase("name_keywords", "named", (r'named "?([^"]+)"?', r'called "?([^"]+)"?')),
        _quoted_phrase("content_keywords", "containing", (r'containing "?([^"]+)"?',)),
        Phrase(
            "file_type",
            lambda args, clock: f"of type {args['file_type']}",
            (r"of type (doc|sheet|slide|pdf|other)", r"(doc|sheet|slide|pdf|other) files only"),
            lambda m, clock: m.group(1).lower(),
        ),
        _person_phrase("owner", "owned by", (r"owned by (.+)",)),
        _person_phrase("shared_by", "shared by", (r"shared by (.+)",)),
        _quoted_phrase("folder", "in folder", (r'in folder "?([^"]+)"?',)),
        Phrase(
            "tags",
            lambda args, clock: f"tagged {join_names(args['tags'])}",
            (r"tagged (.+)",),
            lambda m, clock: _names(m.group(1)),
        ),
        _time_phrase("created_start", "created after", (r"created after (.+)",)),
        _time_phrase("created_end", "created before", (r"created before (.+)",)),
        _time_phrase("modified_start", "modified after", (r"modified after (.+)",)),
        _time_phrase("modified_end", "modified before", (r"modified before (.+)",)),
        _int_phrase(
            "min_size",
            lambda args, clock: f"at least {args['min_size']} KB",
            (r"at least (\d+) ?KB", r"bigger than (\d+) ?KB"),
        ),
        _int_phrase("limit", lambda args, clock: f"limit {args['limit']}", (r"limit (\d+)",)),
    ],
    "summary_files": [],
}

# phrases that appear in evidence-chained clauses and carry no explicit arg
_NOOP_SEGMENTS = (
    r"in the first free slot",
    r"for one hour",
)


# --- heads -------------------------------------------------------------------


@dataclass(frozen=True)
class Head:
    api: str
    render: Callable[[dict, datetime], str]  # args consumed by the head
    head_params: tuple[str, ...]
    patterns: tuple[str, ...]
    extract: Callable  # (match, clock) -> dict of head args, or None on failure


def _const_head(api: str, text: str, patterns: tuple[str, ...]) -> Head:
    # every fixed head still captures trailing words so inline phrases survive
    full = tuple(p.removesuffix(r"\s*") + r"\s*(.*)" for p in patterns)
    return Head(
        api,
        lambda args, clock: text,
        (),
        full,
        lambda m, clock: {"__rest__": m.group(m.re.groups)},
    )


def _id_head(api: str, param: str, prefix: str, patterns: tuple[str, ...]) -> Head:
    return Head(
        api,
        lambda args, clock: f"{prefix} {args[param]}",
        (param,),
        patterns,
        lambda m, clock: {param: m.group(1)},
    )


def _ids_head(api: str, param: str, prefix: str, patterns: tuple[str, ...]) -> Head:
    def extract(m, clock):
        ids = _ids(m.group(1))
        return {param: ids} if ids else None

    return Head(
        api,
        lambda args, clock: f"{prefix} {join_ids(args[param])}",
        (param,),
        patterns,
        extract,
    )


HEADS: list[Head] = [
    Head(
        "search_email",
        lambda args, clock: "search emails",
        (),
        (r"(?:search|find|look up|show)(?: for)?(?: the| my| all)? emails?\b\s*(.*)",),
        lambda m, clock: {"__rest__": m.group(1)},
    ),
    _const_head(
        "send_email", "send an email", (r"(?:send|write) (?:an |a )?email\b\s*", r"email\b\s*")
    ),
    _ids_head(
        "summary_email",
        "email_ids",
        "summarize emails",
        (r"summar(?:ize|ise|y) (?:the )?emails? ((?:[a-z]{2,4}-\d{1,6}(?:,? and | )?)+)",),
    ),
    Head(
        "create_schedule",
        lambda args, clock: "create a meeting",
        (),
        (r"(?:create|set up|book|add|schedule) a (?:new )?(?:meeting|schedule|appointment|event)\b\s*(.*)",),
        lambda m, clock: {"__rest__": m.group(1)},
    ),
    _id_head(
        "update_schedule",
        "schedule_id",
        "update schedule",
        (rf"(?:update|edit|reschedule) (?:the )?(?:schedule|meeting) ({ID_RE})\b\s*",),
    ),
    Head(
        "find_schedule_status",
        lambda args, clock: f"check {args['person']}'s free time",
        ("person",),
        (
            r"check ([\w .]+?)(?:'s)? (?:free time|availability|schedule status)\b\s*(.*)",
            r"(?:is|when is) ([\w .]+?) (?:free|available)\b\s*(.*)",
        ),
        lambda m, clock: {"person": m.group(1).strip(), "__rest__": m.group(2)},
    ),
    _id_head(
        "delete_schedule",
        "schedule_id",
        "delete schedule",
        (rf"(?:delete|cancel|remove) (?:the )?(?:schedule|meeting) ({ID_RE})\b\s*",),
    ),
    _const_head(
        "find_meetings",
        "find meetings",
        (r"(?:find|search|list|show)(?: the| my| all)? meetings\b\s*",),
    ),
    _const_head(
        "find_meeting_room",
        "find a meeting room",
        (r"(?:find|search|book)(?: for)? a? ?meeting rooms?\b\s*", r"find a room\b\s*"),
    ),
    _const_head(
        "search_chatmsg",
        "search chat messages",
        (r"(?:search|find|look up)(?:omit)?(?: the| my)? chat messages?\b\s*",),
    ),
    _const_head(
        "send_chatmsg",
        "send a chat message",
        (r"(?:send|post) a (?:chat )?message\b\s*",),
    ),
    _id_head(
        "withdraw_chatmsg",
        "message_id",
        "withdraw message",
        (rf"(?:withdraw|recall|retract) (?:the )?message ({ID_RE})\b\s*",),
    ),
    _ids_head(
        "summary_chatmsg",
        "message_ids",
        "summarize messages",
        (r"summar(?:ize|ise|y) (?:the )?(?:chat )?messages? ((?:[a-z]{2,4}-\d{1,6}(?:,? and | )?)+)",),
    ),
    Head(
        "search_group_chat",
        lambda args, clock: f'find group chats named "{args["keywords"]}"',
        ("keywords",),
        (r'(?:find|search) group chats? (?:named|about|matching) "?([^"]+)"?\s*',),
        lambda m, clock: {"keywords": _text(m.group(1))},
    ),
    _const_head(
        "find_recent_chat_list",
        "list recent chats",
        (r"(?:list|show|view)(?: my)? recent chats?(?: list)?\b\s*",),
    ),
    Head(
        "create_todo",
        lambda args, clock: f'add a todo titled "{args["title"]}"',
        ("title",),
        (r'(?:add|create) a (?:new )?(?:todo|task)(?: titled| called)? "?([^"]+)"?\s*',),
        lambda m, clock: {"title": _text(m.group(1))},
    ),
    _const_head(
        "find_todo",
        "find todos",
        (r"(?:find|list|show|query)(?: my| the| all)? todos?(?: items| list)?\b\s*",),
    ),
    _id_head(
        "delete_todo",
        "todo_id",
        "delete todo",
        (rf"(?:delete|remove|drop) (?:the )?todo ({ID_RE})\b\s*",),
    ),
    _const_head(
        "search_files",
        "search cloud files",
        (r"(?:search|find|look up)(?: the| my)? (?:cloud )?(?:files|documents)\b\s*",),
    ),
    _ids_head(
        "summary_files",
        "file_ids",
        "summarize files",
        (r"summar(?:ize|ise|y) (?:the )?(?:files|documents) ((?:[a-z]{2,4}-\d{1,6}(?:,? and | )?)+)",),
    ),
]

_HEADS_BY_API = {}
for h in HEADS:
    _HEADS_BY_API.setdefault(h.api, h)


@dataclass
class ClauseStep:
    """One planned step parsed out of a clause."""

    api_name: str
    args: dict
    text: str
    evidence: bool = False  # consumes the previous step's result


def render_clause(api: str, args: dict, clock: datetime) -> str:
    """Canonical clause text for a call; inverse of parsing at noise level 0."""
    if api == "create_meeting":  # shares create_schedule's head, adds the room phrase
        parts, consumed = ["create a meeting"], set()
    else:
        head = _HEADS_BY_API[api]
        parts = [head.render(args, clock)]
        consumed = set(head.head_params)
    for phrase in PHRASES.get(api, []):
        p = phrase.param
        if p in consumed or p not in args:
            continue
        if phrase.const is not None and phrase.const != args[p]:
            continue
        parts.append(phrase.render(args, clock))
        consumed.add(p)
    return ", ".join(parts)


_GREEDY_TEXT = {"send_email": "body", "send_chatmsg": "content"}
_GREEDY_CUE = re.compile(r"(?:saying|content:?|body:?)\s+(?!\")(.+)", re.IGNORECASE)


def _apply_phrases(api: str, segments: list[str], args: dict, clock: datetime) -> None:
    greedy_param = _GREEDY_TEXT.get(api)
    if greedy_param and greedy_param not in args:
        # an unquoted message body swallows everything after its cue, commas included
        for i, seg in enumerate(segments):
            m = _GREEDY_CUE.fullmatch(normalize_clause(seg))
            if m:
                tail = [m.group(1)] + [normalize_clause(s) for s in segments[i + 1 :]]
                args[greedy_param] = ", ".join(tail).strip()
                segments = segments[:i]
                break
    for seg in segments:
        seg = normalize_clause(seg)
        if not seg:
            continue
        if any(re.fullmatch(p, seg, re.IGNORECASE) for p in _NOOP_SEGMENTS):
            continue
        for phrase in PHRASES.get(api, []):
            if phrase.param in args:
                continue
            matched = False
            for pat in phrase.patterns:
                m = re.fullmatch(pat, seg, re.IGNORECASE)
                if m:
                    value = phrase.convert(m, clock)
                    if value is not None:
                        args[phrase.param] = value
                        matched = True
                    break
            if matched:
                break


def _received_today(rest: str, clock: datetime) -> Optional[dict]:
    m = re.fullmatch(r"(?:that )?(?:i )?received (today|yesterday)\s*", rest, re.IGNORECASE)
    if not m:
        return None
    day = clock.date() if m.group(1).lower() == "today" else clock.date() - timedelta(days=1)
    start = datetime.combine(day, timeexpr.DAY_START)
    end = clock if day == clock.date() else datetime.combine(day, timeexpr.DAY_END)
    return {"start_time": timeexpr.iso(start), "end_time": timeexpr.iso(end)}


def _idiom_steps(clause: str, clock: datetime) -> Optional[list[ClauseStep]]:
    """Multi-step business idioms that expand into chained calls."""
    text = normalize_clause(clause)

    m = re.fullmatch(
        r"summar\w+ the emails,? (?:that )?(?:i )?received (today|yesterday)",
        text,
        re.IGNORECASE,
    )
    if m:
        window = _received_today(f"received {m.group(1)}", clock)
        search = ClauseStep("search_email", window, render_clause("search_email", window, clock))
        summ = ClauseStep("summary_email", {}, "summarize them", evidence=True)
        return [search, summ]

    m = re.fullmatch(
        r"forward the emails,? (?:that )?(?:i )?received (today|yesterday) to (.+)",
        text,
        re.IGNORECASE,
    )
    if m:
        window = _received_today(f"received {m.group(1)}", clock)
        search = ClauseStep("search_email", window, render_clause("search_email", window, clock))
        fwd_args = {
            "to": _names(m.group(2)),
            "subject": "Fwd: emails",
            "body": "See the attached emails.",
        }
        fwd = ClauseStep("send_email", fwd_args, f"forward them to {m.group(2)}", evidence=True)
        return [search, fwd]

    segments = split_segments(text)
    if not segments:
        return None
    m = re.fullmatch(
        r"(?:update|change|edit) the (?:meeting|schedule) at (.+)", segments[0], re.IGNORECASE
    )
    if m:
        when = timeexpr.parse_datetime(m.group(1), clock)
        if when is not None:
            window = {"start_time": timeexpr.iso(when), "end_time": timeexpr.iso(when)}
            find = ClauseStep(
                "find_meetings", window, render_clause("find_meetings", window, clock)
            )
            upd_args: dict = {}
            _apply_phrases("update_schedule", segments[1:], upd_args, clock)
            upd = ClauseStep(
                "update_schedule", upd_args, ", ".join(segments[1:]) or "update it", evidence=True
            )
            return [find, upd]

    m = re.fullmatch(
        r"(?:delete|cancel|remove) (?:all )?(?:the )?meetings? at (.+)", segments[0], re.IGNORECASE
    )
    if m:
        when = timeexpr.parse_datetime(m.group(1), clock)
        if when is not None:
            window = {"start_time": timeexpr.iso(when), "end_time": timeexpr.iso(when)}
            find = ClauseStep(
                "find_meetings", window, render_clause("find_meetings", window, clock)
            )
            return [find, ClauseStep("delete_schedule", {}, "delete them", evidence=True)]

    return None


# follow-up forms: surface pattern + the slots needed to resolve them from
# memory + the api/args they denote when chained onto a previous clause
@dataclass(frozen=True)
class FollowupRule:
    name: str
    api: str
    patterns: tuple[str, ...]
    slots: tuple[str, ...]
    args_fn: Callable = lambda m, clock: {}
    resolver: Callable = None  # (match, memory, clock) -> canonical clause text


def _slot(memory: SessionMemory, name: str):
    val = memory.slot(name)
    if val in (None, [], ""):
        return None
    return val


def _resolve_summarize_emails(m, memory, clock):
    ids = _slot(memory, "email_ids")
    ids_text = join_ids(ids) if ids else MISSING_MARK.format("email_ids")
    return f"summarize emails {ids_text}"


def _resolve_forward(m, memory, clock):
    ids = _slot(memory, "email_ids")
    ids_text = join_ids(ids) if ids else MISSING_MARK.format("email_ids")
    to = m.group(1).strip()
    return (
        f'send an email, to {to}, subject "Fwd: emails", '
        f'saying "See the attached emails.", attaching {ids_text}'
    )


def _resolve_send_summary(m, memory, clock):
    summary = _slot(memory, "summary") or MISSING_MARK.format("summary")
    to = m.group(1).strip()
    return f'send an email, to {to}, subject "Email summary", saying "{summary}"'


def _resolve_send_summary_chat(m, memory, clock):
    summary = _slot(memory, "summary") or MISSING_MARK.format("summary")
    return f'send a chat message, in chat {m.group(1)}, saying "{summary}"'


def _resolve_move_start(m, memory, clock):
    sid = _slot(memory, "schedule_id") or MISSING_MARK.format("schedule_id")
    when = timeexpr.parse_datetime(m.group(2), clock)
    when_text = timeexpr.fmt_datetime(when, clock) if when else m.group(2)
    return f"update schedule {sid}, set the start time to {when_text}"


def _resolve_update_it(m, memory, clock):
    sid = _slot(memory, "schedule_id") or MISSING_MARK.format("schedule_id")
    rest = m.group(1) or ""
    return f"update schedule {sid}{rest}"


def _resolve_cancel_schedule(m, memory, clock):
    sid = _slot(memory, "schedule_id") or MISSING_MARK.format("schedule_id")
    return f"delete schedule {sid}"


def _resolve_book_free_slot(m, memory, clock):
    free = _slot(memory, "free_slots")
    person = _slot(memory, "person")
    rest = (m.group(1) or "").strip()
    if not free or not person:
        mark = MISSING_MARK.format("free_slots" if not free else "person")
        return f"create a meeting {mark}"
    start = datetime.fromisoformat(free[0]["start"])
    end = min(start + timedelta(hours=1), datetime.fromisoformat(free[0]["end"]))
    clause = (
        f"create a meeting, at {timeexpr.fmt_datetime(start, clock)}, "
        f"until {timeexpr.fmt_datetime(end, clock)}, with {person}"
    )
    if rest:
        clause += f", {rest}" if not rest.startswith(",") else rest
    return clause


def _resolve_delete_first_todo(m, memory, clock):
    ids = _slot(memory, "todo_ids")
    tid = ids[0] if ids else MISSING_MARK.format("todo_ids")
    return f"delete todo {tid}"


def _resolve_remove_todo(m, memory, clock):
    tid = _slot(memory, "todo_id") or MISSING_MARK.format("todo_id")
    return f"delete todo {tid}"


def _resolve_summarize_messages(m, memory, clock):
    ids = _slot(memory, "message_ids")
    ids_text = join_ids(ids) if ids else MISSING_MARK.format("message_ids")
    return f"summarize messages {ids_text}"


def _resolve_withdraw_first(m, memory, clock):
    ids = _slot(memory, "message_ids")
    mid = ids[0] if ids else MISSING_MARK.format("message_ids")
    return f"withdraw message {mid}"


def _resolve_post_there(m, memory, clock):
    cid = _slot(memory, "chat_id") or MISSING_MARK.format("chat_id")
    return f'send a chat message, in chat {cid}, saying "{_text(m.group(1))}"'


def _resolve_summarize_files(m, memory, clock):
    ids = _slot(memory, "file_ids")
    ids_text = join_ids(ids) if ids else MISSING_MARK.format("file_ids")
    return f"summarize files {ids_text}"


FOLLOWUPS: list[FollowupRule] = [
    FollowupRule(
        "summarize_found_emails",
        "summary_email",
        (
            r"summar\w+ them",
            r"summar\w+ those emails",
            r"summar\w+ the emails,? (?:that )?(?:i )?received today",
        ),
        ("email_ids",),
        resolver=_resolve_summarize_emails,
    ),
    FollowupRule(
        "forward_found_emails",
        "send_email",
        (
            r"forward them to (.+)",
            r"forward the emails,? (?:that )?(?:i )?received today to (.+)",
            r"forward those(?: emails)? to (.+)",
        ),
        ("email_ids",),
        args_fn=lambda m, clock: {
            "to": _names(m.group(1)),
            "subject": "Fwd: emails",
            "body": "See the attached emails.",
        },
        resolver=_resolve_forward,
    ),
    FollowupRule(
        "send_summary_chat",
        "send_chatmsg",
        (rf"send (?:that|the) summary to chat ({ID_RE})",),
        ("summary",),
        args_fn=lambda m, clock: {"chat_id": m.group(1)},
        resolver=_resolve_send_summary_chat,
    ),
    FollowupRule(
        "send_summary_email",
        "send_email",
        (r"send (?:that|the) summary to (?!chat\b)([\w .]+)",),
        ("summary",),
        args_fn=lambda m, clock: {"to": _names(m.group(1)), "subject": "Email summary"},
        resolver=_resolve_send_summary,
    ),
    FollowupRule(
        "move_start_time",
        "update_schedule",
        (r"(move|push) the start time (?:up )?to (.+)",),
        ("schedule_id",),
        args_fn=lambda m, clock: (
            {"start_time": timeexpr.iso(timeexpr.parse_datetime(m.group(2), clock))}
            if timeexpr.parse_datetime(m.group(2), clock)
            else {}
        ),
        resolver=_resolve_move_start,
    ),
    FollowupRule(
        "update_it",
        "update_schedule",
        (r"update it((?:, .+)*)",),
        ("schedule_id",),
        args_fn=lambda m, clock: _update_args_from_rest(m.group(1), clock),
        resolver=_resolve_update_it,
    ),
    FollowupRule(
        "cancel_schedule",
        "delete_schedule",
        (r"cancel it", r"delete it", r"cancel that meeting", r"cancel the meeting"),
        ("schedule_id",),
        resolver=_resolve_cancel_schedule,
    ),
    FollowupRule(
        "book_free_slot",
        "create_schedule",
        (r"book a (?:meeting|schedule) in the first free slot((?:, .+)*)",),
        ("free_slots", "person"),
        args_fn=lambda m, clock: _create_args_from_rest(m.group(1), clock),
        resolver=_resolve_book_free_slot,
    ),
    FollowupRule(
        "delete_first_todo",
        "delete_todo",
        (r"delete the first one", r"delete the first todo"),
        ("todo_ids",),
        resolver=_resolve_delete_first_todo,
    ),
    FollowupRule(
        "remove_todo",
        "delete_todo",
        (r"remove it", r"drop it"),
        ("todo_id",),
        resolver=_resolve_remove_todo,
    ),
    FollowupRule(
        "summarize_messages",
        "summary_chatmsg",
        (
            r"summar\w+ those messages",
            r"summar\w+ the latest messages there",
            r"summar\w+ the latest chat",
            r"summar\w+ the messages there",
        ),
        ("message_ids",),
        resolver=_resolve_summarize_messages,
    ),
    FollowupRule(
        "withdraw_first",
        "withdraw_chatmsg",
        (r"withdraw the first one", r"withdraw the latest one"),
        ("message_ids",),
        resolver=_resolve_withdraw_first,
    ),
    FollowupRule(
        "post_there",
        "send_chatmsg",
        (r'send a message there saying "([^"]+)"', r'post there saying "([^"]+)"'),
        ("chat_id",),
        args_fn=lambda m, clock: {"content": _text(m.group(1))},
        resolver=_resolve_post_there,
    ),
    FollowupRule(
        "summarize_files",
        "summary_files",
        (r"summar\w+ those (?:files|documents)",),
        ("file_ids",),
        resolver=_resolve_summarize_files,
    ),
]


def _update_args_from_rest(rest: str, clock: datetime) -> dict:
    args: dict = {}
    if rest:
        _apply_phrases("update_schedule", split_segments(rest.lstrip(", ")), args, clock)
    return args


def _create_args_from_rest(rest: str, clock: datetime) -> dict:
    args: dict = {}
    if rest:
        _apply_phrases("create_schedule", split_segments(rest.lstrip(", ")), args, clock)
    return args


def match_followup(clause: str, clock: datetime):
    """Return (rule, match) when the clause is a context-dependent follow-up form."""
    text = normalize_clause(clause)
    for rule in FOLLOWUPS:
        for pat in rule.patterns:
            m = re.fullmatch(pat, text, re.IGNORECASE)
            if m:
                return rule, m
    return None


def match_steps(clause: str, clock: datetime, position: int = 1) -> Optional[list[ClauseStep]]:
    """Parse one clause into planned steps; None when no business form matches.

    ``position`` > 1 allows follow-up forms to bind to the previous clause's
    evidence instead of requiring memory resolution.
    """
    text = normalize_clause(clause)
    idiom = _idiom_steps(text, clock)
    if idiom is not None:
        return idiom

    if position > 1:
        fu = match_followup(text, clock)
        if fu is not None:
            rule, m = fu
            return [ClauseStep(rule.api, rule.args_fn(m, clock), text, evidence=True)]

    segments = split_segments(text)
    if not segments:
        return None
    first = normalize_clause(segments[0])
    for head in HEADS:
        for pat in head.patterns:
            m = re.fullmatch(pat, first, re.IGNORECASE)
            if m is None:
                continue
            head_args = head.extract(m, clock)
            if head_args is None:
                continue
            rest = head_args.pop("__rest__", "").strip()
            args = dict(head_args)
            api = head.api
            extra_segments = list(segments[1:])
            if rest:
                consumed_rest = False
                if api == "search_email":
                    special = _received_today(rest, clock)
                    if special is not None:
                        args.update(special)
                        consumed_rest = True
                if api == "find_schedule_status":
                    window = timeexpr.day_range(rest, clock)
                    if window is not None and timeexpr.parse_time(rest) is None:
                        args["start_time"] = timeexpr.iso(window[0])
                        args["end_time"] = timeexpr.iso(window[1])
                        consumed_rest = True
                if not consumed_rest:
                    extra_segments.insert(0, rest)
            _apply_phrases(api, extra_segments, args, clock)
            room = _parse_room(extra_segments)
            if api == "create_schedule" and room:
                api = "create_meeting"
                args.update(room)
                args.pop("location", None)  # not in create_meeting's schema
            return [ClauseStep(api, args, text)]
    return None


def _parse_room(segments: list[str]) -> dict:
    for seg in segments:
        m = re.fullmatch(rf"in room ({ID_RE})", normalize_clause(seg), re.IGNORECASE)
        if m:
            return {"room_id": m.group(1)}
    return {}


# characteristic surface vocabulary per tool, used when indexing tools for
# retrieval so canonical utterances score against their own API
API_CUES: dict[str, str] = {
    "search_email": "search emails received today from sender inbox",
    "send_email": "send an email to subject saying content forward attaching",
    "summary_email": "summarize emails summary focusing",
    "create_schedule": "create a meeting schedule at invite with titled book topic",
    "update_schedule": "update schedule set the start time title move change topic",
    "find_schedule_status": "check free time availability schedule status",
    "delete_schedule": "delete cancel schedule",
    "create_meeting": "create a meeting in room",
    "find_meetings": "find meetings starting after before",
    "find_meeting_room": "find a meeting room for people equipped",
    "search_chatmsg": "search chat messages containing sent limit",
    "send_chatmsg": "send a chat message in chat saying post mentioning",
    "withdraw_chatmsg": "withdraw recall message",
    "summary_chatmsg": "summarize messages chat",
    "search_group_chat": "find group chats named",
    "find_recent_chat_list": "list recent chats active",
    "create_todo": "add a todo titled due task",
    "find_todo": "find todos that are open done due",
    "delete_todo": "delete remove todo",
    "search_files": "search cloud files documents named of type owned shared tagged",
    "summary_files": "summarize files documents",
}


# --- context-relatedness cues -------------------------------------------------

_PRONOUN_RE = re.compile(
    r"\b(it|them|they|those|these|that one|him|her)\b", re.IGNORECASE
)
_ORDINAL_RE = re.compile(r"\bthe (first|second|third|latest|last) one\b", re.IGNORECASE)


def has_context_cue(text: str) -> bool:
    """Generic deixis/ellipsis signals, scanned outside quoted spans."""
    bare = strip_quoted(text)
    return bool(_PRONOUN_RE.search(bare) or _ORDINAL_RE.search(bare))
