from datetime import datetime

import pytest

from officeagents import grammar as g
from officeagents.types import SessionMemory

CLOCK = datetime(2025, 6, 10, 10, 0)

# full-argument canonical round-trip cases, one per API
ROUND_TRIPS = [
    ("search_email", {
        "sender": "Dana Li", "recipient": "me", "cc": "Priya Nair",
        "subject_keywords": "budget", "body_keywords": "travel", "folder": "inbox",
        "has_attachment": False, "start_time": "2025-06-04T15:45",
        "end_time": "2025-06-10T09:00", "read_status": "unread", "limit": 3,
    }),
    ("send_email", {
        "to": ["Dana Li", "Priya Nair"], "cc": ["Tom Aldren"], "subject": "Offsite agenda",
        "body": "Agenda is final, see the attachment.", "attachments": ["em-0001", "fl-0002"],
    }),
    ("summary_email", {"email_ids": ["em-0001", "em-0002"], "focus": "deadlines"}),
    ("create_schedule", {
        "title": "budget sync", "start_time": "2025-06-12T09:30",
        "end_time": "2025-06-12T10:30", "participants": ["Dana Li"], "location": "room Aurora",
    }),
    ("update_schedule", {
        "schedule_id": "sch-0003", "title": "new name", "start_time": "2025-06-11T14:00",
        "end_time": "2025-06-11T15:00", "participants": ["Marcus Webb", "Dana Li"],
        "location": "east wing", "remind_before": 15,
    }),
    ("find_schedule_status", {
        "person": "Jiashu Xia", "start_time": "2025-06-11T00:00", "end_time": "2025-06-11T23:59",
    }),
    ("delete_schedule", {"schedule_id": "sch-0004"}),
    ("create_meeting", {
        "title": "sync", "start_time": "2025-06-20T10:00", "end_time": "2025-06-20T11:00",
        "participants": ["Yuki Tanaka"], "room_id": "rm-0002",
    }),
    ("find_meetings", {"start_time": "2025-06-10T15:00", "end_time": "2025-06-10T15:00"}),
    ("find_meeting_room", {
        "capacity": 8, "equipment": ["screen", "whiteboard"],
        "start_time": "2025-06-20T09:00", "end_time": "2025-06-20T10:00", "location": "floor 3",
    }),
    ("search_chatmsg", {
        "chat_id": "gc-0001", "sender": "Dana Li", "keywords": "deadline",
        "start_time": "2025-06-02T08:00", "end_time": "2025-06-08T18:00",
        "mentions": "Marcus Webb", "limit": 5,
    }),
    ("send_chatmsg", {"chat_id": "gc-0002", "content": "The report is ready.", "mentions": ["Priya Nair"]}),
    ("withdraw_chatmsg", {"message_id": "msg-0007", "chat_id": "gc-0001"}),
    ("summary_chatmsg", {"message_ids": ["msg-0001", "msg-0004"]}),
    ("search_group_chat", {"keywords": "alpha"}),
    ("find_recent_chat_list", {"start_time": "2025-06-01T00:00", "end_time": "2025-06-10T10:00"}),
    ("create_todo", {"title": "order monitors", "due_time": "2025-06-13T17:00"}),
    ("find_todo", {"keywords": "budget", "status": "open", "due_before": "2025-06-12T00:00"}),
    ("delete_todo", {"todo_id": "td-0002"}),
    ("search_files", {
        "name_keywords": "budget", "content_keywords": "quarter", "file_type": "sheet",
        "owner": "Dana Li", "shared_by": "Dana Li", "folder": "/finance", "tags": ["budget"],
        "created_start": "2025-05-20T09:00", "created_end": "2025-05-20T09:00",
        "modified_start": "2025-06-09T14:30", "modified_end": "2025-06-09T14:30",
        "min_size": 420, "limit": 2,
    }),
    ("summary_files", {"file_ids": ["fl-0001", "fl-0003"]}),
]


@pytest.mark.parametrize("api,args", ROUND_TRIPS, ids=[a for a, _ in ROUND_TRIPS])
def test_render_parse_round_trip(api, args):
    text = g.render_clause(api, args, CLOCK)
    steps = g.match_steps(text, CLOCK)
    assert steps is not None and len(steps) == 1
    assert steps[0].api_name == api
    assert steps[0].args == args


IDIOMS = [
    (
        "Search for the emails I received today",
        [("search_email", {"start_time": "2025-06-10T00:00", "end_time": "2025-06-10T10:00"})],
    ),
    (
        "Summarize the emails I received today",
        [("search_email", {"start_time": "2025-06-10T00:00", "end_time": "2025-06-10T10:00"}),
         ("summary_email", {})],
    ),
    (
        "Forward the emails received today to Jiashu Xia",
        [("search_email", {"start_time": "2025-06-10T00:00", "end_time": "2025-06-10T10:00"}),
         ("send_email", {"to": ["Jiashu Xia"], "subject": "Fwd: emails",
                         "body": "See the attached emails."})],
    ),
    (
        "Create a meeting at 3 PM today, the topic is project discussion, invite Jiashu Xia",
        [("create_schedule", {"start_time": "2025-06-10T15:00", "title": "project discussion",
                              "participants": ["Jiashu Xia"]})],
    ),
    (
        "Update the meeting at 3 PM today, change the topic to product discussion",
        [("find_meetings", {"start_time": "2025-06-10T15:00", "end_time": "2025-06-10T15:00"}),
         ("update_schedule", {"title": "product discussion"})],
    ),
    (
        "Delete all meetings at 3 PM today",
        [("find_meetings", {"start_time": "2025-06-10T15:00", "end_time": "2025-06-10T15:00"}),
         ("delete_schedule", {})],
    ),
    (
        "Check Jiashu Xia's free time tomorrow?",
        [("find_schedule_status", {"person": "Jiashu Xia", "start_time": "2025-06-11T00:00",
                                   "end_time": "2025-06-11T23:59"})],
    ),
]


@pytest.mark.parametrize("text,expected", IDIOMS, ids=[t[:30] for t, _ in IDIOMS])
def test_business_idioms(text, expected):
    steps = g.match_steps(text, CLOCK)
    assert steps is not None
    assert [(s.api_name, s.args) for s in steps] == expected


def test_send_email_greedy_content_idiom():
    text = (
        "Send an email to Jiashu Xia, content: Salaries for December have been issued, "
        "please check!"
    )
    steps = g.match_steps(text, CLOCK)
    assert steps[0].api_name == "send_email"
    assert steps[0].args == {
        "to": ["Jiashu Xia"],
        "body": "Salaries for December have been issued, please check",
    }


def test_chitchat_matches_nothing():
    assert g.match_steps("hello there", CLOCK) is None
    assert g.match_steps("good morning", CLOCK) is None


def test_split_segments_respects_quotes():
    segs = g.split_segments('send an email, saying "a, b, c", to Dana Li')
    assert segs == ["send an email", 'saying "a, b, c"', "to Dana Li"]


def test_split_clauses():
    assert g.split_clauses("do this, then do that") == ["do this", "do that"]
    assert g.split_clauses("one; two") == ["one", "two"]
    assert g.split_clauses("single clause, with comma") == ["single clause, with comma"]


def test_followup_requires_position_or_memory():
    # as a second clause, a follow-up binds to evidence
    steps = g.match_steps("summarize them", CLOCK, position=2)
    assert steps[0].api_name == "summary_email"
    assert steps[0].evidence
    # as a first clause it is not a self-contained business form
    assert g.match_steps("summarize them", CLOCK, position=1) is None


def test_followup_resolution_with_slots():
    memory = SessionMemory(entity_slots={"email_ids": ["em-0001", "em-0002"]})
    rule, m = g.match_followup("summarize them", CLOCK)
    assert rule.api == "summary_email"
    assert rule.resolver(m, memory, CLOCK) == "summarize emails em-0001 and em-0002"


def test_followup_resolution_missing_slot_carries_marker():
    rule, m = g.match_followup("cancel it", CLOCK)
    out = rule.resolver(m, SessionMemory(), CLOCK)
    assert "<missing:schedule_id>" in out


def test_move_start_time_resolution():
    memory = SessionMemory(entity_slots={"schedule_id": "sch-0009"})
    rule, m = g.match_followup("Move the start time up to 2 PM", CLOCK)
    out = rule.resolver(m, memory, CLOCK)
    assert out == "update schedule sch-0009, set the start time to today 2 PM"


def test_context_cues():
    assert g.has_context_cue("move it to 2 PM")
    assert g.has_context_cue("delete the first one")
    assert not g.has_context_cue("delete todo td-0001")
    # quoted spans are ignored
    assert not g.has_context_cue('send an email saying "leave it as is"')


def test_default_subject_derivation():
    assert g.default_subject("Salaries are out, please check!") == "Salaries are out"
    assert g.default_subject("One liner") == "One liner"


def test_canonical_forms_have_no_context_cues():
    for api, args in ROUND_TRIPS:
        text = g.render_clause(api, args, CLOCK)
        assert not g.has_context_cue(text), (api, text)
