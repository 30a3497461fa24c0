from datetime import datetime

import pytest
from hypothesis import given, strategies as st

from officeagents import datagen
from officeagents.rewrite import (
    EndpointRewriter,
    RuleRewriter,
    distribute_intent,
    parse_rewrite_reply,
    relate,
    rewrite,
)
from officeagents.types import SessionMemory

CLOCK = datetime(2025, 6, 10, 10, 0)
REWRITER = RuleRewriter()


def memory_with(**slots):
    m = SessionMemory(entity_slots=slots)
    return m


@given(st.text(min_size=1, max_size=60).filter(lambda s: s.strip()))
def test_empty_memory_is_identity(query):
    out = rewrite(SessionMemory(), query, CLOCK)
    assert out.related is False
    assert out.rewritten == query


def test_relate_true_for_field_delta_after_schedule():
    memory = memory_with(schedule_id="sch-0009")
    assert relate(memory, "Move the start time up to 2 PM", CLOCK) is True


def test_relate_false_for_self_contained_send():
    memory = memory_with(email_ids=["em-0001"])
    query = "Send an email to Jiashu Xia, content: the numbers are out"
    assert relate(memory, query, CLOCK) is False


def test_relate_false_on_empty_memory_for_anything():
    assert relate(SessionMemory(), "Move the start time up to 2 PM", CLOCK) is False


def test_rewrite_resolves_found_email_ids():
    memory = memory_with(email_ids=["em-0003", "em-0001"])
    out = rewrite(memory, "Summarize the emails I received today", CLOCK)
    assert out.related is True
    assert out.rewritten == "summarize emails em-0003 and em-0001"
    assert out.intent == "wps365"


def test_rewrite_move_start_template():
    memory = memory_with(schedule_id="sch-0009")
    out = rewrite(memory, "Move the start time up to 2 PM", CLOCK)
    assert out.rewritten == "update schedule sch-0009, set the start time to today 2 PM"


def test_unresolvable_referent_carries_placeholder():
    memory = memory_with(summary="ignored")  # non-empty memory, wrong slot kind
    out = rewrite(memory, "cancel it", CLOCK)
    assert out.related is True
    assert "<missing:schedule_id>" in out.rewritten


def test_generic_cue_without_template_is_marked():
    memory = memory_with(schedule_id="sch-0001")
    out = rewrite(memory, "what about them", CLOCK)
    assert out.related is True
    assert "<missing:" in out.rewritten


def test_multi_clause_queries_are_self_contained():
    memory = memory_with(email_ids=["em-0001"])
    query = "search emails, from Dana Li, then summarize them"
    out = rewrite(memory, query, CLOCK)
    assert out.related is False
    assert out.rewritten == query


@pytest.mark.parametrize(
    "query,expected",
    [
        ("Search for the emails I received today", "wps365"),
        ("draw a cat", "text_to_image"),
        ("what's the weather in Beijing", "online_search"),
        ("hello there", "chitchat"),
        ("check Dana Li's availability tomorrow", "wps365"),
    ],
)
def test_intent_distribution(query, expected):
    assert distribute_intent(query) == expected


def _corpus_queries():
    samples = datagen.run_flow("mixed", 40, seed=11, noise=0.0)
    out = []
    for s in samples:
        sim_memory = SessionMemory()
        for turn in s.turns:
            out.append((sim_memory, turn.user_text))
    return out


def test_idempotence_on_generated_corpus():
    samples = datagen.run_flow("mixed", 60, seed=5, noise=0.0)
    for s in samples:
        from officeagents.replay import replay_sample

        # idempotence: rewriting the rewritten text changes nothing
        for turn in s.turns:
            memory = SessionMemory(entity_slots={"schedule_id": "sch-1", "email_ids": ["em-1"]})
            once = REWRITER.rewrite(memory, turn.gold_rewritten, CLOCK)
            twice = REWRITER.rewrite(memory, once.rewritten, CLOCK)
            assert twice.rewritten == once.rewritten


def test_determinism():
    memory = memory_with(schedule_id="sch-0009")
    a = rewrite(memory, "Move the start time up to 2 PM", CLOCK)
    b = rewrite(memory, "Move the start time up to 2 PM", CLOCK)
    assert a == b


def test_rewrite_rejects_empty_query():
    with pytest.raises(ValueError):
        rewrite(SessionMemory(), "   ", CLOCK)


def test_parse_rewrite_reply_good():
    out = parse_rewrite_reply(
        "related: yes\nrewritten: summarize emails em-1\nintent: wps365", "orig"
    )
    assert out.related and out.rewritten == "summarize emails em-1"


def test_parse_rewrite_reply_unrelated_forces_identity():
    out = parse_rewrite_reply("related: no\nrewritten: something else", "orig")
    assert out.related is False and out.rewritten == "orig"


def test_parse_rewrite_reply_malformed_is_none():
    assert parse_rewrite_reply("gibberish", "orig") is None


def test_endpoint_rewriter_falls_back_to_identity():
    calls = []

    def broken_endpoint(role, prompt):
        calls.append(role)
        raise TimeoutError("no backend")

    rw = EndpointRewriter(broken_endpoint)
    out = rw.rewrite(SessionMemory(), "Search for the emails I received today", CLOCK)
    assert out.related is False
    assert out.rewritten == "Search for the emails I received today"
    assert len(calls) == 2  # one attempt plus one retry


def test_endpoint_rewriter_parses_echo_double():
    def echo_endpoint(role, prompt):
        return "related: no\nrewritten: ignored\nintent: chitchat"

    rw = EndpointRewriter(echo_endpoint)
    out = rw.rewrite(SessionMemory(), "hello", CLOCK)
    assert out.intent == "chitchat" and out.rewritten == "hello"
