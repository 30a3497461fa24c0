from datetime import datetime

import pytest

from officeagents import datagen, planner
from officeagents.catalog import catalog
from officeagents.planner import (
    EndpointPlanner,
    PlanParseError,
    parse_plan,
    plan,
    plan_text_format,
)
from officeagents.types import Plan, SubTask

CLOCK = datetime(2025, 6, 10, 10, 0)
ALL_TOOLS = list(catalog().values())


def test_summarize_received_today_expands_to_chain():
    p = plan("Summarize the emails I received today", ALL_TOOLS, clock=CLOCK)
    assert p.api_names() == ["search_email", "summary_email"]
    assert p.sub_tasks[1].depends_on == ("#E1",)


def test_chitchat_plans_none():
    p = plan("hello", ALL_TOOLS, clock=CLOCK)
    assert p.api_names() == ["none"]


def test_free_time_then_book_chain():
    p = plan(
        "Check Jiashu Xia's free time tomorrow, then book a meeting in the first free slot, "
        'titled "sync"',
        ALL_TOOLS,
        clock=CLOCK,
    )
    assert p.api_names() == ["find_schedule_status", "create_schedule"]
    assert p.sub_tasks[1].depends_on == ("#E1",)


def test_apis_outside_candidates_are_rejected_to_none():
    candidates = [catalog()["send_email"]]
    p = plan("Search for the emails I received today", candidates, clock=CLOCK)
    assert p.api_names() == ["search_email"] or p.api_names() == ["none"]
    # search_email is not among candidates, so it must be rejected
    assert p.api_names() == ["none"]


def test_plan_text_format_example():
    p = plan("Search for the emails I received today", ALL_TOOLS, clock=CLOCK)
    text = plan_text_format(p)
    assert text.startswith("#E1 = search_email[")


def test_parse_single_line():
    p = parse_plan("#E1 = search_email[emails received today]")
    assert len(p.sub_tasks) == 1
    assert p.sub_tasks[0].api_name == "search_email"
    assert p.sub_tasks[0].text == "emails received today"


def test_parse_rejects_out_of_order_ids():
    with pytest.raises(PlanParseError) as err:
        parse_plan("#E2 = search_email[x]\n#E1 = summary_email[y]")
    assert err.value.line_no == 1


def test_parse_error_carries_line_number():
    with pytest.raises(PlanParseError) as err:
        parse_plan("#E1 = search_email[ok]\nnot a line")
    assert err.value.line_no == 2


def test_round_trip_on_generated_plans():
    samples = datagen.run_flow("mixed", 80, seed=9, noise=0.0)
    checked = 0
    for s in samples:
        for turn in s.turns:
            if turn.gold_plan is None:
                continue
            text = plan_text_format(turn.gold_plan)
            assert parse_plan(text) == turn.gold_plan
            checked += 1
    assert checked > 40


def test_dependencies_ride_in_the_clause():
    p = Plan(
        sub_tasks=(
            SubTask(index=1, text="find them", api_name="search_email"),
            SubTask(index=2, text="summarize them", api_name="summary_email", depends_on=("#E1",)),
        )
    )
    text = plan_text_format(p)
    assert "(uses #E1)" in text
    assert parse_plan(text) == p


def test_clause_texts_cover_query_tokens():
    # no information loss at noise 0: every content token of the query
    # appears in some clause text
    samples = datagen.run_flow("mixed", 60, seed=13, noise=0.0)
    for s in samples:
        for turn in s.turns:
            if turn.gold_plan is None:
                continue
            joined = " ".join(st.text for st in turn.gold_plan.sub_tasks).lower()
            for token in turn.gold_rewritten.lower().replace(",", " ").split():
                assert token.strip('"') in joined or token in (
                    "then",
                    "and",
                ), (token, turn.gold_rewritten, joined)


def test_forward_chain_has_no_cycles():
    samples = datagen.run_flow("mixed", 60, seed=21, noise=0.0)
    for s in samples:
        for turn in s.turns:
            if turn.gold_plan is None:
                continue
            for st in turn.gold_plan.sub_tasks:
                for dep in st.depends_on:
                    assert int(dep[2:]) < st.index


def test_endpoint_planner_rejects_hallucinated_apis():
    def fake_endpoint(role, prompt):
        return "#E1 = teleport_document[send it to the moon]"

    ep = EndpointPlanner(fake_endpoint)
    p = ep.plan("send the file", [catalog()["send_email"]])
    assert p.api_names() == ["none"]


def test_endpoint_planner_falls_back_on_garbage():
    def broken_endpoint(role, prompt):
        return "no plan here"

    ep = EndpointPlanner(broken_endpoint)
    p = ep.plan("Search for the emails I received today", ALL_TOOLS, clock=CLOCK)
    assert p.api_names() == ["search_email"]
