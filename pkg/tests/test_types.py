import pytest

from officeagents.types import (
    DialogueTurn,
    Plan,
    Session,
    SessionMemory,
    SubTask,
    ToolCall,
    ToolResult,
    error_result,
    ok_result,
    slots_from_result,
    update_memory,
)


def make_turn(calls=(), related=False, rewritten=None, query="hello"):
    return DialogueTurn(
        user_query=query,
        related=related,
        rewritten_query=rewritten if rewritten is not None else query,
        intent="wps365" if calls else "chitchat",
        plan=None,
        calls=tuple(calls),
        reply="ok",
        timestamp="2025-06-10T10:00",
    )


def test_tool_result_invariants():
    with pytest.raises(ValueError):
        ToolResult(status="ok")  # ok without payload
    with pytest.raises(ValueError):
        ToolResult(status="error", payload={"kind": "x"})


def test_unrelated_turn_must_keep_query():
    with pytest.raises(ValueError):
        make_turn(related=False, rewritten="changed")


def test_subtask_rejects_forward_dependencies():
    with pytest.raises(ValueError):
        SubTask(index=1, text="x", api_name="a", depends_on=("#E1",))
    with pytest.raises(ValueError):
        SubTask(index=2, text="x", api_name="a", depends_on=("#E3",))


def test_plan_requires_consecutive_evidence_ids():
    good = Plan(
        sub_tasks=(
            SubTask(index=1, text="a", api_name="x"),
            SubTask(index=2, text="b", api_name="y"),
        )
    )
    assert good.api_names() == ["x", "y"]
    with pytest.raises(ValueError):
        Plan(sub_tasks=(SubTask(index=2, text="a", api_name="x"),))


def test_serialization_round_trips():
    call = ToolCall("search_email", {"folder": "inbox", "limit": 2})
    result = ok_result("emails", records=[{"id": "em-1"}])
    turn = make_turn(calls=[(call, result)], query="find emails")
    plan = Plan(
        sub_tasks=(
            SubTask(index=1, text="find emails", api_name="search_email"),
            SubTask(index=2, text="summarize them", api_name="summary_email", depends_on=("#E1",)),
        )
    )
    memory = update_memory(SessionMemory(), turn)
    session = Session(id="s-1", turns=[turn], memory=memory)

    assert ToolCall.from_dict(call.to_dict()) == call
    assert ToolResult.from_dict(result.to_dict()) == result
    assert DialogueTurn.from_dict(turn.to_dict()) == turn
    assert Plan.from_dict(plan.to_dict()) == plan
    assert SessionMemory.from_dict(memory.to_dict()).to_dict() == memory.to_dict()
    assert Session.from_dict(session.to_dict()).to_dict() == session.to_dict()


def test_error_result_round_trip():
    err = error_result("unknown_email_id", "gone")
    assert ToolResult.from_dict(err.to_dict()) == err


def test_slot_extraction_rules():
    call = ToolCall("create_schedule", {"title": "x", "participants": ["Dana Li"]})
    result = ok_result("schedule", records=[{"id": "sch-42"}])
    slots = slots_from_result(call, result)
    assert slots["schedule_id"] == "sch-42"
    assert slots["person"] == "Dana Li"

    emails = ok_result("emails", records=[{"id": "a"}, {"id": "b"}])
    assert slots_from_result(ToolCall("search_email", {}), emails)["email_ids"] == ["a", "b"]

    status = ToolResult(
        status="ok",
        payload={
            "kind": "schedule_status",
            "person": "Jiashu Xia",
            "free": [{"start": "s", "end": "e"}],
            "busy": [{"id": "sch-2"}],
        },
    )
    slots = slots_from_result(ToolCall("find_schedule_status", {"person": "Jiashu Xia"}), status)
    assert slots["busy_ids"] == ["sch-2"]
    assert slots["schedule_id"] == "sch-2"


def test_error_results_contribute_no_slots():
    assert slots_from_result(ToolCall("search_email", {}), error_result("x", "y")) == {}


def test_update_memory_sets_last_call_and_trims():
    memory = SessionMemory(window_size=2)
    call = ToolCall("create_todo", {"title": "t"})
    result = ok_result("todo", records=[{"id": "td-9"}])
    for _ in range(3):
        memory = update_memory(memory, make_turn(calls=[(call, result)], query="add todo"))
    assert memory.last_call == (call, result)
    assert memory.entity_slots["todo_id"] == "td-9"
    assert len(memory.turn_window) == 2


def test_delete_clears_matching_slot():
    memory = SessionMemory(entity_slots={"schedule_id": "sch-1"})
    deleted = ok_result("deleted", records=[{"id": "sch-1"}])
    memory = update_memory(memory, make_turn(calls=[(ToolCall("delete_schedule", {"schedule_id": "sch-1"}), deleted)], query="del"))
    assert "schedule_id" not in memory.entity_slots
