import threading

import pytest

from officeagents.orchestrator import (
    Orchestrator,
    WorkerRegistration,
    WorkerResult,
)
from officeagents.sim import OfficeSimulator


def test_one_turn_per_message(orch, session):
    orch.handle_message(session.id, "hello there")
    orch.handle_message(session.id, "Search for the emails I received today")
    assert len(orch.get_session(session.id).turns) == 2


def test_one_turn_even_on_worker_crash(sim, shared_index):
    orch = Orchestrator(sim, index=shared_index, register_defaults=False)

    def exploding(request):
        raise RuntimeError("worker bug")

    orch.register_worker(WorkerRegistration("wps365", exploding, "complex"))
    orch.register_worker(
        WorkerRegistration("chitchat", lambda r: WorkerResult(reply="hi"), "simple")
    )
    s = orch.create_session()
    trace = orch.handle_message(s.id, "Search for the emails I received today")
    assert len(orch.get_session(s.id).turns) == 1
    assert "Sorry" in trace.turn.reply
    # session still usable
    orch.handle_message(s.id, "hello there")
    assert len(orch.get_session(s.id).turns) == 2


def test_duplicate_worker_registration_rejected(orch):
    with pytest.raises(ValueError):
        orch.register_worker(
            WorkerRegistration("wps365", lambda r: WorkerResult(reply=""), "complex")
        )


def test_default_workers_present(orch):
    assert sorted(orch.worker_labels) == [
        "chitchat",
        "online_search",
        "text_to_image",
        "wps365",
    ]


def test_routing_is_pure_function_of_intent(orch, session):
    t1 = orch.handle_message(session.id, "hello there")
    t2 = orch.handle_message(session.id, "ok great")
    assert t1.worker == t2.worker == "chitchat"
    t3 = orch.handle_message(session.id, "draw a cat")
    assert t3.worker == "text_to_image"
    t4 = orch.handle_message(session.id, "what's the weather in Beijing")
    assert t4.worker == "online_search"


def test_memory_slots_after_create(orch, session):
    orch.handle_message(
        session.id,
        "Create a meeting at 3 PM today, the topic is project discussion, invite Jiashu Xia",
    )
    memory = orch.get_session(session.id).memory
    assert memory.entity_slots["schedule_id"] == "sch-0009"
    assert memory.entity_slots["person"] == "Jiashu Xia"


def test_memory_slots_after_search(orch, session):
    orch.handle_message(session.id, "Search for the emails I received today")
    memory = orch.get_session(session.id).memory
    assert sorted(memory.entity_slots["email_ids"]) == ["em-0001", "em-0002", "em-0003"]


def test_turn_without_calls_keeps_slots(orch, session):
    orch.handle_message(session.id, "Search for the emails I received today")
    before = dict(orch.get_session(session.id).memory.entity_slots)
    orch.handle_message(session.id, "hello there")
    memory = orch.get_session(session.id).memory
    assert memory.entity_slots == before
    assert len(memory.turn_window) == 2


def test_window_trims_to_configured_size(sim, shared_index):
    orch = Orchestrator(sim, index=shared_index, memory_window=3)
    s = orch.create_session()
    for i in range(5):
        orch.handle_message(s.id, "hello there")
    assert len(orch.get_session(s.id).memory.turn_window) == 3
    assert len(orch.get_session(s.id).turns) == 5


def test_last_call_matches_final_executed_call(orch, session):
    orch.handle_message(session.id, "Summarize the emails I received today")
    memory = orch.get_session(session.id).memory
    call, result = memory.last_call
    assert call.api_name == "summary_email"
    assert result.ok
    turn = orch.get_session(session.id).turns[-1]
    assert turn.calls[-1][0] == call


def test_stage_order(orch, session):
    trace = orch.handle_message(session.id, "Search for the emails I received today")
    names = [s["stage"] for s in trace.stages]
    assert names == ["rewrite", "route", "worker", "reply"]


def test_empty_message_rejected(orch, session):
    with pytest.raises(ValueError):
        orch.handle_message(session.id, "   ")


def test_unknown_session_rejected(orch):
    with pytest.raises(KeyError):
        orch.handle_message("nope", "hello")


def test_clarification_surfaces_missing_params(orch, session):
    trace = orch.handle_message(session.id, "send an email, to Dana Li")
    assert set(trace.clarification) == {"subject", "body"}
    assert "need" in trace.turn.reply


def test_concurrent_sessions_never_lose_turns(shared_index):
    sim = OfficeSimulator("f1", 7)
    orch = Orchestrator(sim, index=shared_index)
    sessions = [orch.create_session() for _ in range(4)]
    per_session = 6
    errors = []

    def drive(session):
        try:
            for i in range(per_session):
                orch.handle_message(session.id, "hello there")
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=drive, args=(s,)) for s in sessions]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    for s in sessions:
        assert len(orch.get_session(s.id).turns) == per_session
        assert len(orch.traces[s.id]) == per_session


def test_fault_recovery_trace(orch, session, sim):
    sim.inject_fault("search_email", "fail_once")
    trace = orch.handle_message(session.id, "Search for the emails I received today")
    assert trace.turn.calls[-1][1].ok
    assert [r.action for r in trace.repairs] == ["retried"]
