"""End-to-end business scripts: the nine email and schedule walkthroughs.

Each script replays its utterances through a fresh orchestrator over a fresh
fixture-seeded simulator, then diffs simulator state and traces against the
expected effect. Scripts accept optional fault injection so the recovery
behavior is exercisable from the CLI and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Optional

from .orchestrator import Orchestrator, TurnTrace
from .sim import OfficeSimulator

FIXTURE = "f1"
SEED = 7


@dataclass
class ScenarioResult:
    name: str
    passed: bool
    failures: list[str] = field(default_factory=list)
    traces: list[TurnTrace] = field(default_factory=list)


@dataclass(frozen=True)
class Scenario:
    name: str
    turns: tuple[str, ...]
    check: Callable[[OfficeSimulator, list[TurnTrace]], list[str]]
    uses_apis: tuple[str, ...] = ()  # call order, for fault-injection sweeps


def _calls(traces: list[TurnTrace]) -> list:
    return [(c, r) for tr in traces for c, r in tr.turn.calls]


def _check_email_search(sim, traces):
    failures = []
    calls = _calls(traces)
    if len(calls) != 1 or calls[0][0].api_name != "search_email":
        failures.append(f"expected one search_email call, got {[c.api_name for c, _ in calls]}")
        return failures
    result = calls[0][1]
    if not result.ok:
        failures.append(f"search_email failed: {result.error.code}")
        return failures
    ids = [r["id"] for r in result.payload["records"]]
    if sorted(ids) != ["em-0001", "em-0002", "em-0003"]:
        failures.append(f"expected the three fixture emails from today, got {ids}")
    return failures


def _check_email_summarize(sim, traces):
    failures = []
    last = traces[-1].turn
    if not last.related:
        failures.append("follow-up should be context-related")
    apis = [c.api_name for c, _ in last.calls]
    if apis != ["summary_email"]:
        failures.append(f"expected one summary_email call, got {apis}")
    elif not last.calls[0][1].ok or "3 emails." not in last.reply:
        failures.append(f"summary reply wrong: {last.reply!r}")
    return failures


def _check_email_forward(sim, traces):
    failures = []
    last = traces[-1].turn
    apis = [c.api_name for c, _ in last.calls]
    if apis != ["send_email"]:
        failures.append(f"expected one send_email call, got {apis}")
        return failures
    call, result = last.calls[0]
    if not result.ok:
        failures.append(f"send_email failed: {result.error}")
        return failures
    sent = result.payload["records"][0]
    if sent["recipients"] != ["Jiashu Xia"]:
        failures.append(f"wrong recipients {sent['recipients']}")
    if sorted(call.args.get("attachments", [])) != ["em-0001", "em-0002", "em-0003"]:
        failures.append(f"forwarded attachments wrong: {call.args.get('attachments')}")
    if sim.stores["emails"].get(sent["id"]) is None:
        failures.append("sent email not in the store")
    return failures


def _check_email_send(sim, traces):
    failures = []
    call, result = _calls(traces)[-1]
    if call.api_name != "send_email" or not result.ok:
        failures.append("send_email did not succeed")
        return failures
    sent = result.payload["records"][0]
    if sent["recipients"] != ["Jiashu Xia"]:
        failures.append(f"wrong recipients {sent['recipients']}")
    if sent["body"] != "Salaries for December have been issued, please check":
        failures.append(f"wrong body {sent['body']!r}")
    if sent["subject"] != "Salaries for December have been issued":
        failures.append(f"derived subject wrong: {sent['subject']!r}")
    return failures


def _created_schedule(sim):
    return next(
        (s for s in sim.stores["schedules"].values() if s.title == "project discussion"), None
    )


def _check_schedule_create(sim, traces):
    failures = []
    rec = _created_schedule(sim)
    if rec is None:
        failures.append("schedule 'project discussion' not created")
        return failures
    if rec.start_time != datetime(2025, 6, 10, 15, 0):
        failures.append(f"start time {rec.start_time} != today 15:00")
    if rec.participants != ["Jiashu Xia"]:
        failures.append(f"participants {rec.participants}")
    return failures


def _check_schedule_update_followup(sim, traces):
    failures = []
    rec = _created_schedule(sim)
    if rec is None:
        return ["schedule 'project discussion' not created"]
    if not traces[-1].turn.related:
        failures.append("the move-start follow-up should be context-related")
    if rec.start_time != datetime(2025, 6, 10, 14, 0):
        failures.append(f"start time {rec.start_time} != today 14:00 after the follow-up")
    return failures


def _check_schedule_update_specified(sim, traces):
    failures = []
    rec = sim.stores["schedules"].get("sch-0001")
    if rec is None:
        failures.append("fixture meeting sch-0001 missing")
    elif rec.title != "product discussion":
        failures.append(f"title {rec.title!r} != 'product discussion'")
    return failures


def _check_schedule_delete(sim, traces):
    failures = []
    if "sch-0001" in sim.stores["schedules"]:
        failures.append("the 3 PM meeting sch-0001 should be deleted")
    return failures


def _check_schedule_free_time(sim, traces):
    failures = []
    call, result = _calls(traces)[-1]
    if call.api_name != "find_schedule_status" or not result.ok:
        failures.append("find_schedule_status did not succeed")
        return failures
    free = [(s["start"], s["end"]) for s in result.payload["free"]]
    expected = [
        ("2025-06-11T00:00", "2025-06-11T09:00"),
        ("2025-06-11T10:00", "2025-06-11T14:00"),
        ("2025-06-11T15:30", "2025-06-11T23:59"),
    ]
    if free != expected:
        failures.append(f"free slots {free} != {expected}")
    if "is free" not in traces[-1].turn.reply:
        failures.append(f"reply does not state availability: {traces[-1].turn.reply!r}")
    return failures


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in [
        Scenario(
            "email_search",
            ("Search for the emails I received today",),
            _check_email_search,
            uses_apis=("search_email",),
        ),
        Scenario(
            "email_summarize",
            (
                "Search for the emails I received today",
                "Summarize the emails I received today",
            ),
            _check_email_summarize,
            uses_apis=("search_email", "summary_email"),
        ),
        Scenario(
            "email_forward",
            (
                "Search for the emails I received today",
                "Forward the emails received today to Jiashu Xia",
            ),
            _check_email_forward,
            uses_apis=("search_email", "send_email"),
        ),
        Scenario(
            "email_send",
            (
                "Send an email to Jiashu Xia, content: Salaries for December have been issued, "
                "please check!",
            ),
            _check_email_send,
            uses_apis=("send_email",),
        ),
        Scenario(
            "schedule_create",
            (
                "Create a meeting at 3 PM today, the topic is project discussion, "
                "invite Jiashu Xia",
            ),
            _check_schedule_create,
            uses_apis=("create_schedule",),
        ),
        Scenario(
            "schedule_update_followup",
            (
                "Create a meeting at 3 PM today, the topic is project discussion, "
                "invite Jiashu Xia",
                "Move the start time up to 2 PM",
            ),
            _check_schedule_update_followup,
            uses_apis=("create_schedule", "update_schedule"),
        ),
        Scenario(
            "schedule_update_specified",
            ("Update the meeting at 3 PM today, change the topic to product discussion",),
            _check_schedule_update_specified,
            uses_apis=("find_meetings", "update_schedule"),
        ),
        Scenario(
            "schedule_delete",
            ("Delete all meetings at 3 PM today",),
            _check_schedule_delete,
            uses_apis=("find_meetings", "delete_schedule"),
        ),
        Scenario(
            "schedule_free_time",
            ("Check Jiashu Xia's free time tomorrow?",),
            _check_schedule_free_time,
            uses_apis=("find_schedule_status",),
        ),
    ]
}


def run_scenario(
    name: str,
    fault: Optional[tuple[str, str]] = None,
    orchestrator_kwargs: dict | None = None,
) -> ScenarioResult:
    """Replay one script on a fresh fixture; optionally inject (api, mode) first."""
    scenario = SCENARIOS.get(name)
    if scenario is None:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    sim = OfficeSimulator(FIXTURE, SEED)
    orch = Orchestrator(sim, **(orchestrator_kwargs or {}))
    if fault is not None:
        sim.inject_fault(*fault)
    session = orch.create_session()
    traces = [orch.handle_message(session.id, text) for text in scenario.turns]
    failures = scenario.check(sim, traces)
    return ScenarioResult(name=name, passed=not failures, failures=failures, traces=traces)


def run_all(fault: Optional[tuple[str, str]] = None) -> list[ScenarioResult]:
    return [run_scenario(name, fault=fault) for name in SCENARIOS]
