import pytest

from officeagents.catalog import (
    CatalogError,
    ParamSpec,
    ToolSpec,
    catalog,
    get_tool,
    param_count,
    validate_call,
)
from officeagents.types import ToolCall

# the authoritative per-tool parameter counts, in catalog (scenario) order
EXPECTED_COUNTS = {
    "search_email": 11,
    "send_email": 5,
    "summary_email": 2,
    "create_schedule": 5,
    "update_schedule": 7,
    "find_schedule_status": 3,
    "delete_schedule": 1,
    "create_meeting": 5,
    "find_meetings": 2,
    "find_meeting_room": 5,
    "search_chatmsg": 7,
    "send_chatmsg": 3,
    "withdraw_chatmsg": 2,
    "summary_chatmsg": 1,
    "search_group_chat": 1,
    "find_recent_chat_list": 2,
    "create_todo": 2,
    "find_todo": 3,
    "delete_todo": 1,
    "search_files": 13,
    "summary_files": 1,
}


def test_catalog_has_exactly_21_tools():
    assert len(catalog()) == 21


def test_catalog_order_matches_scenario_grouping():
    assert list(catalog()) == list(EXPECTED_COUNTS)


@pytest.mark.parametrize("name,count", EXPECTED_COUNTS.items())
def test_param_counts(name, count):
    assert param_count(name) == count


def test_scenario_sizes():
    by_scenario = {}
    for spec in catalog().values():
        by_scenario.setdefault(spec.scenario, []).append(spec.name)
    assert {k: len(v) for k, v in by_scenario.items()} == {
        "Email": 3,
        "Schedule": 4,
        "Meeting": 3,
        "Chat": 6,
        "Todo": 3,
        "OnlineDocuments": 2,
    }


def test_param_names_unique_within_tool():
    for spec in catalog().values():
        names = spec.param_names
        assert len(set(names)) == len(names)


def test_enum_params_carry_values():
    for spec in catalog().values():
        for p in spec.params:
            assert (p.value_kind == "enum") == bool(p.enum_values)


def test_paramspec_enum_invariant_enforced():
    with pytest.raises(CatalogError):
        ParamSpec(name="x", description="d", value_kind="enum", enum_values=None)
    with pytest.raises(CatalogError):
        ParamSpec(name="x", description="d", value_kind="string", enum_values=("a",))


def test_validate_single_required_param_ok():
    report = validate_call(
        get_tool("delete_schedule"), ToolCall("delete_schedule", {"schedule_id": "s1"})
    )
    assert report.ok


def test_validate_reports_missing_required():
    report = validate_call(get_tool("send_email"), ToolCall("send_email", {}))
    assert not report.ok
    assert sorted(report.missing()) == ["body", "subject", "to"]


def test_validate_reports_unknown_param():
    report = validate_call(
        get_tool("create_todo"), ToolCall("create_todo", {"title": "x", "bogus": "y"})
    )
    assert report.unknown() == ["bogus"]


def test_validate_reports_type_mismatches():
    report = validate_call(
        get_tool("search_email"),
        ToolCall(
            "search_email",
            {"limit": "three", "has_attachment": 1, "folder": "junk", "start_time": "noonish"},
        ),
    )
    assert sorted(report.mismatched()) == ["folder", "has_attachment", "limit", "start_time"]


def test_validate_accepts_good_kinds():
    report = validate_call(
        get_tool("search_email"),
        ToolCall(
            "search_email",
            {
                "limit": 3,
                "has_attachment": True,
                "folder": "inbox",
                "start_time": "2025-06-10T08:00",
                "to_time": None,
            }
            | {},
        ),
    )
    # to_time is unknown; everything else passes
    assert report.unknown() == ["to_time"]
    assert not report.mismatched()


def test_validate_rejects_mismatched_api_name():
    with pytest.raises(ValueError):
        validate_call(get_tool("send_email"), ToolCall("create_todo", {}))


def test_bool_is_not_integer():
    report = validate_call(
        get_tool("search_email"), ToolCall("search_email", {"limit": True})
    )
    assert report.mismatched() == ["limit"]


def test_tool_spec_serialization_round_trip():
    for spec in catalog().values():
        assert ToolSpec.from_dict(spec.to_dict()) == spec
