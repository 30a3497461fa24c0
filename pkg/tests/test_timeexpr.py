from datetime import date, datetime, time

import pytest

from officeagents import timeexpr

CLOCK = datetime(2025, 6, 10, 10, 0)  # a Tuesday

RESOLUTION_TABLE = [
    ("today 3 PM", datetime(2025, 6, 10, 15, 0)),
    ("today 9:30 AM", datetime(2025, 6, 10, 9, 30)),
    ("tomorrow 12 PM", datetime(2025, 6, 11, 12, 0)),
    ("tomorrow 12 AM", datetime(2025, 6, 11, 0, 0)),
    ("2 PM", datetime(2025, 6, 10, 14, 0)),
    ("14:30", datetime(2025, 6, 10, 14, 30)),
    ("on 2025-06-20 at 8 AM", datetime(2025, 6, 20, 8, 0)),
    ("friday 3 PM", datetime(2025, 6, 13, 15, 0)),
    ("tuesday 9 AM", datetime(2025, 6, 17, 9, 0)),  # next tuesday, never today
]


@pytest.mark.parametrize("text,expected", RESOLUTION_TABLE)
def test_relative_expression_table(text, expected):
    assert timeexpr.parse_datetime(text, CLOCK) == expected


def test_no_time_returns_none():
    assert timeexpr.parse_datetime("today", CLOCK) is None
    assert timeexpr.parse_datetime("whenever", CLOCK) is None


@pytest.mark.parametrize(
    "dt",
    [
        datetime(2025, 6, 10, 15, 0),
        datetime(2025, 6, 11, 9, 30),
        datetime(2025, 7, 1, 0, 0),
        datetime(2025, 6, 10, 12, 0),
    ],
)
def test_render_parse_inverse(dt):
    text = timeexpr.fmt_datetime(dt, CLOCK)
    assert timeexpr.parse_datetime(text, CLOCK) == dt


def test_day_range():
    start, end = timeexpr.day_range("tomorrow", CLOCK)
    assert start == datetime(2025, 6, 11, 0, 0)
    assert end == datetime(2025, 6, 11, 23, 59)
    assert timeexpr.day_range("sometime", CLOCK) is None


def test_fmt_time_half_hours():
    assert timeexpr.fmt_time(datetime(2025, 1, 1, 0, 0)) == "12 AM"
    assert timeexpr.fmt_time(datetime(2025, 1, 1, 12, 0)) == "12 PM"
    assert timeexpr.fmt_time(datetime(2025, 1, 1, 15, 30)) == "3:30 PM"


def test_parse_day_explicit_date():
    assert timeexpr.parse_day("on 2025-12-31", CLOCK) == date(2025, 12, 31)


def test_parse_time_ignores_bare_integers():
    assert timeexpr.parse_time("limit 3") is None
    assert timeexpr.parse_time("3 PM") == time(15, 0)
