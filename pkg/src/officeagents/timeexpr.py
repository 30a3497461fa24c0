"""Relative time expressions: rendering and parsing against a reference clock.

Canonical surface forms (the inverse pair used across the rule backends):

* ``today 3 PM`` / ``tomorrow 9:30 AM`` — same-day and next-day times
* ``on friday 3 PM`` — next occurrence of a weekday, strictly after today
* ``on 2025-06-12 at 3 PM`` — absolute fallback
* ``today`` / ``tomorrow`` / ``on 2025-06-12`` — whole-day words

Parsing also accepts a bare time (``2 PM``), resolved to the clock's date, and
24-hour ``14:30`` forms. Wire values are naive ISO-8601 at minute precision.
"""

from __future__ import annotations

import re
from datetime import date, datetime, time, timedelta
from typing import Optional

WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]

DAY_START = time(0, 0)
DAY_END = time(23, 59)


def iso(dt: datetime) -> str:
    return dt.isoformat(timespec="minutes")


def fmt_time(dt: datetime) -> str:
    """12-hour clock: '3 PM', '9:30 AM', '12 PM' for noon, '12 AM' for midnight."""
    hour = dt.hour % 12 or 12
    suffix = "AM" if dt.hour < 12 else "PM"
    if dt.minute:
        return f"{hour}:{dt.minute:02d} {suffix}"
    return f"{hour} {suffix}"


def fmt_day(day: date, clock: datetime) -> str:
    if day == clock.date():
        return "today"
    if day == clock.date() + timedelta(days=1):
        return "tomorrow"
    return f"on {day.isoformat()}"


def fmt_datetime(dt: datetime, clock: datetime) -> str:
    day = fmt_day(dt.date(), clock)
    if day.startswith("on "):
        return f"{day} at {fmt_time(dt)}"
    return f"{day} {fmt_time(dt)}"


_TIME_RE = re.compile(r"\b(\d{1,2})(?::(\d{2}))?\s*(am|pm)\b", re.IGNORECASE)
_TIME24_RE = re.compile(r"\b(\d{1,2}):(\d{2})\b(?!\s*(?:am|pm))", re.IGNORECASE)
_DATE_RE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")


def parse_time(text: str) -> Optional[time]:
    """Extract a clock time from text; None when no time expression is present."""
    m = _TIME_RE.search(text)
    if m:
        hour = int(m.group(1)) % 12
        if m.group(3).lower() == "pm":
            hour += 12
        return time(hour, int(m.group(2) or 0))
    m = _TIME24_RE.search(text)
    if m:
        hour, minute = int(m.group(1)), int(m.group(2))
        if hour < 24 and minute < 60:
            return time(hour, minute)
    return None


def parse_day(text: str, clock: datetime) -> Optional[date]:
    """Extract the day a text refers to: today/tomorrow/weekday/explicit date."""
    lowered = text.lower()
    m = _DATE_RE.search(lowered)
    if m:
        return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    if "tomorrow" in lowered:
        return clock.date() + timedelta(days=1)
    if "today" in lowered:
        return clock.date()
    for idx, name in enumerate(WEEKDAYS):
        if re.search(rf"\b{name}\b", lowered):
            ahead = (idx - clock.weekday() - 1) % 7 + 1  # next occurrence, never today
            return clock.date() + timedelta(days=ahead)
    return None


def parse_datetime(text: str, clock: datetime) -> Optional[datetime]:
    """Resolve a relative or absolute time expression; bare times land on today."""
    t = parse_time(text)
    if t is None:
        return None
    day = parse_day(text, clock) or clock.date()
    return datetime.combine(day, t)


def day_range(text: str, clock: datetime) -> Optional[tuple[datetime, datetime]]:
    """Whole-day window [00:00, 23:59] for a day word; None when no day found."""
    day = parse_day(text, clock)
    if day is None:
        return None
    return datetime.combine(day, DAY_START), datetime.combine(day, DAY_END)
