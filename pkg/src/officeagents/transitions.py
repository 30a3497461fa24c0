"""Legal previous->current tool transitions and their parameter-combination math.

A transition from a tool with m params to one with n params admits
(2^m - 1) * (2^n - 1) parameter combinations: every non-empty param subset on
each side. The ledger pins the 16 supported rows together with their printed
combination counts and complexity labels; the counts are recomputed from the
catalog at load time, so a drifted catalog fails fast.

Complexity thresholds (<=31 Low, <=217 Medium, else High) are fitted to
reproduce the ledger's labels; they are a classification convention, not a
derived quantity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .catalog import catalog, param_count

LOW_MAX = 31
MEDIUM_MAX = 217


class LedgerIntegrityError(Exception):
    """Catalog parameter counts disagree with the ledger's pinned values."""


def combinations(m: int, n: int) -> int:
    """Number of (prev subset, cur subset) pairs with both subsets non-empty."""
    if m < 0 or n < 0:
        raise ValueError("param counts must be non-negative")
    return (2**m - 1) * (2**n - 1)


def classify(count: int) -> str:
    if count < 0:
        raise ValueError("combination count must be non-negative")
    if count <= LOW_MAX:
        return "Low"
    if count <= MEDIUM_MAX:
        return "Medium"
    return "High"


@dataclass(frozen=True)
class TransitionRule:
    scenario: str
    prev_api: str
    cur_api: str
    m: int
    n: int
    combinations: int
    complexity: str

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "prev_api": self.prev_api,
            "cur_api": self.cur_api,
            "m": self.m,
            "n": self.n,
            "combinations": self.combinations,
            "complexity": self.complexity,
        }


# (scenario, prev, cur, pinned combination count, pinned complexity)
_LEDGER_ROWS = [
    ("Email", "search_email", "summary_email", 6141, "High"),
    ("Email", "summary_email", "send_email", 93, "Medium"),
    ("Schedule", "create_schedule", "update_schedule", 3937, "High"),
    ("Schedule", "create_schedule", "delete_schedule", 31, "Low"),
    ("Schedule", "update_schedule", "delete_schedule", 127, "Medium"),
    ("Schedule", "find_schedule_status", "create_schedule", 217, "Medium"),
    ("Schedule", "find_schedule_status", "delete_schedule", 7, "Low"),
    ("Schedule", "find_schedule_status", "update_schedule", 889, "High"),
    ("Todo", "find_todo", "delete_todo", 7, "Low"),
    ("Todo", "create_todo", "delete_todo", 3, "Low"),
    ("Chat", "search_chatmsg", "summary_chatmsg", 127, "Medium"),
    ("Chat", "search_group_chat", "summary_chatmsg", 1, "Low"),
    ("Chat", "find_recent_chat_list", "summary_chatmsg", 3, "Low"),
    ("Chat", "summary_chatmsg", "send_chatmsg", 7, "Low"),
    ("Chat", "search_chatmsg", "withdraw_chatmsg", 381, "High"),
    ("Chat", "search_group_chat", "send_chatmsg", 7, "Low"),
]

_ledger_cache: list[TransitionRule] | None = None


def ledger() -> list[TransitionRule]:
    """The 16 supported transitions, counts recomputed from the catalog."""
    global _ledger_cache
    if _ledger_cache is not None:
        return _ledger_cache
    rules = []
    for scenario, prev, cur, pinned, complexity in _LEDGER_ROWS:
        m, n = param_count(prev), param_count(cur)
        computed = combinations(m, n)
        if computed != pinned:
            raise LedgerIntegrityError(
                f"{prev} -> {cur}: catalog gives {computed} combinations, ledger pins {pinned}"
            )
        if classify(computed) != complexity:
            raise LedgerIntegrityError(
                f"{prev} -> {cur}: classify({computed}) != {complexity}"
            )
        rules.append(TransitionRule(scenario, prev, cur, m, n, computed, complexity))
    _ledger_cache = rules
    return rules


def find_rule(prev_api: str, cur_api: str) -> TransitionRule | None:
    for rule in ledger():
        if rule.prev_api == prev_api and rule.cur_api == cur_api:
            return rule
    return None


def _subsets(names: list[str]) -> Iterator[tuple[str, ...]]:
    # non-empty subsets in increasing bitmask order; bit i selects names[i]
    for mask in range(1, 1 << len(names)):
        yield tuple(n for i, n in enumerate(names) if mask >> i & 1)


def enumerate_combinations(
    rule: TransitionRule,
) -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
    """Stream all (prev param subset, cur param subset) pairs for a rule.

    Pairs come in lexicographic bitmask order (prev subset outer, cur inner)
    and the stream yields exactly ``rule.combinations`` entries.
    """
    prev_params = catalog()[rule.prev_api].param_names
    cur_params = catalog()[rule.cur_api].param_names
    for prev_subset in _subsets(prev_params):
        for cur_subset in _subsets(cur_params):
            yield prev_subset, cur_subset


def combination_at(rule: TransitionRule, index: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Random access into the enumeration order, for coverage-first sampling."""
    if not 0 <= index < rule.combinations:
        raise IndexError(index)
    prev_params = catalog()[rule.prev_api].param_names
    cur_params = catalog()[rule.cur_api].param_names
    n_cur = 2 ** len(cur_params) - 1
    prev_mask = index // n_cur + 1
    cur_mask = index % n_cur + 1
    prev_subset = tuple(n for i, n in enumerate(prev_params) if prev_mask >> i & 1)
    cur_subset = tuple(n for i, n in enumerate(cur_params) if cur_mask >> i & 1)
    return prev_subset, cur_subset


@dataclass(frozen=True)
class ChainCheck:
    prev_api: str
    cur_api: str
    legal: bool  # present in the ledger; unlisted pairs are warnings, not errors


def validate_chain(apis: list[str]) -> list[ChainCheck]:
    """Flag each adjacent pair as ledger-legal or unlisted (warning only)."""
    known = catalog()
    for api in apis:
        if api not in known:
            raise ValueError(f"unknown api {api!r}")
    checks = []
    for prev, cur in zip(apis, apis[1:]):
        checks.append(ChainCheck(prev, cur, legal=find_rule(prev, cur) is not None))
    return checks
