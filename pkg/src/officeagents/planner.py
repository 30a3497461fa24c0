"""Query decomposition into an ordered, evidence-chained plan.

The rule backend splits the rewritten query on coordination markers, matches
each clause against the template grammar, and wires evidence dependencies for
follow-up-form clauses and expanded idioms. Planned APIs are constrained to
the candidate set: anything outside it is rejected to "none", for the model
backend as well as the rule backend.

The plan text format is one line per sub-task::

    #E1 = search_email[search emails, from Dana Li]
    #E2 = summary_email[summarize them (uses #E1)]

Dependencies ride inside the bracketed clause as ``#Ek`` mentions.
"""

from __future__ import annotations

import re
from datetime import datetime
from typing import Iterable, Optional

from . import grammar
from .catalog import ToolSpec, catalog
from .types import Plan, SessionMemory, SubTask

NONE_API = "none"


class PlanParseError(Exception):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _candidate_names(candidates: Iterable) -> set[str]:
    names = set()
    for c in candidates:
        names.add(c.name if isinstance(c, ToolSpec) else str(c))
    return names


def plan(
    rewritten: str,
    candidates: Iterable,
    memory: SessionMemory | None = None,
    clock: datetime | None = None,
) -> Plan:
    """Decompose a rewritten query into sub-tasks with assigned APIs."""
    clock = clock or datetime(2000, 1, 1)
    allowed = _candidate_names(candidates)
    clauses = grammar.split_clauses(rewritten)
    if not clauses:
        clauses = [rewritten.strip() or rewritten]

    sub_tasks: list[SubTask] = []
    for pos, clause in enumerate(clauses, start=1):
        steps = grammar.match_steps(clause, clock, position=pos)
        if steps is None:
            sub_tasks.append(
                SubTask(index=len(sub_tasks) + 1, text=clause, api_name=NONE_API)
            )
            continue
        for step_no, step in enumerate(steps):
            index = len(sub_tasks) + 1
            api = step.api_name if step.api_name in allowed else NONE_API
            deps: tuple[str, ...] = ()
            if index > 1 and (step.evidence or step_no > 0):
                deps = (f"#E{index - 1}",)
            sub_tasks.append(
                SubTask(index=index, text=step.text, api_name=api, depends_on=deps)
            )
    return Plan(sub_tasks=tuple(sub_tasks))


_USES_RE = re.compile(r"\s*\(uses (#E\d+(?:, #E\d+)*)\)$")
_LINE_RE = re.compile(r"#E(\d+)\s*=\s*([A-Za-z_][\w]*)\[(.*)\]\s*$")


def plan_text_format(p: Plan) -> str:
    """Serialize a plan to its line format; dependencies ride in the clause."""
    lines = []
    for st in p.sub_tasks:
        text = st.text
        mentioned = set(re.findall(r"#E\d+", text))
        missing = [d for d in st.depends_on if d not in mentioned]
        if missing:
            text = f"{text} (uses {', '.join(missing)})"
        lines.append(f"{st.evidence_id} = {st.api_name}[{text}]")
    return "\n".join(lines)


def parse_plan(text: str) -> Plan:
    """Parse the line format back into a Plan; malformed lines carry line numbers."""
    sub_tasks: list[SubTask] = []
    expected = 1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise PlanParseError(f"cannot parse {line!r}", line_no)
        index = int(m.group(1))
        if index != expected:
            raise PlanParseError(f"expected #E{expected}, found #E{index}", line_no)
        api = m.group(2)
        clause = m.group(3)
        uses = _USES_RE.search(clause)
        if uses:
            clause = clause[: uses.start()]
        deps = sorted(set(re.findall(r"#E\d+", clause)) | set(
            re.findall(r"#E\d+", uses.group(1)) if uses else []
        ), key=lambda d: int(d[2:]))
        deps = [d for d in deps if int(d[2:]) < index]
        try:
            sub_tasks.append(
                SubTask(
                    index=index,
                    text=clause,
                    api_name=api,
                    depends_on=tuple(deps),
                )
            )
        except ValueError as exc:
            raise PlanParseError(str(exc), line_no) from None
        expected += 1
    return Plan(sub_tasks=tuple(sub_tasks))


class RulePlanner:
    def plan(self, rewritten, candidates, memory=None, clock=None) -> Plan:
        return plan(rewritten, candidates, memory, clock)


class EndpointPlanner:
    """Model backend: prompt the endpoint, parse its plan text, reject
    hallucinated APIs to "none", and fall back to the rule planner."""

    def __init__(self, call_endpoint, fallback: Optional[RulePlanner] = None):
        self._call = call_endpoint
        self._fallback = fallback or RulePlanner()

    def plan(self, rewritten, candidates, memory=None, clock=None) -> Plan:
        from .rewrite import render_prompt

        allowed = _candidate_names(candidates)
        tools = ", ".join(sorted(allowed))
        history = ""
        if memory is not None and memory.turn_window:
            history = " | ".join(t.rewritten_query for t in memory.turn_window[-3:])
        prompt = render_prompt("planner", tools=tools, history=history, query=rewritten)
        try:
            raw = self._call("plan", prompt)
            parsed = parse_plan(raw)
        except Exception:
            return self._fallback.plan(rewritten, candidates, memory, clock)
        cleaned = tuple(
            st if st.api_name in allowed or st.api_name == NONE_API
            else SubTask(st.index, st.text, NONE_API, depends_on=st.depends_on)
            for st in parsed.sub_tasks
        )
        return Plan(sub_tasks=cleaned)


def plan_api_set(p: Plan) -> list[str]:
    return [st.api_name for st in p.sub_tasks if st.api_name != NONE_API]


def full_catalog_candidates() -> list[ToolSpec]:
    return list(catalog().values())
