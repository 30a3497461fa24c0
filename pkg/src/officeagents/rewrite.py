"""Multi-turn query understanding: relatedness, rewriting, intent distribution.

The backend judges context-relatedness and rewrites jointly, returning one
``RewriteOutput``. The rule backend resolves follow-up forms against memory
slots using the shared template grammar, which makes it a pure function of
(memory, query) and the exact inverse of the data generator. A model-endpoint
backend can be plugged in behind the same call shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime

from . import grammar
from .types import SessionMemory

WORKER_LABELS = ("chitchat", "text_to_image", "online_search", "wps365")

_MISSING_RE = re.compile(r"<missing:\w+>")
_UNRESOLVED_MARK = "<missing:referent>"

_IMAGE_RE = re.compile(
    r"\b(draw|paint|sketch|illustrate)\b|\b(image|picture|logo|drawing) of\b|generate (an? )?(image|picture)",
    re.IGNORECASE,
)
_SEARCH_RE = re.compile(
    r"\b(weather|news|stock price|wikipedia|search the web|web search|who is|who won|what is the capital)\b",
    re.IGNORECASE,
)
_BUSINESS_RE = re.compile(
    r"\b(emails?|inbox|schedules?|meetings?|todos?|tasks?|chats?|messages?|files?|documents?|"
    r"folder|free time|availability|rooms?|summar\w+|forward|calendar|start time|end time|withdraw)\b",
    re.IGNORECASE,
)


def distribute_intent(rewritten: str) -> str:
    """Map a self-contained query to its worker label."""
    if _IMAGE_RE.search(rewritten):
        return "text_to_image"
    if _SEARCH_RE.search(rewritten):
        return "online_search"
    if _BUSINESS_RE.search(rewritten):
        return "wps365"
    return "chitchat"


@dataclass(frozen=True)
class RewriteOutput:
    related: bool
    rewritten: str
    intent: str

    def __post_init__(self):
        if self.intent not in WORKER_LABELS:
            raise ValueError(f"unknown intent {self.intent!r}")

    def to_dict(self) -> dict:
        return {"related": self.related, "rewritten": self.rewritten, "intent": self.intent}


class RuleRewriter:
    """Deterministic reference backend built on the template grammar."""

    def rewrite(self, memory: SessionMemory, query: str, clock: datetime) -> RewriteOutput:
        text = query.strip()
        if not text:
            raise ValueError("query must be non-empty")

        def unrelated() -> RewriteOutput:
            return RewriteOutput(False, query, distribute_intent(query))

        if memory.is_empty():
            return unrelated()
        clauses = grammar.split_clauses(text)
        if len(clauses) != 1:
            # multi-intent utterances are treated as self-contained; intra-turn
            # references resolve through plan evidence, not memory
            return unrelated()

        fu = grammar.match_followup(clauses[0], clock)
        if fu is not None:
            rule, m = fu
            rewritten = rule.resolver(m, memory, clock)
            return RewriteOutput(True, rewritten, distribute_intent(rewritten))

        if grammar.match_steps(clauses[0], clock) is not None:
            return unrelated()

        if grammar.has_context_cue(text):
            if _MISSING_RE.search(text):
                rewritten = query  # already marked; keep idempotent
            else:
                rewritten = f"{query} {_UNRESOLVED_MARK}"
            return RewriteOutput(True, rewritten, distribute_intent(rewritten))

        return unrelated()


class EndpointRewriter:
    """Model-endpoint backend: one structured call, parse-retry once, then
    fall back to the identity rewrite."""

    PROMPT = "rewrite"

    def __init__(self, call_endpoint):
        self._call = call_endpoint  # (role, prompt) -> text

    def rewrite(self, memory: SessionMemory, query: str, clock: datetime) -> RewriteOutput:
        history = " | ".join(t.rewritten_query for t in memory.turn_window[-3:])
        prompt = render_prompt("rewrite", history=history, query=query)
        for _ in range(2):
            try:
                raw = self._call("rewrite", prompt)
                parsed = parse_rewrite_reply(raw, query)
                if parsed is not None:
                    return parsed
            except Exception:
                continue
        return RewriteOutput(False, query, distribute_intent(query))


def parse_rewrite_reply(raw: str, query: str) -> RewriteOutput | None:
    related = None
    rewritten = None
    intent = None
    for line in raw.splitlines():
        key, _, value = line.partition(":")
        key, value = key.strip().lower(), value.strip()
        if key == "related":
            related = value.lower() in ("yes", "true", "1")
        elif key == "rewritten":
            rewritten = value
        elif key == "intent" and value in WORKER_LABELS:
            intent = value
    if related is None or rewritten is None:
        return None
    if not related:
        rewritten = query
    return RewriteOutput(related, rewritten, intent or distribute_intent(rewritten))


def render_prompt(name: str, **slots) -> str:
    from importlib import resources

    template = resources.files("officeagents.data.prompts").joinpath(f"{name}.txt").read_text()
    for key, value in slots.items():
        template = template.replace("{" + key + "}", str(value))
    return template


_DEFAULT = RuleRewriter()


def rewrite(memory: SessionMemory, query: str, clock: datetime | None = None) -> RewriteOutput:
    return _DEFAULT.rewrite(memory, query, clock or datetime(2000, 1, 1))


def relate(memory: SessionMemory, query: str, clock: datetime | None = None) -> bool:
    return rewrite(memory, query, clock).related
