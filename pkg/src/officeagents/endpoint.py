"""Model-endpoint client and pipeline assembly from a Config.

A role endpoint is a plain HTTP service: ``POST url`` with
``{"role": ..., "prompt": ...}`` returning ``{"text": ...}``. Each call gets
one timeout-bounded attempt plus one retry; after that the role's parser-level
fallback takes over (documented per backend). Roles without a configured
endpoint silently use the reference backends, and that choice is surfaced in
every turn trace via the pipeline notes.
"""

from __future__ import annotations

import httpx

from .config import Config
from .planner import EndpointPlanner, RulePlanner
from .rewrite import EndpointRewriter, RuleRewriter


class EndpointUnavailable(Exception):
    pass


class EndpointClient:
    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, role: str, prompt: str) -> str:
        last_error: Exception | None = None
        for _ in range(2):  # one attempt plus one retry
            try:
                response = httpx.post(
                    self.url, json={"role": role, "prompt": prompt}, timeout=self.timeout
                )
                response.raise_for_status()
                return response.json()["text"]
            except Exception as exc:
                last_error = exc
        raise EndpointUnavailable(f"{role} endpoint failed twice: {last_error}")


def build_pipeline(config: Config) -> tuple[object, object, list[str]]:
    """(rewriter, plan backend, static trace notes) for the configured backends."""
    notes: list[str] = []

    if config.backends.get("rewrite") == "endpoint":
        client = EndpointClient(config.endpoints["rewrite"], config.endpoint_timeout)
        rewriter = EndpointRewriter(client)
        notes.append(f"rewrite backend: endpoint {config.endpoints['rewrite']}")
    else:
        rewriter = RuleRewriter()
        notes.append("rewrite backend: reference")

    if config.backends.get("plan") == "endpoint":
        client = EndpointClient(config.endpoints["plan"], config.endpoint_timeout)
        plan_backend = EndpointPlanner(client)
        notes.append(f"plan backend: endpoint {config.endpoints['plan']}")
    else:
        plan_backend = RulePlanner()
        notes.append("plan backend: reference")

    return rewriter, plan_backend, notes
