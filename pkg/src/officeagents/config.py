"""Declarative runtime configuration.

Every paper-underspecified knob lives here: the backend per role (reference
rule backend or a model endpoint), retrieval depth, memory window, retry
budget, and the fixture. Values load from one JSON file and can be overridden
with ``OFFICEAGENTS_*`` environment variables.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

ROLES = ("rewrite", "plan", "solve", "judge")


@dataclass
class Config:
    fixture: str = "f1"
    seed: int = 7
    retrieval_k: int = 5
    memory_window: int = 10
    retry_budget: int = 1
    embed_dim: int = 256
    noise: float = 0.0
    backends: dict = field(
        default_factory=lambda: {r: "reference" for r in ROLES}
    )  # reference | endpoint
    endpoints: dict = field(default_factory=dict)  # role -> url
    endpoint_timeout: float = 10.0
    host: str = "127.0.0.1"
    port: int = 8040

    def to_dict(self) -> dict:
        return asdict(self)


class ConfigError(Exception):
    pass


def load_config(path: str | None = None, env: dict | None = None) -> Config:
    env = os.environ if env is None else env
    cfg = Config()
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path!r}: {exc}") from None
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for role in ROLES:
        url = env.get(f"OFFICEAGENTS_ENDPOINT_{role.upper()}")
        if url:
            cfg.endpoints[role] = url
            cfg.backends[role] = "endpoint"
    if env.get("OFFICEAGENTS_PORT"):
        cfg.port = int(env["OFFICEAGENTS_PORT"])
    if env.get("OFFICEAGENTS_HOST"):
        cfg.host = env["OFFICEAGENTS_HOST"]
    if env.get("OFFICEAGENTS_FIXTURE"):
        cfg.fixture = env["OFFICEAGENTS_FIXTURE"]
    validate_config(cfg)
    return cfg


def validate_config(cfg: Config) -> None:
    if not 1 <= cfg.retrieval_k <= 21:
        raise ConfigError("retrieval_k must be in 1..21")
    if cfg.memory_window < 1:
        raise ConfigError("memory_window must be >= 1")
    if cfg.retry_budget < 0:
        raise ConfigError("retry_budget must be >= 0")
    if not 0 <= cfg.noise <= 1:
        raise ConfigError("noise must be in [0, 1]")
    for role, backend in cfg.backends.items():
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r}")
        if backend not in ("reference", "endpoint"):
            raise ConfigError(f"backend for {role} must be reference or endpoint")
        if backend == "endpoint" and role not in cfg.endpoints:
            raise ConfigError(f"backend for {role} is endpoint but no URL is configured")
