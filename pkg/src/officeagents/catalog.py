"""The 21-tool office catalog and call validation.

The catalog ships as ``data/catalog.json`` — the single source of truth every
other module loads. Parameter names and kinds are a fixed in-repo schema; the
per-tool parameter counts are load-bearing (the transition arithmetic depends
on them) and are integrity-checked by the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

from .types import ToolCall

VALUE_KINDS = {
    "string",
    "person",
    "datetime",
    "datetime-range",
    "integer",
    "boolean",
    "enum",
    "id",
    "id-list",
    "string-list",
}

SCENARIOS = ("Email", "Schedule", "Meeting", "Chat", "Todo", "OnlineDocuments")


class CatalogError(Exception):
    """Raised when the catalog file violates its own invariants."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    description: str
    value_kind: str
    required: bool = False
    enum_values: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.value_kind not in VALUE_KINDS:
            raise CatalogError(f"unknown value_kind {self.value_kind!r} for {self.name}")
        if (self.value_kind == "enum") != bool(self.enum_values):
            raise CatalogError(f"enum_values must be set iff kind is enum ({self.name})")

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "description": self.description,
            "value_kind": self.value_kind,
            "required": self.required,
        }
        if self.enum_values:
            d["enum_values"] = list(self.enum_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSpec":
        ev = d.get("enum_values")
        return cls(
            name=d["name"],
            description=d["description"],
            value_kind=d["value_kind"],
            required=d.get("required", False),
            enum_values=tuple(ev) if ev else None,
        )


@dataclass(frozen=True)
class ToolSpec:
    name: str
    scenario: str
    description: str
    params: tuple[ParamSpec, ...]

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise CatalogError(f"unknown scenario {self.scenario!r} for {self.name}")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise CatalogError(f"duplicate param names in {self.name}")

    @property
    def param_names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def required_names(self) -> list[str]:
        return [p.name for p in self.params if p.required]

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scenario": self.scenario,
            "description": self.description,
            "params": [p.to_dict() for p in self.params],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToolSpec":
        return cls(
            name=d["name"],
            scenario=d["scenario"],
            description=d["description"],
            params=tuple(ParamSpec.from_dict(p) for p in d["params"]),
        )


@lru_cache(maxsize=1)
def catalog() -> dict[str, ToolSpec]:
    """Load the tool catalog, keyed by api name, in file order."""
    raw = resources.files("officeagents.data").joinpath("catalog.json").read_text()
    doc = json.loads(raw)
    specs: dict[str, ToolSpec] = {}
    for entry in doc["tools"]:
        spec = ToolSpec.from_dict(entry)
        if spec.name in specs:
            raise CatalogError(f"duplicate tool {spec.name}")
        specs[spec.name] = spec
    if len(specs) != 21:
        raise CatalogError(f"catalog must list exactly 21 tools, got {len(specs)}")
    return specs


def tool_names() -> list[str]:
    return list(catalog().keys())


def get_tool(name: str) -> ToolSpec:
    try:
        return catalog()[name]
    except KeyError:
        raise KeyError(f"unknown api {name!r}") from None


def param_count(name: str) -> int:
    return len(get_tool(name).params)


def parse_datetime(value: str) -> datetime:
    """Parse the wire datetime format (ISO-8601, naive, minute precision)."""
    return datetime.fromisoformat(value)


def _kind_ok(kind: str, value: Any, enum_values: Optional[tuple[str, ...]]) -> bool:
    if kind in ("string", "person", "id"):
        return isinstance(value, str)
    if kind == "datetime":
        if not isinstance(value, str):
            return False
        try:
            parse_datetime(value)
            return True
        except ValueError:
            return False
    if kind == "datetime-range":
        return (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(_kind_ok("datetime", v, None) for v in value)
        )
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "enum":
        return isinstance(value, str) and value in (enum_values or ())
    if kind in ("id-list", "string-list"):
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    return False


@dataclass(frozen=True)
class Violation:
    kind: str  # missing_required | unknown_param | type_mismatch
    param: str
    detail: str = ""


@dataclass
class ValidationReport:
    api_name: str
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def missing(self) -> list[str]:
        return [v.param for v in self.violations if v.kind == "missing_required"]

    def unknown(self) -> list[str]:
        return [v.param for v in self.violations if v.kind == "unknown_param"]

    def mismatched(self) -> list[str]:
        return [v.param for v in self.violations if v.kind == "type_mismatch"]

    def to_dict(self) -> dict:
        return {
            "api_name": self.api_name,
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "param": v.param, "detail": v.detail} for v in self.violations
            ],
        }


def validate_call(spec: ToolSpec, call: ToolCall) -> ValidationReport:
    """Check a call against its spec: required params, unknown params, value kinds."""
    if call.api_name != spec.name:
        raise ValueError(f"call targets {call.api_name!r}, spec is {spec.name!r}")
    report = ValidationReport(api_name=spec.name)
    known = {p.name: p for p in spec.params}
    for name in spec.required_names:
        if name not in call.args:
            report.violations.append(
                Violation("missing_required", name, "required param absent")
            )
    for key, value in call.args.items():
        pspec = known.get(key)
        if pspec is None:
            report.violations.append(Violation("unknown_param", key, "not in schema"))
            continue
        if not _kind_ok(pspec.value_kind, value, pspec.enum_values):
            report.violations.append(
                Violation(
                    "type_mismatch",
                    key,
                    f"expected {pspec.value_kind}, got {type(value).__name__}",
                )
            )
    return report
