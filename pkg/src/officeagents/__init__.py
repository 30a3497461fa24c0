"""Office-collaboration tool-calling agents.

A master/worker orchestration stack over a deterministic 21-tool office
simulator: multi-turn query rewriting, embedding-based tool retrieval, plan
and solve execution with error repair, a dialogue data generator with
annotation export, and a metric/report suite for evaluating every stage.
"""

from .catalog import ParamSpec, ToolSpec, catalog, get_tool, validate_call
from .orchestrator import Orchestrator, TurnTrace, WorkerRegistration
from .sim import OfficeSimulator
from .types import (
    DialogueTurn,
    Plan,
    Session,
    SessionMemory,
    SubTask,
    ToolCall,
    ToolResult,
)

__version__ = "0.1.0"

__all__ = [
    "ParamSpec",
    "ToolSpec",
    "catalog",
    "get_tool",
    "validate_call",
    "Orchestrator",
    "TurnTrace",
    "WorkerRegistration",
    "OfficeSimulator",
    "DialogueTurn",
    "Plan",
    "Session",
    "SessionMemory",
    "SubTask",
    "ToolCall",
    "ToolResult",
    "__version__",
]
