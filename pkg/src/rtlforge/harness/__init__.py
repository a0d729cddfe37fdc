"""Candidate validation: external tool orchestration with an internal
interpreter fallback."""

from .checks import (
    Verdict,
    VerdictStatus,
    check_compile,
    check_equivalent,
    check_functional,
    port_signature,
    resolve_engine,
    retain_negative,
    retain_positive,
    strict_compile_errors,
)
from .config import ToolAvailability, ToolConfig, load_tool_config, probe_tools, with_engine
from .simulate import DesignModel, SimulationUnstable, UnsupportedDesign

__all__ = [
    "Verdict", "VerdictStatus", "check_compile", "check_equivalent",
    "check_functional", "port_signature", "resolve_engine", "retain_negative",
    "retain_positive", "strict_compile_errors", "ToolAvailability",
    "ToolConfig", "load_tool_config", "probe_tools", "with_engine",
    "DesignModel", "SimulationUnstable", "UnsupportedDesign",
]
