"""BASEL: buffering-architecture policies, a slot simulator and an offline-optimal oracle."""
from __future__ import annotations

from .arch import INF, Architecture, Packet
from .dsl import format_program, parse, parse_program, validate
from .errors import BaselError, EvalError, OracleRefusal, SimulationError, SpecError, TraceFormatError
from .sim import Metrics, SimConfig, Simulator, run
from .traffic import MMPPParams, Trace, gen_mmpp, load_trace, make_trace, save_trace

__version__ = "0.1.0"

__all__ = [
    "INF", "Architecture", "BaselError", "EvalError", "MMPPParams", "Metrics", "OracleRefusal", "Packet",
    "SimConfig", "SimulationError", "Simulator", "SpecError", "Trace", "TraceFormatError", "format_program",
    "gen_mmpp", "load_trace", "make_trace", "parse", "parse_program", "run", "save_trace", "validate",
]
