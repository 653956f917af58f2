"""Trace-driven coflow scheduling simulator."""

from .core import (GBPS, MB, Availability, CoFlow, ConfigError, DynamicsError, FlowSpec,
                   FlowState, Origin, PortCapacity, QueueConfig, Schedule, SimConfig,
                   SimulationError, TraceError, derive_thresholds)
from .policies import POLICY_NAMES, make_policy
from .sim import CoflowRecord, RunResult, inject, run, run_comparison
from .trace import (DynamicsEvent, EventKind, SynthSpec, Trace, TraceHeader, emit_trace,
                    parse_dag, parse_dynamics, parse_trace, scale_arrivals, synthesize)

__version__ = "0.1.0"
