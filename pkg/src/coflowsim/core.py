"""Domain types shared by the trace reader, the policies and the simulator.

Units used throughout:

* sizes are integer bytes (``MB`` is 10**6 bytes),
* timestamps are integer microseconds,
* rates handed out by policies are integer *bytes per interval*; with the
  defaults (1 Gbps ports, 8 ms interval) one interval carries exactly 1 MB.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MB = 1_000_000
GBPS = 125_000_000  # bytes per second
US_PER_S = 1_000_000
US_PER_MS = 1_000


class ConfigError(ValueError):
    """Invalid queue, simulation or policy configuration."""


class TraceError(ValueError):
    """Malformed trace, DAG or dynamics input."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SimulationError(RuntimeError):
    pass


class DynamicsError(ValueError):
    pass


class Origin(enum.IntEnum):
    NONE = 0
    ALL_OR_NONE = 1
    WORK_CONSERVATION = 2
    INDEPENDENT = 3  # per-port allocation of an uncoordinated baseline


class Availability(str, enum.Enum):
    ALL_AT_ARRIVAL = "arrival"
    PIPELINED = "pipelined"


@dataclass(frozen=True)
class FlowSpec:
    flow_id: int
    coflow_id: int
    src_port: int
    dst_port: int
    size_bytes: int

    def __post_init__(self):
        if self.size_bytes < 1:
            raise TraceError(f"flow {self.flow_id} has non-positive size {self.size_bytes}")


@dataclass(frozen=True)
class CoFlow:
    """A coflow as read from a trace: immutable description, no run state.

    ``mappers`` and ``reducers`` keep the trace-level layout (reducer entries are
    ``(port, megabytes-as-text)``) so a parsed trace can be written back verbatim.
    """

    coflow_id: int
    arrival_us: int
    flows: tuple[FlowSpec, ...]
    mappers: tuple[int, ...] = ()
    reducers: tuple[tuple[int, str], ...] = ()

    @property
    def width(self) -> int:
        return len(self.flows)

    @property
    def total_size(self) -> int:
        return sum(f.size_bytes for f in self.flows)

    @property
    def ports(self) -> frozenset[int]:
        return frozenset(p for f in self.flows for p in (f.src_port, f.dst_port))


@dataclass
class FlowState:
    """Snapshot of one flow during a run."""

    spec: FlowSpec
    bytes_sent: int
    available_bytes: int
    current_rate: float  # bytes/second
    finish_time: int | None  # microseconds
    rate_cap: float | None = None


@dataclass(frozen=True)
class QueueConfig:
    K: int = 10
    S: int = 10 * MB
    E: float = 10

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if self.S <= 0:
            raise ConfigError(f"S must be positive, got {self.S!r}")
        if self.E <= 1:
            raise ConfigError(f"E must be > 1, got {self.E!r}")

    @property
    def highs(self) -> tuple[int, ...]:
        """Finite upper thresholds Q^hi_0 .. Q^hi_{K-2} in bytes."""
        e = Fraction(str(self.E))
        s = Fraction(str(self.S))
        out = []
        for q in range(self.K - 1):
            hi = math.floor(s * e**q)
            if out and hi <= out[-1]:
                raise ConfigError("queue thresholds are not strictly increasing; raise S or E")
            out.append(hi)
        return tuple(out)


def derive_thresholds(config: QueueConfig) -> list[tuple[int, float]]:
    """Half-open ``[lo, hi)`` byte ranges for the K queues; the last ``hi`` is ``inf``."""
    highs = config.highs
    ranges = []
    lo = 0
    for hi in highs:
        ranges.append((lo, hi))
        lo = hi
    ranges.append((lo, math.inf))
    return ranges


@dataclass(frozen=True)
class PortCapacity:
    egress_rate: int = GBPS
    ingress_rate: int = GBPS

    def __post_init__(self):
        if self.egress_rate <= 0 or self.ingress_rate <= 0:
            raise ConfigError("port rates must be positive")


@dataclass(frozen=True)
class SimConfig:
    delta_us: int = 8_000
    queue: QueueConfig = field(default_factory=QueueConfig)
    deadline_factor: float = 2
    arrival_scale: float = 1
    port_count: int | None = None
    port_rate: int = GBPS
    seed: int = 0
    availability: Availability = Availability.ALL_AT_ARRIVAL
    producer_rate: int | None = None  # bytes/s for pipelined availability; None = port rate
    contention_scope: str = "global"
    requeue: bool = True
    policy: str = "saath"
    max_intervals: int = 20_000_000

    def __post_init__(self):
        if self.delta_us <= 0:
            raise ConfigError("delta must be positive")
        if self.deadline_factor < 1:
            raise ConfigError("deadline factor d must be >= 1")
        if self.arrival_scale <= 0:
            raise ConfigError("arrival scale A must be positive")
        if self.port_rate <= 0:
            raise ConfigError("port rate must be positive")
        if self.contention_scope not in ("global", "queue"):
            raise ConfigError(f"unknown contention scope {self.contention_scope!r}")
        if self.port_count is not None and self.port_count < 1:
            raise ConfigError("port count must be >= 1")
        object.__setattr__(self, "availability", Availability(self.availability))

    def bytes_per_interval(self, rate: int | float) -> int:
        return int(Fraction(str(rate)) * self.delta_us // US_PER_S)

    @property
    def line_bytes(self) -> int:
        return self.bytes_per_interval(self.port_rate)


@dataclass
class Allocation:
    """Per-coflow slice of a schedule, aligned with the coflow's flow arrays."""

    flow_ids: np.ndarray
    budget: np.ndarray  # int64 bytes per interval
    origin: np.ndarray  # int8 Origin values


@dataclass
class Schedule:
    interval: int
    delta_us: int
    alloc: dict[int, Allocation] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)

    def entries(self) -> dict[int, int]:
        out = {}
        for a in self.alloc.values():
            for i in np.flatnonzero(a.budget):
                out[int(a.flow_ids[i])] = int(a.budget[i])
        return out

    def origins(self) -> dict[int, Origin]:
        out = {}
        for a in self.alloc.values():
            for i in np.flatnonzero(a.budget):
                out[int(a.flow_ids[i])] = Origin(int(a.origin[i]))
        return out

    def rate(self, flow_id: int) -> Fraction:
        """Rate in bytes/second for a flow (0 when not scheduled)."""
        b = self.entries().get(flow_id, 0)
        return Fraction(b * US_PER_S, self.delta_us)

    def __len__(self):
        return sum(int(np.count_nonzero(a.budget)) for a in self.alloc.values())
