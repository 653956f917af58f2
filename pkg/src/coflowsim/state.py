"""Mutable per-run state: one ``CoflowState`` per registered coflow."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import US_PER_S, Availability, CoFlow, FlowState, SimConfig


class CoflowState:
    """Flow arrays for one coflow plus the scheduler bookkeeping attached to it."""

    def __init__(self, spec: CoFlow, release_us: int, registered_interval: int):
        self.spec = spec
        self.coflow_id = spec.coflow_id
        self.arrival_us = spec.arrival_us
        self.release_us = release_us
        self.registered_interval = registered_interval
        n = spec.width
        self.n = n
        self.flow_ids = np.fromiter((f.flow_id for f in spec.flows), np.int64, n)
        self.src = np.fromiter((f.src_port for f in spec.flows), np.int64, n)
        self.dst = np.fromiter((f.dst_port for f in spec.flows), np.int64, n)
        self.size = np.fromiter((f.size_bytes for f in spec.flows), np.int64, n)
        self.total_size = int(self.size.sum())
        self.sent = np.zeros(n, np.int64)
        self.avail = self.size.copy()
        self.avail_start = np.full(n, registered_interval, np.int64)
        self.cap = np.full(n, -1, np.int64)  # bytes per interval, -1 = uncapped
        self.finish_us = np.full(n, -1, np.int64)
        self.last_budget = np.zeros(n, np.int64)
        self.remaining_flows = n
        self.completion_us: int | None = None
        # scheduler bookkeeping
        self.queue: int | None = None
        self.deadline_us: int | None = None
        self.queue_entry_us = release_us
        self.expired = False
        self.transitions = 0
        self.expiries = 0
        self.affected = False  # saw a restart/straggler event
        self._version = 0
        self._ports_cache = None

    # -- derived quantities -------------------------------------------------
    @property
    def sort_key(self):
        return (self.release_us, self.coflow_id)

    @property
    def unfinished(self) -> np.ndarray:
        return self.sent < self.size

    def m_c(self) -> int:
        """Largest byte count sent by any single flow."""
        return int(self.sent.max())

    def total_sent(self) -> int:
        return int(self.sent.sum())

    def remaining_bytes(self) -> int:
        return self.total_size - self.total_sent()

    def touch(self):
        """Invalidate caches after the set of unfinished flows changed."""
        self._version += 1
        self._ports_cache = None

    def ports(self) -> np.ndarray:
        """Distinct ports (either side) used by unfinished flows."""
        if self._ports_cache is None:
            u = self.unfinished
            self._ports_cache = np.unique(np.concatenate((self.src[u], self.dst[u])))
        return self._ports_cache

    def flow_states(self, delta_us: int) -> list[FlowState]:
        out = []
        for i, f in enumerate(self.spec.flows):
            cap = None if self.cap[i] < 0 else float(self.cap[i]) * US_PER_S / delta_us
            fin = None if self.finish_us[i] < 0 else int(self.finish_us[i])
            out.append(FlowState(f, int(self.sent[i]), int(self.avail[i]),
                                 float(self.last_budget[i]) * US_PER_S / delta_us, fin, cap))
        return out


@dataclass
class ClusterState:
    interval: int
    delta_us: int
    config: SimConfig
    port_count: int
    active: list[CoflowState] = field(default_factory=list)
    egress: np.ndarray | None = None  # bytes per interval per port
    ingress: np.ndarray | None = None

    def __post_init__(self):
        if self.egress is None:
            b = self.config.line_bytes
            self.egress = np.full(self.port_count, b, np.int64)
            self.ingress = np.full(self.port_count, b, np.int64)

    @property
    def now_us(self) -> int:
        return self.interval * self.delta_us

    @property
    def pipelined(self) -> bool:
        return self.config.availability is Availability.PIPELINED

    def ready(self, c: CoflowState) -> np.ndarray:
        """Unfinished flows with enough produced data to send for one interval."""
        u = c.sent < c.size
        if not self.pipelined:
            return u
        need = np.minimum(c.size - c.sent, self.config.line_bytes)
        return u & (c.avail - c.sent >= need)

    def aon_ready(self, c: CoflowState, ready: np.ndarray | None = None) -> bool:
        """All-or-none needs every unfinished flow of the coflow to be ready."""
        if ready is None:
            ready = self.ready(c)
        return bool(ready.any()) and bool(np.array_equal(ready, c.sent < c.size))
