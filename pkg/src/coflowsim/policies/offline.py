"""Clairvoyant orderings (flow sizes known up front) sharing the all-or-none allocator."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..core import ConfigError
from ..state import ClusterState, CoflowState
from .base import Policy, grant_in_order
from .queues import contention_all

OFFLINE = ("scf", "srtf", "sebf", "lwtf")


def bottleneck_time(c: CoflowState, state: ClusterState) -> Fraction:
    """Intervals the coflow's busiest port side needs for its remaining bytes."""
    u = c.sent < c.size
    if not u.any():
        return Fraction(0)
    left = (c.size - c.sent)[u]
    best = Fraction(0)
    for ports, caps in ((c.src[u], state.egress), (c.dst[u], state.ingress)):
        uniq, inv = np.unique(ports, return_inverse=True)
        sums = np.zeros(len(uniq), np.int64)
        np.add.at(sums, inv, left)
        for p, b in zip(uniq.tolist(), sums.tolist()):
            best = max(best, Fraction(b, int(caps[p])))
    return best


class OfflinePolicy(Policy):
    """Sort coflows by a size-aware key each interval, then grant all-or-none.

    scf: total size; srtf: remaining bytes; sebf: bottleneck time;
    lwtf: bottleneck time x contention (the waiting time imposed on others).
    """

    def __init__(self, kind: str, work_conservation: bool = True):
        if kind not in OFFLINE:
            raise ConfigError(f"unknown offline policy {kind!r}")
        self.name = kind
        self.work_conservation = work_conservation

    def key(self, c: CoflowState, state: ClusterState, k: dict):
        if self.name == "scf":
            return c.total_size
        if self.name == "srtf":
            return c.remaining_bytes()
        g = bottleneck_time(c, state)
        if self.name == "sebf":
            return g
        return g * k[c.coflow_id]

    def schedule(self, state):
        k = contention_all(state.active) if self.name == "lwtf" else {}
        order = sorted(state.active, key=lambda c: (self.key(c, state, k), *c.sort_key))
        return grant_in_order(state, order, self.work_conservation)

    def horizon(self, state, schedule, progress):
        return None if self.name == "scf" else 1


class FixedOrderPolicy(Policy):
    """Grant coflows in a caller-supplied priority order (for exhaustive search)."""

    def __init__(self, order, work_conservation: bool = True):
        self.name = "fixed"
        self.rank = {cid: i for i, cid in enumerate(order)}
        self.work_conservation = work_conservation

    def schedule(self, state):
        order = sorted(state.active, key=lambda c: (self.rank.get(c.coflow_id, len(self.rank)), *c.sort_key))
        return grant_in_order(state, order, self.work_conservation)

    def horizon(self, state, schedule, progress):
        return None
