"""Contention-aware all-or-none scheduler and its ablations."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from ..state import ClusterState, CoflowState
from .base import Policy, grant_in_order
from .queues import (_highs, assign_queue, contention_all, requeue_on_dynamics,
                     set_deadline, total_bytes_queue)


class SaathPolicy(Policy):
    """Priority queues + all-or-none + least-contention-first + deadlines.

    The switches reproduce the ablation arms: ``per_flow=False`` moves coflows
    on total bytes sent, ``lcof=False`` orders each queue FIFO, and
    ``deadlines=False`` drops the starvation guard (FIFO needs none).
    """

    def __init__(self, name="saath", per_flow=True, lcof=True, deadlines=True,
                 work_conservation=True, contention_scope="global", requeue=True,
                 width_scaled_deadline=False):
        self.name = name
        self.per_flow = per_flow
        self.lcof = lcof
        self.deadlines = deadlines
        self.work_conservation = work_conservation
        self.contention_scope = contention_scope
        self.requeue = requeue
        # True divides the residence time by the coflow width (per-flow gap);
        # the default uses the full threshold gap, see residence_time
        self.width_scaled_deadline = width_scaled_deadline
        self.last_contention: dict[int, int] = {}

    def queue_for(self, c: CoflowState, state: ClusterState) -> int:
        qcfg = state.config.queue
        if self.requeue and c.affected:
            q = requeue_on_dynamics(c, qcfg)
            if q is not None:
                return q
        if self.per_flow:
            return assign_queue(c.m_c(), c.n, qcfg)
        return total_bytes_queue(c.total_sent(), qcfg)

    def _deadline(self, state, c, q, c_q):
        cfg = state.config
        n = c.n if self.width_scaled_deadline else 1
        return set_deadline(state.now_us, q, c_q, n, cfg.queue, cfg.deadline_factor, cfg.port_rate)

    def schedule(self, state: ClusterState):
        now = state.now_us
        active = state.active
        moved = []
        for c in active:
            q = self.queue_for(c, state)
            if c.queue != q:
                moved.append((c, q))
        moving = {id(c) for c, _ in moved}
        occupancy = Counter(c.queue for c in active if id(c) not in moving)
        for c, q in moved:
            if c.queue is not None:
                c.transitions += 1
            c.queue = q
            c.queue_entry_us = now
            c.expired = False
            occupancy[q] += 1
            if self.deadlines:
                # C_q counts the entering coflow itself, i.e. its FIFO position
                c.deadline_us = self._deadline(state, c, q, occupancy[q])

        if self.deadlines:
            for c in active:
                if not c.expired and c.deadline_us is not None and c.deadline_us <= now:
                    c.expired = True
                    c.expiries += 1

        if self.lcof:
            groups = {c.coflow_id: c.queue for c in active} if self.contention_scope == "queue" else None
            k = contention_all(active, groups)
        else:
            k = {}
        self.last_contention = k

        expired = sorted((c for c in active if c.expired),
                         key=lambda c: (c.deadline_us, *c.sort_key))
        rest = sorted((c for c in active if not c.expired),
                      key=lambda c: (c.queue, k.get(c.coflow_id, 0), *c.sort_key))
        return grant_in_order(state, expired + rest, self.work_conservation)

    def horizon(self, state, schedule, progress):
        now, delta = state.now_us, state.delta_us
        K = state.config.queue.K
        highs = _highs(state.config.queue)
        best = math.inf
        for c in state.active:
            if self.requeue and c.affected and (c.sent >= c.size).any():
                return 1
            if self.deadlines and not c.expired and c.deadline_us is not None:
                best = min(best, -(-(c.deadline_us - now) // delta))
            e = progress.get(c.coflow_id)
            if e is None or c.queue >= K - 1:
                continue
            hi = highs[c.queue]
            if hi >= 2**62:
                continue
            if self.per_flow:
                m = e > 0
                if m.any():
                    n = c.n
                    j = (hi - c.sent[m] * n) // (e[m] * n) + 1
                    best = min(best, int(j.min()))
            else:
                tot = int(e.sum())
                if tot > 0:
                    best = min(best, (hi - c.total_sent()) // tot + 1)
        return None if best == math.inf else max(1, best)

    def on_coordinator_restart(self, state):
        if not self.deadlines:
            return
        by_queue: dict[int, list[CoflowState]] = {}
        for c in state.active:
            if c.queue is not None:
                by_queue.setdefault(c.queue, []).append(c)
        for q, members in by_queue.items():
            members.sort(key=lambda c: (c.queue_entry_us, *c.sort_key))
            for pos, c in enumerate(members, start=1):
                c.deadline_us = self._deadline(state, c, q, pos)
                c.expired = False


def ablation(name: str, **kw) -> SaathPolicy:
    if name == "saath-an":
        return SaathPolicy(name, per_flow=False, lcof=False, deadlines=False, **kw)
    if name == "saath-an-pf":
        return SaathPolicy(name, per_flow=True, lcof=False, deadlines=False, **kw)
    raise KeyError(name)
