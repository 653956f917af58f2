"""Coordination-free baselines: per-port FIFO priority queues and plain TCP sharing."""

from __future__ import annotations

import math

import numpy as np

from ..core import Origin, Schedule
from ..state import ClusterState
from .alloc import max_min_fair, work_conserve
from .base import Policy, empty_alloc
from .queues import _highs, total_bytes_queue


class AaloPolicy(Policy):
    """Coflows move down the queues on total bytes sent; each port then serves
    its flows by strict priority (queue, coflow arrival, flow id), each flow
    taking whatever both of its port sides still offer. No coordination of a
    coflow's flows across ports."""

    name = "aalo"

    def schedule(self, state: ClusterState) -> Schedule:
        qcfg = state.config.queue
        for c in state.active:
            q = total_bytes_queue(c.total_sent(), qcfg)
            if c.queue is not None and q != c.queue:
                c.transitions += 1
            c.queue = q
        order = sorted(state.active, key=lambda c: (c.queue, *c.sort_key))
        sched = Schedule(state.interval, state.delta_us, order=[c.coflow_id for c in order])
        rem_e = state.egress.copy()
        rem_i = state.ingress.copy()
        exhausted = False
        for c in order:
            a = empty_alloc(c)
            sched.alloc[c.coflow_id] = a
            if exhausted:
                continue
            idx = np.flatnonzero(state.ready(c))
            if len(idx):
                work_conserve(idx, c.src, c.dst, rem_e, rem_i, a.budget)
                a.origin[a.budget > 0] = Origin.INDEPENDENT
            exhausted = not (rem_e > 0).any() or not (rem_i > 0).any()
        return sched

    def horizon(self, state, schedule, progress):
        highs = _highs(state.config.queue)
        best = math.inf
        for c in state.active:
            e = progress.get(c.coflow_id)
            if e is None or c.queue >= len(highs):
                continue
            tot = int(e.sum())
            if tot > 0 and highs[c.queue] < 2**62:
                best = min(best, (highs[c.queue] - c.total_sent()) // tot + 1)
        return None if best == math.inf else max(1, best)


class UncoordinatedTCP(Policy):
    """Max-min fair sharing of every port among all flows, no coflow awareness."""

    name = "uc-tcp"

    def schedule(self, state: ClusterState) -> Schedule:
        sched = Schedule(state.interval, state.delta_us,
                         order=[c.coflow_id for c in state.active])
        P = state.port_count
        parts = []
        for c in state.active:
            a = empty_alloc(c)
            sched.alloc[c.coflow_id] = a
            idx = np.flatnonzero(state.ready(c))
            if len(idx):
                parts.append((a, idx, c.src[idx] * P + c.dst[idx]))
        if not parts:
            return sched
        keys = np.concatenate([p[2] for p in parts])
        pairs, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
        rem_e = state.egress.copy()
        rem_i = state.ingress.copy()
        rates = max_min_fair(pairs // P, pairs % P, rem_e, rem_i, counts)
        flat = rates[inv]
        pos = 0
        for a, idx, _ in parts:
            a.budget[idx] = flat[pos:pos + len(idx)]
            a.origin[idx[a.budget[idx] > 0]] = Origin.INDEPENDENT
            pos += len(idx)
        return sched

    def horizon(self, state, schedule, progress):
        return None
