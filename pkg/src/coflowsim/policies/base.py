from __future__ import annotations

import numpy as np

from ..core import Allocation, Origin, Schedule
from ..state import ClusterState, CoflowState
from .alloc import aon_rate, work_conserve


class Policy:
    """A scheduling policy maps the cluster state to the next interval's schedule.

    ``horizon`` tells the simulator for how many intervals the returned schedule
    stays valid if only flow progress changes (no arrival, completion or
    dynamics event); ``None`` means until the next such event.
    """

    name = "policy"

    def schedule(self, state: ClusterState) -> Schedule:
        raise NotImplementedError

    def horizon(self, state: ClusterState, schedule: Schedule, progress: dict) -> int | None:
        return 1

    def on_coordinator_restart(self, state: ClusterState) -> None:
        pass


def empty_alloc(c: CoflowState) -> Allocation:
    return Allocation(c.flow_ids, np.zeros(c.n, np.int64), np.zeros(c.n, np.int8))


def grant_in_order(state: ClusterState, order: list[CoflowState],
                   work_conservation: bool = True) -> Schedule:
    """All-or-none scan over ``order`` followed by a work-conservation pass."""
    sched = Schedule(state.interval, state.delta_us, order=[c.coflow_id for c in order])
    rem_e = state.egress.copy()
    rem_i = state.ingress.copy()
    left = []
    for c in order:
        ready = state.ready(c)
        a = empty_alloc(c)
        sched.alloc[c.coflow_id] = a
        if state.aon_ready(c, ready):
            idx = np.flatnonzero(ready)
            r = aon_rate(c.src[idx], c.dst[idx], rem_e, rem_i)
            if r > 0:
                a.budget[idx] = r
                a.origin[idx] = Origin.ALL_OR_NONE
                continue
        if ready.any():
            left.append((c, ready))
    if work_conservation:
        for c, ready in left:
            if not (rem_e > 0).any() or not (rem_i > 0).any():
                break
            a = sched.alloc[c.coflow_id]
            work_conserve(np.flatnonzero(ready), c.src, c.dst, rem_e, rem_i, a.budget)
            a.origin[a.budget > 0] = Origin.WORK_CONSERVATION
    return sched
