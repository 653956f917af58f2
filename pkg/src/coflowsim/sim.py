"""Interval-driven simulation of the coordinator/agent pipeline.

Interval ``n`` covers ``[n*delta, (n+1)*delta)``. At its start the policy sees
the flow statistics accumulated up to that instant and returns the schedule
the agents follow for the whole interval. A coflow arriving (or released by
its DAG parents) during interval ``n`` is first visible at ``n + 1``; the same
rule applies to dynamics events. A flow that finishes inside an interval
records its exact finish time and its share idles until the next schedule.

When nothing but byte counts changes, consecutive schedules are identical, so
the loop applies one schedule for as many intervals as the policy's horizon
and the next arrival, completion or event allow (``skip_ahead``).
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .core import (US_PER_S, Availability, CoFlow, ConfigError, DynamicsError, Origin,
                   Schedule, SimConfig, SimulationError)
from .policies import Policy, make_policy
from .state import ClusterState, CoflowState
from .trace import DynamicsEvent, EventKind, Trace, TraceHeader, scale_arrivals


@dataclass(frozen=True)
class CoflowRecord:
    coflow_id: int
    arrival_us: int
    release_us: int
    width: int
    total_size: int
    completion_us: int
    fct_us: tuple[int, ...]
    flow_sizes: tuple[int, ...]
    transitions: int = 0
    expiries: int = 0

    @property
    def cct_us(self) -> int:
        return self.completion_us - self.release_us


@dataclass
class RunResult:
    policy: str
    records: dict[int, CoflowRecord] = field(default_factory=dict)
    # (first interval, span, bytes moved over the span)
    utilization: list[tuple[int, int, int]] = field(default_factory=list)
    intervals: int = 0
    schedules: int = 0
    rejected: list[tuple[DynamicsEvent, str]] = field(default_factory=list)
    seed: int = 0

    def ccts(self) -> dict[int, int]:
        return {cid: r.cct_us for cid, r in self.records.items()}

    def delivered_bytes(self) -> int:
        return sum(r.total_size for r in self.records.values())


def _as_trace(trace, config: SimConfig) -> Trace:
    if isinstance(trace, Trace):
        return trace
    coflows = list(trace)
    if config.port_count is not None:
        ports = config.port_count
    else:
        ports = 1 + max((p for c in coflows for p in c.ports), default=0)
    return Trace(TraceHeader(ports, max(1, len(coflows))), coflows)


def inject(event: DynamicsEvent, state: ClusterState, policy: Policy | None = None,
           lookup: dict | None = None) -> ClusterState:
    """Apply a dynamics event to the live state.

    Stragglers cap a flow's transmit rate; restarts zero its progress and
    flag the coflow for re-queueing; a coordinator restart recomputes every
    deadline. Raises DynamicsError for flows that are not active or already done.
    """
    if event.kind is EventKind.COORDINATOR_RESTART:
        if policy is not None:
            policy.on_coordinator_restart(state)
        return state
    if lookup is None:
        lookup = {int(f): (c, i) for c in state.active for i, f in enumerate(c.flow_ids)}
    hit = lookup.get(event.flow_id)
    if hit is None:
        raise DynamicsError(f"flow {event.flow_id} is not active")
    c, i = hit
    if c.sent[i] >= c.size[i]:
        raise DynamicsError(f"flow {event.flow_id} already complete")
    if event.kind is EventKind.STRAGGLER:
        c.cap[i] = state.config.bytes_per_interval(event.rate_cap)
    else:
        c.sent[i] = 0
        if state.pipelined:
            c.avail[i] = 0
            c.avail_start[i] = state.interval
    c.affected = True
    c.touch()
    return state


def run(trace, config: SimConfig | None = None, dag: dict | None = None,
        dynamics: Iterable[DynamicsEvent] = (), policy: Policy | None = None,
        observer: Callable | None = None, audit=None, skip_ahead: bool = True) -> RunResult:
    """Replay a trace under one policy and return per-coflow completion records."""
    config = config or SimConfig()
    trace = _as_trace(trace, config)
    P = config.port_count or trace.port_count
    coflows = scale_arrivals(trace.coflows, config.arrival_scale)
    specs: dict[int, CoFlow] = {}
    owner: dict[int, int] = {}
    for c in coflows:
        if c.coflow_id in specs:
            raise ConfigError(f"duplicate coflow id {c.coflow_id}")
        specs[c.coflow_id] = c
        for f in c.flows:
            if not (0 <= f.src_port < P and 0 <= f.dst_port < P):
                raise ConfigError(f"flow {f.flow_id} uses a port outside [0, {P})")
            owner[f.flow_id] = c.coflow_id
    dag = dag or {}
    children: dict[int, list[int]] = {}
    waiting: dict[int, int] = {}
    for child, parents in dag.items():
        for x in (child, *parents):
            if x not in specs:
                raise ConfigError(f"DAG references unknown coflow {x}")
        waiting[child] = len(parents)
        for p in parents:
            children.setdefault(p, []).append(child)
    events = sorted(dynamics, key=lambda e: e.time_us)
    for e in events:
        if e.flow_id is not None and e.flow_id not in owner:
            raise DynamicsError(f"dynamics event references unknown flow {e.flow_id}")

    policy = policy or make_policy(config.policy, config)
    delta = config.delta_us
    pipelined = config.availability is Availability.PIPELINED
    prod_bpi = config.bytes_per_interval(config.producer_rate or config.port_rate)

    pending: list[tuple[int, int, int, int]] = []
    for c in coflows:
        if c.coflow_id not in waiting:
            pending.append((c.arrival_us // delta + 1, 0, c.coflow_id, c.arrival_us))
    heapq.heapify(pending)
    parent_done: dict[int, int] = {}

    state = ClusterState(0, delta, config, P)
    by_id: dict[int, CoflowState] = {}
    lookup: dict[int, tuple[CoflowState, int]] = {}
    early_caps: dict[int, int] = {}
    result = RunResult(policy.name, seed=config.seed)
    records = {}
    di = 0
    n = 0

    while True:
        registered = False
        while pending and pending[0][0] <= n:
            _, _, cid, rel = heapq.heappop(pending)
            cs = CoflowState(specs[cid], rel, n)
            if pipelined:
                cs.avail[:] = 0
            for i, fid in enumerate(cs.flow_ids.tolist()):
                lookup[fid] = (cs, i)
                if fid in early_caps:
                    cs.cap[i] = early_caps.pop(fid)
                    cs.affected = True
            by_id[cid] = cs
            state.active.append(cs)
            registered = True
        if registered:
            state.active.sort(key=lambda c: c.sort_key)
        state.interval = n
        while di < len(events) and events[di].time_us // delta + 1 <= n:
            ev = events[di]
            di += 1
            if ev.flow_id is not None and ev.flow_id not in lookup:
                cid = owner[ev.flow_id]
                if ev.kind is EventKind.STRAGGLER and cid not in records:
                    early_caps[ev.flow_id] = config.bytes_per_interval(ev.rate_cap)
                else:
                    why = "coflow already complete" if cid in records else "coflow not registered"
                    result.rejected.append((ev, why))
                continue
            try:
                inject(ev, state, policy, lookup)
            except DynamicsError as err:
                result.rejected.append((ev, str(err)))
        if pipelined:
            for c in state.active:
                np.minimum(c.size, prod_bpi * (n - c.avail_start), out=c.avail)
                np.maximum(c.avail, c.sent, out=c.avail)

        if not state.active:
            nxt = []
            if pending:
                nxt.append(pending[0][0])
            if di < len(events):
                nxt.append(events[di].time_us // delta + 1)
            if not nxt:
                break
            n = max(n + 1, min(nxt))
            continue

        sched = policy.schedule(state)
        result.schedules += 1

        progress: dict[int, np.ndarray] = {}
        rates: dict[int, np.ndarray] = {}
        span = math.inf
        for c in state.active:
            c.last_budget[:] = 0
        for cid, a in sched.alloc.items():
            if not a.budget.any():
                continue
            c = by_id[cid]
            c.last_budget[:] = a.budget
            rate = a.budget.copy()
            capped = c.cap >= 0
            if capped.any():
                rate[capped] = np.minimum(rate[capped], c.cap[capped])
            rate[c.sent >= c.size] = 0
            step = np.minimum(rate, np.maximum(c.avail - c.sent, 0)) if pipelined else rate
            rates[cid] = rate
            progress[cid] = step
            m = step > 0
            if m.any():
                left = (c.size - c.sent)[m]
                span = min(span, int((-(-left // step[m])).min()))
        if pending:
            span = min(span, pending[0][0] - n)
        if di < len(events):
            span = min(span, events[di].time_us // delta + 1 - n)
        if not skip_ahead or pipelined:
            span = min(span, 1)
        h = policy.horizon(state, sched, progress)
        if h is not None:
            span = min(span, h)
        if span == math.inf:
            raise SimulationError(
                f"no progress possible at interval {n} with {len(state.active)} active coflows")
        span = max(1, int(span))
        if n + span > config.max_intervals:
            raise SimulationError(f"run exceeded {config.max_intervals} intervals")
        if observer is not None:
            observer(state, sched, span)
        if audit is not None:
            _audit(audit, sched, n, span, delta)

        moved_total = 0
        for cid, step in progress.items():
            c = by_id[cid]
            left = c.size - c.sent
            moved = np.minimum(step * span, left)
            moved_total += int(moved.sum())
            done = (step > 0) & (left <= step * span)
            if done.any():
                f = np.flatnonzero(done)
                tail = left[f] - (span - 1) * step[f]
                r = rates[cid][f]
                c.finish_us[f] = (n + span - 1) * delta + (-(-tail * delta // r))
                c.remaining_flows -= len(f)
                c.touch()
            c.sent += moved
        result.utilization.append((n, span, moved_total))
        n += span

        finished = [c for c in state.active if c.remaining_flows == 0]
        if finished:
            for c in finished:
                c.completion_us = int(c.finish_us.max())
                records[c.coflow_id] = CoflowRecord(
                    c.coflow_id, c.arrival_us, c.release_us, c.n, c.total_size, c.completion_us,
                    tuple(int(x) - c.release_us for x in c.finish_us.tolist()),
                    tuple(c.size.tolist()), c.transitions, c.expiries)
                for fid in c.flow_ids.tolist():
                    del lookup[fid]
                del by_id[c.coflow_id]
                for ch in children.get(c.coflow_id, ()):
                    parent_done[ch] = max(parent_done.get(ch, 0), c.completion_us)
                    waiting[ch] -= 1
                    if waiting[ch] == 0:
                        rel = max(specs[ch].arrival_us, parent_done[ch])
                        heapq.heappush(pending, (rel // delta + 1, 1, ch, rel))
            state.active = [c for c in state.active if c.remaining_flows > 0]

    result.records = dict(sorted(records.items()))
    result.intervals = n
    stuck = [cid for cid, w in waiting.items() if w > 0]
    if stuck:
        raise SimulationError(f"coflows never released by their DAG parents: {stuck[:10]}")
    return result


def _audit(out, sched: Schedule, n: int, span: int, delta: int) -> None:
    for cid, a in sched.alloc.items():
        for i in np.flatnonzero(a.budget).tolist():
            b = int(a.budget[i])
            rate = b * US_PER_S / delta
            out.write(f"{n}\t{span}\t{int(a.flow_ids[i])}\t{cid}\t{b}\t{rate:.6g}\t"
                      f"{Origin(int(a.origin[i])).name}\n")


def _run_one(args):
    name, trace, config, dag, dynamics = args
    return name, run(trace, config, dag, dynamics, policy=make_policy(name, config))


def run_comparison(trace, policies: list[str], config: SimConfig | None = None,
                   dag: dict | None = None, dynamics=(), jobs: int = 1) -> dict[str, RunResult]:
    """Replay the same trace once per policy; results keyed by policy name."""
    config = config or SimConfig()
    if len(policies) < 2:
        raise ConfigError("a comparison needs at least two policies")
    for name in policies:
        make_policy(name, config)
    tasks = [(name, trace, config, dag, tuple(dynamics)) for name in policies]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = dict(pool.map(_run_one, tasks))
    else:
        done = dict(map(_run_one, tasks))
    return {name: done[name] for name in policies}
