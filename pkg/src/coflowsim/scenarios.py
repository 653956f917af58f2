"""Small hand-built instances with known optimal/heuristic completion times.

Each flow size is a multiple of ``t`` bytes; with the default ``t`` of 100 MB
one ``t`` spans 100 intervals at 1 Gbps and δ = 8 ms, so the one-interval
registration latency is small next to the quantities being compared.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .core import GBPS, MB, CoFlow, FlowSpec, QueueConfig, SimConfig
from .policies import FixedOrderPolicy, Policy, make_policy
from .sim import RunResult, run
from .trace import DynamicsEvent, EventKind, Trace, TraceHeader

T_BYTES = 100 * MB


def build(layout: dict[int, list[tuple[int, int, float]]], t: int = T_BYTES,
          arrival_us: int = 0) -> Trace:
    """``layout`` maps coflow id -> [(src, dst, size in units of t)]."""
    coflows = []
    fid = 0
    ports = 0
    for cid in sorted(layout):
        flows = []
        for src, dst, units in layout[cid]:
            fid += 1
            flows.append(FlowSpec(fid, cid, src, dst, int(Fraction(str(units)) * t)))
            ports = max(ports, src + 1, dst + 1)
        coflows.append(CoFlow(cid, arrival_us, tuple(flows)))
    return Trace(TraceHeader(ports, len(coflows)), coflows)


def lcof_config(**kw) -> SimConfig:
    """One queue and a very loose deadline, so ordering is purely by contention."""
    kw.setdefault("queue", QueueConfig(K=1))
    kw.setdefault("deadline_factor", 10_000)
    return SimConfig(**kw)


# ports: sources 0-3, destinations 10-15
def head_of_line() -> Trace:
    """One coflow spans three ports each shared with a single-port coflow (k = 3, 1, 1, 1)."""
    return build({
        1: [(0, 10, 1)],
        2: [(0, 11, 1), (2, 12, 1), (3, 13, 1)],
        3: [(2, 14, 1)],
        4: [(3, 15, 1)],
    })


def idle_ports() -> Trace:
    """Coflow 1 blocks coflow 2 at source 1 and coflow 3 at destination 11, idling source 2."""
    return build({
        1: [(1, 11, 1)],
        2: [(2, 10, 1), (1, 12, 1)],
        3: [(2, 11, 1)],
    })


def _three_way(short: float, left: float, right: float) -> Trace:
    # ports: A=0, B=1, C=2, D=3; coflow 1 needs A and D, 2 needs A, 3 needs D
    return build({
        1: [(0, 3, short)],
        2: [(0, 1, left)],
        3: [(2, 3, right)],
    })


def contention_vs_size() -> Trace:
    """The shortest coflow is also the most contended: k = 2, 1, 1; sizes 5t, 6t, 7t."""
    return _three_way(5, 6, 7)


def lcof_counterexample() -> Trace:
    """Same layout, but the contended coflow is short enough that it should go first."""
    return _three_way(1, 2.5, 2.5)


def mean_cct_t(result: RunResult, config: SimConfig, t: int = T_BYTES) -> Fraction:
    """Average CCT in units of t, measured from registration (latency removed)."""
    delta = config.delta_us
    bpi = config.line_bytes
    t_us = Fraction(t, bpi) * delta
    vals = [Fraction(r.cct_us - (r.release_us // delta + 1) * delta + r.release_us)
            for r in result.records.values()]
    return sum(vals) / len(vals) / t_us


def best_order(trace: Trace, config: SimConfig, work_conservation: bool = True):
    """Exhaustive search over fixed priority orders; returns (mean CCT in t, order)."""
    ids = [c.coflow_id for c in trace.coflows]
    best = None
    for perm in itertools.permutations(ids):
        res = run(trace, config, policy=FixedOrderPolicy(perm, work_conservation))
        v = mean_cct_t(res, config)
        if best is None or v < best[0]:
            best = (v, perm)
    return best


def simulate(trace: Trace, policy: str | Policy, config: SimConfig | None = None) -> Fraction:
    config = config or lcof_config()
    p = make_policy(policy, config) if isinstance(policy, str) else policy
    return mean_cct_t(run(trace, config, policy=p), config)


def restart_victim(restart_ms: int, competitor: float = 2, competitor_ms: int = 420,
                   third: bool = False, stragglers: bool = False):
    """Ten-flow coflow whose last flow restarts mid-run, plus late single-flow competitors.

    Returns (trace, dynamics events). The victim's flows are ``0.5t`` each on
    ports i -> 20+i; the competitor shares the restarted flow's source port.
    With ``stragglers`` the last five victim flows start capped at a tenth of
    the line rate, which spreads their progress so the queue moves visibly.
    """
    layout = {1: [(i, 20 + i, 0.5) for i in range(10)], 2: [(9, 40, competitor)]}
    if third:
        layout[3] = [(41, 29, competitor)]
    trace = build(layout)
    at = competitor_ms * 1000
    trace.coflows[1:] = [CoFlow(c.coflow_id, at, c.flows) for c in trace.coflows[1:]]
    events = []
    if stragglers:
        events = [DynamicsEvent(0, EventKind.STRAGGLER, fid, GBPS // 10) for fid in range(6, 11)]
    events.append(DynamicsEvent(restart_ms * 1000, EventKind.FLOW_RESTART, 10))
    return trace, events
