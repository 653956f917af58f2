"""Priority-queue placement, starvation deadlines and contention counting."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


from ..core import US_PER_S, QueueConfig
from ..state import CoflowState


@lru_cache(maxsize=64)
def _highs(config: QueueConfig) -> tuple[int, ...]:
    return config.highs


def assign_queue(m_c, n_c: int, config: QueueConfig) -> int:
    """Smallest queue q with ``m_c <= Q^hi_q / n_c``; the last queue otherwise.

    A value exactly on a boundary stays in the higher-priority queue.
    """
    if n_c < 1:
        raise ValueError("coflow width must be >= 1")
    highs = _highs(config)
    return bisect.bisect_left(highs, m_c * n_c)


def total_bytes_queue(total_sent, config: QueueConfig) -> int:
    """Queue chosen from the total bytes a coflow has sent (no per-flow split)."""
    return bisect.bisect_left(_highs(config), total_sent)


def residence_time(q: int, n_c: int, config: QueueConfig, line_rate: int) -> Fraction:
    """Shortest stay (seconds) of an n_c-wide coflow in queue q at line rate.

    The last queue has no upper threshold; its stay is extrapolated as E times
    the stay in the queue above it (or S at line rate when K == 1).
    """
    highs = _highs(config)
    if q < config.K - 1:
        lo = highs[q - 1] if q > 0 else 0
        gap = Fraction(highs[q] - lo)
    elif config.K == 1:
        gap = Fraction(config.S)
    else:
        lo = highs[-2] if config.K > 2 else 0
        gap = Fraction(str(config.E)) * (highs[-1] - lo)
    return gap / (n_c * line_rate)


def set_deadline(now_us: int, q: int, c_q: int, n_c: int, config: QueueConfig,
                 d: float, line_rate: int) -> int:
    """FIFO-derived deadline ``now + d * C_q * t_q`` in microseconds."""
    t = residence_time(q, n_c, config, line_rate)
    return now_us + math.ceil(Fraction(str(d)) * c_q * t * US_PER_S)


@dataclass(frozen=True)
class ContentionRecord:
    coflow_id: int
    k: int


def compute_contention(coflow: CoflowState, active: list[CoflowState]) -> ContentionRecord:
    mine = set(coflow.ports().tolist())
    k = 0
    for other in active:
        if other is coflow or other.remaining_flows == 0:
            continue
        if mine.intersection(other.ports().tolist()):
            k += 1
    return ContentionRecord(coflow.coflow_id, k)


def contention_all(active: list[CoflowState], groups=None) -> dict[int, int]:
    """k_c for every active coflow, using per-port bitsets.

    ``groups`` optionally maps coflow id -> group key (e.g. queue index); then
    only coflows of the same group count against each other.
    """
    out = {}
    buckets: dict = {}
    for c in active:
        buckets.setdefault(None if groups is None else groups[c.coflow_id], []).append(c)
    for members in buckets.values():
        masks: dict[int, int] = {}
        ports = []
        for i, c in enumerate(members):
            ps = c.ports().tolist()
            ports.append(ps)
            bit = 1 << i
            for p in ps:
                masks[p] = masks.get(p, 0) | bit
        for i, c in enumerate(members):
            u = 0
            for p in ports[i]:
                u |= masks[p]
            out[c.coflow_id] = max(0, u.bit_count() - 1)
    return out


def dynamics_estimate(c: CoflowState):
    """Largest estimated remaining length over unfinished flows.

    Unfinished flows are assumed to be as long as the median finished flow;
    returns None when nothing finished yet (no basis for an estimate) or
    nothing is left to send.
    """
    done = c.sent >= c.size
    if not done.any() or done.all():
        return None
    vals = sorted(c.size[done].tolist())
    h = len(vals) // 2
    f_e = Fraction(vals[h]) if len(vals) % 2 else Fraction(vals[h - 1] + vals[h], 2)
    least = int(c.sent[~done].min())
    return max(Fraction(0), f_e - least)


def requeue_on_dynamics(c: CoflowState, config: QueueConfig) -> int | None:
    m = dynamics_estimate(c)
    if m is None:
        return None
    return assign_queue(m, c.n, config)
