"""Reading and writing coflow-benchmark traces, DAG sidecars and dynamics files.

Trace format (whitespace separated)::

    <port_count> <coflow_count>
    <id> <arrival_ms> <M> <m_1> ... <m_M> <R> <r_1:mb_1> ... <r_R:mb_R>

Each reducer's megabytes are split evenly over the mappers (ceiling to whole
bytes), so a coflow carries M x R flows.
"""

from __future__ import annotations

import enum
import graphlib
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .core import MB, US_PER_MS, CoFlow, ConfigError, FlowSpec, TraceError


@dataclass(frozen=True)
class TraceHeader:
    port_count: int
    coflow_count: int


@dataclass
class Trace:
    header: TraceHeader
    coflows: list[CoFlow]

    @property
    def port_count(self) -> int:
        return self.header.port_count

    def by_id(self) -> dict[int, CoFlow]:
        return {c.coflow_id: c for c in self.coflows}

    def flow_count(self) -> int:
        return sum(c.width for c in self.coflows)


def _number(tok, line, what):
    try:
        return int(tok)
    except ValueError:
        raise TraceError(f"expected integer {what}, got {tok!r}", line) from None


def _ms_to_us(tok, line):
    try:
        v = Fraction(tok) * US_PER_MS
    except (ValueError, ZeroDivisionError):
        raise TraceError(f"bad arrival time {tok!r}", line) from None
    if v < 0:
        raise TraceError(f"negative arrival time {tok!r}", line)
    return math.floor(v)


def flow_size(mb_text: str, mappers: int) -> int:
    """Bytes carried by each mapper's flow towards a reducer receiving ``mb_text`` MB."""
    return math.ceil(Fraction(mb_text) * MB / mappers)


def parse_trace(text: str) -> Trace:
    """Parse a benchmark trace; raises TraceError at the first problem."""
    trace, errors = _parse(text, collect=False)
    return trace


def check_trace(text: str) -> tuple[Trace | None, list[TraceError]]:
    """Parse as far as possible, returning every line-level error found."""
    return _parse(text, collect=True)


def _parse(text, collect):
    errors: list[TraceError] = []
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, toks) for no, toks in lines if toks]
    try:
        if not lines:
            raise TraceError("empty trace", 1)
        no, toks = lines[0]
        if len(toks) != 2:
            raise TraceError("header must be '<port_count> <coflow_count>'", no)
        ports = _number(toks[0], no, "port count")
        count = _number(toks[1], no, "coflow count")
        if ports < 1 or count < 1:
            raise TraceError("port and coflow counts must be >= 1", no)
    except TraceError as e:
        if not collect:
            raise
        return None, [e]
    if len(lines) - 1 != count:
        e = TraceError(f"header announces {count} coflows but {len(lines) - 1} follow", lines[0][0])
        if not collect:
            raise e
        errors.append(e)

    coflows = []
    next_flow = 0
    prev_id = None
    for no, toks in lines[1:]:
        try:
            c, prev_id = _coflow_line(no, toks, ports, prev_id, next_flow)
        except TraceError as e:
            if not collect:
                raise
            errors.append(e)
            continue
        next_flow += c.width
        coflows.append(c)
    coflows.sort(key=lambda c: (c.arrival_us, c.coflow_id))
    trace = Trace(TraceHeader(ports, count), coflows)
    return (None if errors else trace), errors


def _coflow_line(no, toks, ports, prev_id, next_flow):
    if len(toks) < 5:
        raise TraceError("truncated coflow line", no)
    cid = _number(toks[0], no, "coflow id")
    if prev_id is not None and cid <= prev_id:
        raise TraceError(f"coflow id {cid} is not increasing", no)
    arrival = _ms_to_us(toks[1], no)
    m = _number(toks[2], no, "mapper count")
    if m < 1:
        raise TraceError("coflow has zero mappers", no)
    if len(toks) < 3 + m + 1:
        raise TraceError("truncated mapper list", no)
    mappers = tuple(_number(t, no, "mapper port") for t in toks[3:3 + m])
    r = _number(toks[3 + m], no, "reducer count")
    if r < 1:
        raise TraceError("coflow has zero reducers", no)
    rtoks = toks[4 + m:]
    if len(rtoks) != r:
        raise TraceError(f"expected {r} reducer entries, found {len(rtoks)}", no)
    reducers = []
    for t in rtoks:
        port, sep, mb = t.partition(":")
        if not sep:
            raise TraceError(f"reducer entry {t!r} is not 'port:mb'", no)
        port = _number(port, no, "reducer port")
        try:
            size = Fraction(mb)
        except (ValueError, ZeroDivisionError):
            raise TraceError(f"bad reducer size {mb!r}", no) from None
        if size <= 0:
            raise TraceError(f"reducer size must be positive, got {mb}", no)
        reducers.append((port, mb))
    for p in mappers + tuple(p for p, _ in reducers):
        if not 0 <= p < ports:
            raise TraceError(f"port {p} outside [0, {ports})", no)
    flows = []
    fid = next_flow
    for src in mappers:
        for dst, mb in reducers:
            flows.append(FlowSpec(fid, cid, src, dst, flow_size(mb, m)))
            fid += 1
    return CoFlow(cid, arrival, tuple(flows), mappers, tuple(reducers)), cid


def _fmt_ms(us: int) -> str:
    ms = Fraction(us, US_PER_MS)
    if ms.denominator == 1:
        return str(ms.numerator)
    return f"{float(ms):.3f}".rstrip("0").rstrip(".")


def emit_trace(trace: Trace) -> str:
    """Serialise a trace back to the coflow-benchmark text format."""
    out = [f"{trace.header.port_count} {len(trace.coflows)}"]
    for c in sorted(trace.coflows, key=lambda c: c.coflow_id):
        if not c.mappers or not c.reducers:
            raise TraceError(f"coflow {c.coflow_id} has no mapper/reducer layout to emit")
        parts = [str(c.coflow_id), _fmt_ms(c.arrival_us), str(len(c.mappers))]
        parts += [str(p) for p in c.mappers]
        parts.append(str(len(c.reducers)))
        parts += [f"{p}:{mb}" for p, mb in c.reducers]
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def scale_arrivals(coflows: list[CoFlow], A: float) -> list[CoFlow]:
    """Compress (A > 1) or stretch (A < 1) arrival times by the factor A."""
    if A <= 0:
        raise ConfigError(f"arrival scale must be positive, got {A}")
    a = Fraction(str(A))
    if a == 1:
        return list(coflows)
    return [replace(c, arrival_us=math.floor(c.arrival_us / a)) for c in coflows]


# --------------------------------------------------------------------------- DAGs

def parse_dag(text: str, coflow_ids=None) -> dict[int, tuple[int, ...]]:
    """Map child coflow id -> parent ids from a ``child parent`` sidecar."""
    parents: dict[int, list[int]] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].split()
        if not ln:
            continue
        if len(ln) != 2:
            raise TraceError("DAG line must be '<child> <parent>'", i)
        child, parent = (_number(t, i, "coflow id") for t in ln)
        if coflow_ids is not None:
            for x in (child, parent):
                if x not in coflow_ids:
                    raise TraceError(f"DAG references unknown coflow {x}", i)
        parents.setdefault(child, []).append(parent)
    sorter = graphlib.TopologicalSorter({c: ps for c, ps in parents.items()})
    try:
        sorter.prepare()
    except graphlib.CycleError as e:
        cycle = e.args[1]
        raise TraceError("dependency cycle: " + " -> ".join(map(str, cycle))) from None
    return {c: tuple(dict.fromkeys(ps)) for c, ps in parents.items()}


# ----------------------------------------------------------------------- dynamics

class EventKind(str, enum.Enum):
    STRAGGLER = "STRAGGLER"
    FLOW_RESTART = "FLOW_RESTART"
    COORDINATOR_RESTART = "COORDINATOR_RESTART"


@dataclass(frozen=True)
class DynamicsEvent:
    time_us: int
    kind: EventKind
    flow_id: int | None = None
    rate_cap: int | None = None  # bytes/second, stragglers only

    def __post_init__(self):
        if self.time_us < 0:
            raise TraceError("dynamics event time must be >= 0")
        object.__setattr__(self, "kind", EventKind(self.kind))
        if self.kind is not EventKind.COORDINATOR_RESTART and self.flow_id is None:
            raise TraceError(f"{self.kind.value} needs a flow id")
        if self.kind is EventKind.STRAGGLER and (self.rate_cap is None or self.rate_cap <= 0):
            raise TraceError("STRAGGLER needs a positive rate cap")


def parse_dynamics(text: str, trace: Trace | None = None) -> list[DynamicsEvent]:
    """Parse ``time_ms KIND args`` lines.

    Kinds: ``STRAGGLER <flow_id> <cap_mbps>``, ``FLOW_RESTART <flow_id>``,
    ``COORDINATOR_RESTART`` and ``NODE_FAILURE <port>``; the latter needs the
    trace and expands into a restart of every flow touching the port.
    """
    flows = None
    if trace is not None:
        flows = {f.flow_id: f for c in trace.coflows for f in c.flows}
    events = []
    for i, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].split()
        if not ln:
            continue
        if len(ln) < 2:
            raise TraceError("dynamics line must be 'time_ms KIND args'", i)
        t = _ms_to_us(ln[0], i)
        kind, args = ln[1].upper(), ln[2:]
        if kind == "NODE_FAILURE":
            if flows is None:
                raise TraceError("NODE_FAILURE needs the trace to expand", i)
            if len(args) != 1:
                raise TraceError("NODE_FAILURE takes one port", i)
            port = _number(args[0], i, "port")
            for fid, f in flows.items():
                if port in (f.src_port, f.dst_port):
                    events.append(DynamicsEvent(t, EventKind.FLOW_RESTART, fid))
            continue
        try:
            k = EventKind(kind)
        except ValueError:
            raise TraceError(f"unknown dynamics kind {ln[1]!r}", i) from None
        if k is EventKind.STRAGGLER:
            if len(args) != 2:
                raise TraceError("STRAGGLER takes '<flow_id> <cap_mbps>'", i)
            try:
                cap = Fraction(args[1]) * 125_000
            except (ValueError, ZeroDivisionError):
                raise TraceError(f"bad straggler cap {args[1]!r}", i) from None
            if cap <= 0:
                raise TraceError("straggler cap must be positive", i)
            ev = DynamicsEvent(t, k, _number(args[0], i, "flow id"), math.floor(cap))
        elif k is EventKind.FLOW_RESTART:
            if len(args) != 1:
                raise TraceError("FLOW_RESTART takes one flow id", i)
            ev = DynamicsEvent(t, k, _number(args[0], i, "flow id"))
        else:
            if args:
                raise TraceError("COORDINATOR_RESTART takes no arguments", i)
            ev = DynamicsEvent(t, k)
        if flows is not None and ev.flow_id is not None and ev.flow_id not in flows:
            raise TraceError(f"unknown flow {ev.flow_id}", i)
        events.append(ev)
    events.sort(key=lambda e: e.time_us)
    return events


# ---------------------------------------------------------------------- synthesis

@dataclass(frozen=True)
class WorkloadClass:
    weight: float
    width_min: int
    width_max: int
    mb_min: float
    mb_max: float


@dataclass(frozen=True)
class SynthSpec:
    coflow_count: int = 100
    port_count: int = 50
    classes: tuple[WorkloadClass, ...] = (WorkloadClass(1.0, 1, 50, 1.0, 500.0),)
    mean_interarrival_ms: float = 100.0
    equal_flow_fraction: float = 0.5
    seed: int = 0


def fb_like(coflow_count=526, port_count=150, mean_interarrival_ms=6800.0, seed=0,
            equal_flow_fraction=0.65) -> SynthSpec:
    """Heavy-tailed mix loosely shaped like the public Facebook shuffle trace:
    mostly short narrow coflows, a minority of wide and very large ones."""
    return SynthSpec(
        coflow_count=coflow_count,
        port_count=port_count,
        classes=(
            WorkloadClass(0.50, 1, 10, 0.1, 100.0),
            WorkloadClass(0.15, 11, 400, 1.0, 100.0),
            WorkloadClass(0.15, 1, 10, 100.0, 2_000.0),
            WorkloadClass(0.20, 11, 2_000, 100.0, 20_000.0),
        ),
        mean_interarrival_ms=mean_interarrival_ms,
        equal_flow_fraction=equal_flow_fraction,
        seed=seed,
    )


def contended(coflow_count=200, port_count=40, mean_interarrival_ms=50.0, seed=0,
              equal_flow_fraction=0.6) -> SynthSpec:
    """Small cluster under heavy load, for sensitivity and out-of-sync studies."""
    return SynthSpec(
        coflow_count=coflow_count,
        port_count=port_count,
        classes=(
            WorkloadClass(0.50, 1, 10, 1.0, 100.0),
            WorkloadClass(0.20, 11, 100, 1.0, 100.0),
            WorkloadClass(0.15, 1, 10, 100.0, 1_000.0),
            WorkloadClass(0.15, 11, 100, 100.0, 2_000.0),
        ),
        mean_interarrival_ms=mean_interarrival_ms,
        equal_flow_fraction=equal_flow_fraction,
        seed=seed,
    )


def _layout(width, ports, rng, want_multi_reducer):
    pairs = [(m, width // m) for m in range(1, min(width, ports) + 1)
             if width % m == 0 and width // m <= ports]
    if want_multi_reducer and any(r >= 2 for _, r in pairs):
        pairs = [p for p in pairs if p[1] >= 2]
    if pairs:
        return pairs[int(rng.integers(len(pairs)))]
    m = min(ports, math.isqrt(width) or 1)
    return m, max(1, min(ports, round(width / m)))


def synthesize(spec: SynthSpec) -> str:
    """Generate a trace in the benchmark text format; deterministic per seed."""
    P = spec.port_count
    if spec.coflow_count < 1 or P < 1:
        raise ConfigError("need at least one coflow and one port")
    if not 0 <= spec.equal_flow_fraction <= 1:
        raise ConfigError("equal_flow_fraction must lie in [0, 1]")
    if spec.mean_interarrival_ms < 0:
        raise ConfigError("mean inter-arrival must be >= 0")
    for k in spec.classes:
        if k.width_min < 1 or k.width_max < k.width_min:
            raise ConfigError(f"bad width range in {k}")
        if k.width_max > P * P:
            raise ConfigError(f"width {k.width_max} impossible with {P} ports (max {P * P})")
        if k.mb_min <= 0 or k.mb_max < k.mb_min:
            raise ConfigError(f"bad size range in {k}")
    weights = np.array([k.weight for k in spec.classes], dtype=float)
    if weights.sum() <= 0:
        raise ConfigError("class weights must sum to a positive value")
    weights /= weights.sum()

    rng = np.random.default_rng(spec.seed)
    lines = [f"{P} {spec.coflow_count}"]
    t_ms = 0
    for cid in range(1, spec.coflow_count + 1):
        if cid > 1 and spec.mean_interarrival_ms > 0:
            t_ms += int(round(rng.exponential(spec.mean_interarrival_ms)))
        k = spec.classes[int(rng.choice(len(spec.classes), p=weights))]
        width = int(round(math.exp(rng.uniform(math.log(k.width_min), math.log(k.width_max + 1)))))
        width = min(max(width, k.width_min), k.width_max)
        equal = rng.random() < spec.equal_flow_fraction
        m, r = _layout(width, P, rng, want_multi_reducer=not equal)
        total_mb = math.exp(rng.uniform(math.log(k.mb_min), math.log(k.mb_max)))
        if equal or r == 1:
            shares = np.full(r, 1.0 / r)
        else:
            shares = rng.dirichlet(np.ones(r) * 0.7)
        mappers = rng.choice(P, size=m, replace=False)
        reducers = rng.choice(P, size=r, replace=False)
        floor_mb = m / MB  # at least one byte per flow
        per = [max(floor_mb, round(float(total_mb * s), 6)) for s in shares]
        if equal:
            per = [per[0]] * r
        parts = [str(cid), str(t_ms), str(m), *map(str, mappers.tolist()), str(r)]
        parts += [f"{p}:{_fmt_mb(v)}" for p, v in zip(reducers.tolist(), per)]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _fmt_mb(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return s or "0"
