import pytest
from hypothesis import given, settings, strategies as st

from coflowsim import (MB, ConfigError, EventKind, SynthSpec, TraceError, emit_trace, parse_dag,
                       parse_dynamics, parse_trace, scale_arrivals, synthesize)
from coflowsim.trace import WorkloadClass, check_trace, contended, fb_like


def test_single_flow_line():
    t = parse_trace("5 1\n1 50 1 2 1 4:10\n")
    (c,) = t.coflows
    assert c.arrival_us == 50_000
    assert [(f.src_port, f.dst_port, f.size_bytes) for f in c.flows] == [(2, 4, 10 * MB)]


def test_even_mapper_split():
    t = parse_trace("4 1\n7 0 2 0 1 2 2:4 3:4\n")
    (c,) = t.coflows
    assert c.width == 4
    assert {f.size_bytes for f in c.flows} == {2 * MB}
    assert c.total_size == 8 * MB


def test_ceiling_split_keeps_every_byte():
    t = parse_trace("4 1\n1 0 3 0 1 2 1 3:1\n")
    sizes = [f.size_bytes for f in t.coflows[0].flows]
    assert sizes == [333_334] * 3
    assert 0 <= sum(sizes) - MB < 3


def test_header_150_ports():
    lines = ["150 3", "1 0 1 149 1 0:1", "2 10 2 3 4 1 148:2", "3 20 1 7 2 8:1 9:1"]
    t = parse_trace("\n".join(lines) + "\n")
    assert t.port_count == 150
    assert all(p < 150 for c in t.coflows for p in c.ports)


def test_sorted_by_arrival_and_sequential_flow_ids():
    t = parse_trace("5 2\n1 30 1 0 1 1:1\n2 10 2 0 1 2 2:1 3:1\n")
    assert [c.coflow_id for c in t.coflows] == [2, 1]
    assert [f.flow_id for f in t.by_id()[1].flows] == [0]
    assert [f.flow_id for f in t.by_id()[2].flows] == [1, 2, 3, 4]


@pytest.mark.parametrize("text,line", [
    ("5 1\n1 0 1 9 1 4:1\n", 2),            # port out of range
    ("5 1\n1 0 0 1 4:1\n", 2),              # zero mappers
    ("5 1\n1 0 1 2 0\n", 2),                # zero reducers (truncated)
    ("5 2\n2 0 1 2 1 4:1\n1 0 1 2 1 4:1\n", 3),  # ids not increasing
    ("5 1\n1 0 1 2 1 4:-3\n", 2),           # negative size
    ("5 1\n1 0 1 2 1 4:0\n", 2),            # zero size
    ("5 1\n1 0 1 2 1 4\n", 2),              # missing size
    ("5 2\n1 0 1 2 1 4:1\n", 1),            # count mismatch
    ("5\n", 1),                             # bad header
    ("5 1\n1 x 1 2 1 4:1\n", 2),            # bad arrival
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(TraceError) as e:
        parse_trace(text)
    assert e.value.line == line
    assert f"line {line}" in str(e.value)


def test_check_trace_collects_all_errors():
    trace, errors = check_trace("5 3\n1 0 1 9 1 4:1\n2 0 1 2 1 4:1\n3 0 1 2 1 4:-1\n")
    assert trace is None
    assert [e.line for e in errors] == [2, 4]


def test_round_trip_literal():
    text = "10 2\n1 0 2 0 1 2 2:4 3:4.5\n4 12.5 1 7 1 8:0.25\n"
    t = parse_trace(text)
    assert emit_trace(t) == text
    assert parse_trace(emit_trace(t)) == t


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1))
def test_synth_round_trip(seed, eq):
    text = synthesize(SynthSpec(coflow_count=8, port_count=12, equal_flow_fraction=eq, seed=seed))
    t = parse_trace(text)
    assert parse_trace(emit_trace(t)) == t
    for c in t.coflows:
        assert c.width == len(c.mappers) * len(c.reducers)


@given(st.integers(1, 6), st.lists(st.decimals("0.000001", "500", places=6), min_size=1, max_size=6))
def test_split_bytes_bounds(m, mbs):
    reducers = " ".join(f"{i}:{mb}" for i, mb in enumerate(mbs))
    mappers = " ".join(str(i) for i in range(m))
    t = parse_trace(f"20 1\n1 0 {m} {mappers} {len(mbs)} {reducers}\n")
    exact = sum(mb for mb in mbs) * MB
    got = t.coflows[0].total_size
    assert exact <= got < exact + m * len(mbs)


def test_scale_arrivals():
    t = parse_trace("5 2\n1 0 1 0 1 1:1\n2 100 1 0 1 1:1\n")
    assert [c.arrival_us for c in scale_arrivals(t.coflows, 4)] == [0, 25_000]
    assert scale_arrivals(t.coflows, 1) == t.coflows
    assert [c.arrival_us for c in scale_arrivals(t.coflows, 0.5)] == [0, 200_000]
    for bad in (0, -2):
        with pytest.raises(ConfigError):
            scale_arrivals(t.coflows, bad)


@given(st.lists(st.integers(0, 10**9), min_size=1, max_size=20), st.floats(0.05, 20))
def test_scaling_preserves_order(arrivals, A):
    from coflowsim import CoFlow, FlowSpec

    cs = [CoFlow(i, a, (FlowSpec(i, i, 0, 1, 1),)) for i, a in enumerate(sorted(arrivals))]
    out = scale_arrivals(cs, A)
    assert [c.arrival_us for c in out] == sorted(c.arrival_us for c in out)
    assert [c.flows for c in out] == [c.flows for c in cs]


def test_dag_empty_and_chain():
    assert parse_dag("") == {}
    assert parse_dag("# nothing\n\n") == {}
    assert parse_dag("3 2\n2 1\n") == {3: (2,), 2: (1,)}


def test_dag_cycle_reports_witness():
    with pytest.raises(TraceError, match="cycle"):
        parse_dag("2 1\n1 2\n")


def test_dag_unknown_parent():
    with pytest.raises(TraceError, match="unknown coflow 9"):
        parse_dag("2 9\n", {1, 2})


def test_dynamics_parse():
    t = parse_trace("4 1\n1 0 2 0 1 1 2:2\n")
    ev = parse_dynamics("10 STRAGGLER 0 100\n5 FLOW_RESTART 1\n20 COORDINATOR_RESTART\n"
                        "30 NODE_FAILURE 1  # only flow 1 leaves port 1\n", t)
    assert [e.kind for e in ev] == [EventKind.FLOW_RESTART, EventKind.STRAGGLER,
                                    EventKind.COORDINATOR_RESTART, EventKind.FLOW_RESTART]
    assert ev[1].rate_cap == 12_500_000
    assert ev[3].flow_id == 1 and ev[3].time_us == 30_000


@pytest.mark.parametrize("text", ["5 STRAGGLER 0\n", "5 BOGUS 1\n", "5 FLOW_RESTART 99\n",
                                  "x FLOW_RESTART 0\n", "5 STRAGGLER 0 0\n", "5 STRAGGLER 0 abc\n"])
def test_dynamics_errors(text):
    t = parse_trace("4 1\n1 0 2 0 1 1 2:2\n")
    with pytest.raises(TraceError, match="line 1"):
        parse_dynamics(text, t)


def test_synth_single_flow():
    spec = SynthSpec(coflow_count=1, port_count=4,
                     classes=(WorkloadClass(1, 1, 1, 1.0, 1.0),))
    t = parse_trace(synthesize(spec))
    assert t.flow_count() == 1
    assert t.coflows[0].total_size == MB


def test_synth_deterministic():
    assert synthesize(fb_like(seed=3)) == synthesize(fb_like(seed=3))
    assert synthesize(contended(seed=3)) != synthesize(contended(seed=4))


def test_synth_all_equal():
    t = parse_trace(synthesize(contended(coflow_count=40, equal_flow_fraction=1.0)))
    for c in t.coflows:
        assert len({f.size_bytes for f in c.flows}) == 1


def test_synth_impossible_width():
    spec = SynthSpec(coflow_count=2, port_count=3, classes=(WorkloadClass(1, 1, 10, 1, 2),))
    with pytest.raises(ConfigError, match="impossible"):
        synthesize(spec)
