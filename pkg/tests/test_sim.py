import io
from fractions import Fraction

import pytest

from coflowsim import (GBPS, MB, CoFlow, ConfigError, DynamicsError, FlowSpec,
                       SimConfig, SimulationError, inject, run, run_comparison)
from coflowsim import scenarios as sc
from coflowsim.policies import SaathPolicy
from coflowsim.trace import DynamicsEvent, EventKind, parse_trace


def one_flow(size=MB, arrival=0, cid=1, fid=0, src=0, dst=1):
    return CoFlow(cid, arrival, (FlowSpec(fid, cid, src, dst, size),))


def test_lone_megabyte_flow():
    # visible at interval 1, one interval of transfer: done at 16 ms
    r = run([one_flow()], SimConfig(port_count=2))
    assert r.records[1].cct_us == 16_000
    assert r.records[1].fct_us == (16_000,)


def test_partial_interval_finish():
    r = run([one_flow(size=MB // 4)], SimConfig(port_count=2))
    assert r.records[1].cct_us == 8_000 + 2_000


def test_empty_trace():
    r = run([], SimConfig(port_count=2))
    assert r.records == {} and r.intervals == 0


def test_bad_port():
    with pytest.raises(ConfigError):
        run([one_flow(dst=5)], SimConfig(port_count=2))


@pytest.mark.parametrize("policy", ["saath", "aalo", "uc-tcp", "scf", "lwtf", "saath-an-pf"])
def test_deterministic_and_skip_equals_step(policy):
    trace = parse_trace("6 4\n1 0 2 0 1 2 2:3 3:1.5\n2 5 1 1 1 3:4\n3 9 1 4 2 2:0.7 5:2\n"
                        "4 40 1 0 1 5:6\n")
    a = run(trace, SimConfig(policy=policy))
    assert a == run(trace, SimConfig(policy=policy))
    step = run(trace, SimConfig(policy=policy), skip_ahead=False)
    assert step.records == a.records
    assert a.schedules <= step.schedules


def test_dag_child_waits_for_parents():
    cs = [one_flow(cid=1, fid=0), one_flow(2 * MB, cid=2, fid=1, src=2, dst=3),
          one_flow(cid=3, fid=2, src=4, dst=5)]
    r = run(cs, SimConfig(port_count=6), dag={3: (1, 2)})
    done = max(r.records[1].completion_us, r.records[2].completion_us)
    assert r.records[3].release_us == done
    assert r.records[3].arrival_us == 0
    assert r.records[3].completion_us > done
    assert r.records[3].cct_us == r.records[3].completion_us - done


def test_dag_unknown_id():
    with pytest.raises(ConfigError):
        run([one_flow()], SimConfig(port_count=2), dag={1: (7,)})


def test_straggler_slows_flow_to_cap():
    ev = [DynamicsEvent(0, EventKind.STRAGGLER, 0, GBPS // 10)]
    r = run([one_flow(10 * MB)], SimConfig(port_count=2), dynamics=ev)
    # at R/10 the flow needs at least 10x its line-rate time
    assert r.records[1].cct_us >= 10 * 80_000


def test_restart_of_finished_flow_is_rejected():
    ev = [DynamicsEvent(500_000, EventKind.FLOW_RESTART, 0)]
    r = run([one_flow()], SimConfig(port_count=2), dynamics=ev)
    assert r.records[1].cct_us == 16_000
    assert len(r.rejected) == 1 and "complete" in r.rejected[0][1]


def test_restart_costs_time():
    cs = [one_flow(10 * MB)]
    base = run(cs, SimConfig(port_count=2)).records[1].cct_us
    ev = [DynamicsEvent(40_000, EventKind.FLOW_RESTART, 0)]
    r = run(cs, SimConfig(port_count=2), dynamics=ev)
    assert r.records[1].cct_us > base
    assert r.delivered_bytes() == 10 * MB


def test_unknown_dynamics_flow():
    with pytest.raises(DynamicsError):
        run([one_flow()], SimConfig(port_count=2),
            dynamics=[DynamicsEvent(0, EventKind.FLOW_RESTART, 42)])


def test_inject_errors():
    from coflowsim.state import ClusterState, CoflowState

    c = CoflowState(one_flow(), 0, 1)
    state = ClusterState(1, 8000, SimConfig(), 2, [c])
    with pytest.raises(DynamicsError, match="not active"):
        inject(DynamicsEvent(0, EventKind.STRAGGLER, 5, GBPS), state)
    c.sent[0] = MB
    with pytest.raises(DynamicsError, match="already complete"):
        inject(DynamicsEvent(0, EventKind.FLOW_RESTART, 0), state)


def test_coordinator_restart_keeps_results_valid():
    trace = sc.contention_vs_size()
    ev = [DynamicsEvent(300_000, EventKind.COORDINATOR_RESTART)]
    r = run(trace, SimConfig(), dynamics=ev)
    assert len(r.records) == 3 and not r.rejected


def test_max_intervals():
    with pytest.raises(SimulationError):
        run([one_flow(100 * MB)], SimConfig(port_count=2, max_intervals=10))


def test_audit_log_and_deregistration():
    buf = io.StringIO()
    run([one_flow(3 * MB), one_flow(MB, cid=2, fid=1, src=0, dst=1)], SimConfig(port_count=2),
        audit=buf)
    lines = [l.split("\t") for l in buf.getvalue().splitlines()]
    assert lines and all(len(l) == 7 for l in lines)
    # once coflow 1 finished nothing of it is scheduled again
    done = max(int(l[0]) + int(l[1]) for l in lines if l[3] == "1")
    assert not [l for l in lines if l[3] == "1" and int(l[0]) >= done]


def test_pipelined_never_sends_ahead_of_producer():
    cfg = SimConfig(port_count=2, availability="pipelined", producer_rate=GBPS // 2)
    r = run([one_flow(4 * MB)], cfg)
    plain = run([one_flow(4 * MB)], SimConfig(port_count=2))
    assert r.records[1].cct_us >= 2 * (plain.records[1].cct_us - 8000)


def test_comparison_single_coflow():
    out = run_comparison([one_flow()], ["saath", "aalo"], SimConfig(port_count=2))
    assert out["saath"].ccts() == out["aalo"].ccts()
    with pytest.raises(ConfigError):
        run_comparison([one_flow()], ["saath"], SimConfig(port_count=2))


def test_skip_ahead_saves_schedules():
    trace = sc.contention_vs_size()
    assert run(trace).schedules < run(trace, skip_ahead=False).schedules / 10


def test_arrival_scale_compresses():
    cs = [one_flow(), one_flow(cid=2, fid=1, arrival=80_000)]
    r = run(cs, SimConfig(port_count=2, arrival_scale=4))
    assert r.records[2].arrival_us == 20_000


# ----------------------------------------------------------- hand-built cases

def test_head_of_line_example():
    cfg = sc.lcof_config()
    assert round(float(sc.simulate(sc.head_of_line(), "aalo", cfg)), 2) == 1.75
    assert round(float(sc.simulate(sc.head_of_line(), "saath", cfg)), 2) == 1.25
    assert sc.best_order(sc.head_of_line(), cfg)[0] == Fraction(5, 4)


def test_idle_ports_work_conservation():
    cfg = sc.lcof_config()
    for lcof in (True, False):
        aon = sc.simulate(sc.idle_ports(), SaathPolicy(lcof=lcof, work_conservation=False), cfg)
        wc = sc.simulate(sc.idle_ports(), SaathPolicy(lcof=lcof, work_conservation=True), cfg)
        assert abs(aon - 2) < Fraction(1, 50)
        assert abs(wc - Fraction(5, 3)) < Fraction(1, 50)


def test_contention_vs_size_example():
    cfg = sc.lcof_config()
    assert abs(sc.simulate(sc.contention_vs_size(), "scf", cfg) - Fraction(28, 3)) < Fraction(1, 50)
    assert abs(sc.simulate(sc.contention_vs_size(), "lwtf", cfg) - Fraction(25, 3)) < Fraction(1, 50)


def test_requeue_never_hurts_victim():
    for kw in (dict(restart_ms=100), dict(restart_ms=100, third=True),
               dict(restart_ms=200, competitor=5, competitor_ms=0)):
        trace, ev = sc.restart_victim(**kw)
        on = run(trace, SimConfig(requeue=True, port_count=50), dynamics=ev).records[1].cct_us
        off = run(trace, SimConfig(requeue=False, port_count=50), dynamics=ev).records[1].cct_us
        assert on <= off


def test_requeue_moves_coflow_up():
    trace, ev = sc.restart_victim(100, competitor=5, competitor_ms=0, stragglers=True)
    seen = []

    def watch(state, sched, span):
        for c in state.active:
            if c.coflow_id == 1:
                seen.append(c.queue)

    run(trace, SimConfig(port_count=50), dynamics=ev, observer=watch)
    peak = seen.index(max(seen))
    assert min(seen[peak:]) < max(seen)
