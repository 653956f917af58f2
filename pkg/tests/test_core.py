import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coflowsim import MB, ConfigError, QueueConfig, SimConfig, derive_thresholds
from coflowsim.core import Allocation, FlowSpec, Origin, PortCapacity, Schedule, TraceError


def test_default_thresholds():
    ranges = derive_thresholds(QueueConfig())
    his = [hi for _, hi in ranges]
    assert his[:3] == [10 * MB, 100 * MB, 1000 * MB]
    assert len(ranges) == 10
    assert his[-1] == math.inf


def test_single_queue():
    assert derive_thresholds(QueueConfig(K=1, S=10 * MB, E=10)) == [(0, math.inf)]


def test_small_thresholds():
    assert derive_thresholds(QueueConfig(K=3, S=1, E=2)) == [(0, 1), (1, 2), (2, math.inf)]


@pytest.mark.parametrize("kw", [dict(K=0), dict(S=0), dict(E=1), dict(E=0.5), dict(K=2.5)])
def test_bad_queue_config(kw):
    with pytest.raises(ConfigError):
        QueueConfig(**kw)


def test_thresholds_must_increase():
    # S=1 byte, E=1.1: floor(1.1) == 1 would repeat a threshold
    with pytest.raises(ConfigError):
        QueueConfig(K=3, S=1, E=1.1).highs


@given(st.integers(1, 12), st.integers(1, 50 * MB), st.sampled_from([2, 3, 4.5, 10]),
       st.integers(0, 10**15))
def test_ranges_partition(K, S, E, x):
    try:
        ranges = derive_thresholds(QueueConfig(K=K, S=S, E=E))
    except ConfigError:
        return
    assert ranges[0][0] == 0
    for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
        assert hi == lo
    assert sum(lo <= x < hi for lo, hi in ranges) == 1


@pytest.mark.parametrize("kw", [dict(delta_us=0), dict(deadline_factor=0.5), dict(arrival_scale=0),
                                dict(arrival_scale=-1), dict(contention_scope="port"),
                                dict(port_rate=0)])
def test_bad_sim_config(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_one_interval_is_one_megabyte():
    assert SimConfig().line_bytes == MB
    assert SimConfig(delta_us=1000).line_bytes == 125_000


def test_zero_byte_flow_rejected():
    with pytest.raises(TraceError):
        FlowSpec(0, 1, 0, 1, 0)


def test_port_capacity_positive():
    with pytest.raises(ConfigError):
        PortCapacity(egress_rate=0)


def test_schedule_rate_in_bytes_per_second():
    a = Allocation(np.array([7, 8]), np.array([MB, 0]), np.array([Origin.ALL_OR_NONE, 0]))
    s = Schedule(3, 8000, {1: a})
    assert s.entries() == {7: MB}
    assert s.rate(7) == Fraction(125_000_000)
    assert s.rate(8) == 0
    assert s.origins() == {7: Origin.ALL_OR_NONE}
    assert len(s) == 1
