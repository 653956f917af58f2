"""Aggregate statistics over finished runs: speedups, bins, out-of-sync FCTs."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from fractions import Fraction

from .core import MB
from .sim import RunResult
from .trace import Trace

BINS = ("bin-1", "bin-2", "bin-3", "bin-4")
DECILES = tuple(range(10, 100, 10))


@dataclass(frozen=True)
class SpeedupRecord:
    coflow_id: int
    cct_baseline: int
    cct_test: int

    @property
    def speedup(self) -> float:
        return self.cct_baseline / self.cct_test

    @property
    def exact(self) -> Fraction:
        return Fraction(self.cct_baseline, self.cct_test)


@dataclass
class SpeedupSummary:
    records: list[SpeedupRecord]
    median: float
    p10: float
    p90: float


def percentile(values, p: float):
    """Nearest-rank percentile: the smallest value with at least p% of the data at or below it."""
    xs = sorted(values)
    if not xs:
        raise ValueError("percentile of an empty sequence")
    if not 0 < p <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {p}")
    rank = math.ceil(Fraction(str(p)) * len(xs) / 100)
    return xs[max(rank, 1) - 1]


def median(values) -> float:
    # midpoint of the two central values for even counts
    return statistics.median(values)


def speedups(baseline: RunResult, test: RunResult) -> SpeedupSummary:
    """Per-coflow CCT ratio baseline/test with median, P10 and P90."""
    if baseline.records.keys() != test.records.keys():
        only_b = sorted(baseline.records.keys() - test.records.keys())
        only_t = sorted(test.records.keys() - baseline.records.keys())
        raise ValueError(f"runs cover different coflows (baseline only: {only_b[:5]}, "
                         f"test only: {only_t[:5]})")
    recs = []
    for cid in sorted(baseline.records):
        b, t = baseline.records[cid].cct_us, test.records[cid].cct_us
        if b <= 0 or t <= 0:
            raise ValueError(f"coflow {cid} has a non-positive CCT")
        recs.append(SpeedupRecord(cid, b, t))
    if not recs:
        return SpeedupSummary([], math.nan, math.nan, math.nan)
    vals = [r.speedup for r in recs]
    return SpeedupSummary(recs, float(median(vals)), percentile(vals, 10), percentile(vals, 90))


def bin_of(width: int, total_size: int) -> str:
    wide = width > 10
    big = total_size > 100 * MB
    return BINS[int(wide) + 2 * int(big)]


def bin_counts(records) -> dict[str, int]:
    out = dict.fromkeys(BINS, 0)
    for r in records:
        out[bin_of(r.width, r.total_size)] += 1
    return out


def normalized_deviation(xs) -> float:
    """Population standard deviation over mean; 0 for an all-zero list."""
    xs = [Fraction(x) for x in xs]
    mean = sum(xs) / len(xs)
    if mean == 0:
        return 0.0
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    return math.sqrt(var) / float(mean)


@dataclass(frozen=True)
class OutOfSync:
    coflow_id: int
    deviation: float
    equal_length: bool


def out_of_sync(run: RunResult) -> list[OutOfSync]:
    """Normalized FCT spread per multi-flow coflow, tagged equal/unequal flow sizes."""
    out = []
    for r in run.records.values():
        if r.width < 2:
            continue
        equal = len(set(r.flow_sizes)) == 1
        out.append(OutOfSync(r.coflow_id, normalized_deviation(r.fct_us), equal))
    return out


def cdf_points(values, points=DECILES) -> list[float]:
    if not values:
        return []
    return [percentile(values, p) for p in points]


@dataclass
class FlowLengthStats:
    coflows: int
    single: int
    equal_multi: int
    unequal_multi: int
    widths: dict[int, int]
    deviations: dict[int, float]

    def fractions(self) -> dict[str, float]:
        n = max(self.coflows, 1)
        return {"single": self.single / n, "equal": self.equal_multi / n,
                "unequal": self.unequal_multi / n}


def flow_length_stats(trace: Trace) -> FlowLengthStats:
    widths: dict[int, int] = {}
    devs = {}
    single = eq = uneq = 0
    for c in trace.coflows:
        widths[c.width] = widths.get(c.width, 0) + 1
        sizes = [f.size_bytes for f in c.flows]
        devs[c.coflow_id] = normalized_deviation(sizes)
        if c.width == 1:
            single += 1
        elif len(set(sizes)) == 1:
            eq += 1
        else:
            uneq += 1
    return FlowLengthStats(len(trace.coflows), single, eq, uneq, dict(sorted(widths.items())), devs)


def jct_speedup(s: float, f: float) -> float:
    """Job-level gain when a fraction f of job time is shuffle sped up by s."""
    if s <= 0:
        raise ValueError("speedup must be positive")
    if not 0 <= f <= 1:
        raise ValueError("shuffle fraction must lie in [0, 1]")
    return 1 / ((1 - f) + f / s)


# ------------------------------------------------------------------ reports

def run_table(run: RunResult) -> str:
    rows = ["coflow_id\tarrival_us\trelease_us\twidth\ttotal_bytes\tbin\tcct_us\ttransitions\texpiries"]
    for r in run.records.values():
        rows.append(f"{r.coflow_id}\t{r.arrival_us}\t{r.release_us}\t{r.width}\t{r.total_size}\t"
                    f"{bin_of(r.width, r.total_size)}\t{r.cct_us}\t{r.transitions}\t{r.expiries}")
    return "\n".join(rows) + "\n"


def speedup_table(baseline: RunResult, test: RunResult) -> str:
    summ = speedups(baseline, test)
    rows = ["coflow_id\tbin\tcct_baseline_us\tcct_test_us\tspeedup"]
    for s in summ.records:
        r = test.records[s.coflow_id]
        rows.append(f"{s.coflow_id}\t{bin_of(r.width, r.total_size)}\t{s.cct_baseline}\t"
                    f"{s.cct_test}\t{s.speedup:.6f}")
    rows.append(f"# median\t\t\t\t{summ.median:.6f}")
    rows.append(f"# p10\t\t\t\t{summ.p10:.6f}")
    rows.append(f"# p90\t\t\t\t{summ.p90:.6f}")
    for b, m in per_bin_medians(baseline, test).items():
        rows.append(f"# {b}\t\t\t\t{'' if m is None else f'{m:.6f}'}")
    return "\n".join(rows) + "\n"


def per_bin_medians(baseline: RunResult, test: RunResult) -> dict[str, float | None]:
    groups: dict[str, list[float]] = {b: [] for b in BINS}
    for s in speedups(baseline, test).records:
        r = test.records[s.coflow_id]
        groups[bin_of(r.width, r.total_size)].append(s.speedup)
    return {b: (float(median(v)) if v else None) for b, v in groups.items()}


def summary(baseline: RunResult, test: RunResult) -> dict:
    """Machine-readable comparison of ``test`` against ``baseline``."""
    s = speedups(baseline, test)
    oos = {}
    for name, run in (("test", test), ("baseline", baseline)):
        rows = out_of_sync(run)
        oos[name] = {
            "equal": cdf_points([r.deviation for r in rows if r.equal_length]),
            "unequal": cdf_points([r.deviation for r in rows if not r.equal_length]),
        }
    return {
        "policy": test.policy,
        "baseline": baseline.policy,
        "coflows": len(s.records),
        "median": s.median,
        "p10": s.p10,
        "p90": s.p90,
        "bins": per_bin_medians(baseline, test),
        "bin_counts": bin_counts(test.records.values()),
        "out_of_sync_deciles": oos,
        "seed": test.seed,
    }


def run_summary(run: RunResult) -> dict:
    ccts = [r.cct_us for r in run.records.values()]
    rows = out_of_sync(run)
    return {
        "policy": run.policy,
        "coflows": len(ccts),
        "mean_cct_us": (sum(ccts) / len(ccts)) if ccts else None,
        "median_cct_us": float(median(ccts)) if ccts else None,
        "p10_cct_us": percentile(ccts, 10) if ccts else None,
        "p90_cct_us": percentile(ccts, 90) if ccts else None,
        "bin_counts": bin_counts(run.records.values()),
        "out_of_sync_deciles": {
            "equal": cdf_points([r.deviation for r in rows if r.equal_length]),
            "unequal": cdf_points([r.deviation for r in rows if not r.equal_length]),
        },
        "rejected_events": len(run.rejected),
        "seed": run.seed,
    }
