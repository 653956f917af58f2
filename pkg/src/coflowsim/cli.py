"""Command-line front end: run, compare, sweep, validate, synth."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import metrics
from .core import (GBPS, MB, US_PER_MS, Availability, ConfigError, DynamicsError, QueueConfig,
                   SimConfig, SimulationError, TraceError)
from .policies import POLICY_NAMES, make_policy
from .sim import run
from .trace import (SynthSpec, check_trace, contended, fb_like, parse_dag, parse_dynamics,
                    parse_trace, synthesize)

SWEEP_PARAMS = ("delta", "A", "d", "S", "E", "K")


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {what} {path}: {e.strerror}") from None


def _with_file(path, fn):
    try:
        return fn()
    except TraceError as e:
        raise TraceError(f"{path}: {e}") from None


def config_from(args, **override) -> SimConfig:
    s_mb = override.pop("S", args.S)
    queue = QueueConfig(K=override.pop("K", args.K), S=int(round(s_mb * MB)),
                        E=override.pop("E", args.E))
    delta_ms = override.pop("delta", args.delta_ms)
    kw = dict(
        delta_us=int(round(delta_ms * US_PER_MS)),
        queue=queue,
        deadline_factor=override.pop("d", args.deadline_factor),
        arrival_scale=override.pop("A", args.arrival_scale),
        port_rate=int(round(args.port_rate_gbps * GBPS)),
        seed=args.seed,
        availability=Availability(args.availability),
        contention_scope=args.contention_scope,
        requeue=not args.no_requeue,
        max_intervals=args.max_intervals,
    )
    if kw["delta_us"] <= 0:
        raise ConfigError("--delta-ms must be positive")
    return SimConfig(**kw)


def load_inputs(args):
    trace = _with_file(args.trace, lambda: parse_trace(_read(args.trace, "trace")))
    dag = None
    if getattr(args, "dag", None):
        ids = {c.coflow_id for c in trace.coflows}
        dag = _with_file(args.dag, lambda: parse_dag(_read(args.dag, "DAG"), ids))
    dyn = ()
    if getattr(args, "dynamics", None):
        dyn = _with_file(args.dynamics, lambda: parse_dynamics(_read(args.dynamics, "dynamics"), trace))
    return trace, dag, dyn


def _policies(text: str) -> list[str]:
    names = [p.strip() for p in text.split(",") if p.strip()]
    for p in names:
        if p not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {p!r}; choose from {', '.join(POLICY_NAMES)}")
    return names


def _job(task):
    key, name, trace, config, dag, dyn = task
    return key, run(trace, config, dag, dyn, policy=make_policy(name, config))


def _run_all(tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return dict(pool.map(_job, tasks))
    return dict(map(_job, tasks))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    trace, dag, dyn = load_inputs(args)
    config = config_from(args)
    name = _policies(args.policy)
    if len(name) != 1:
        raise ConfigError("run takes a single --policy; use compare for several")
    name = name[0]
    out = Path(args.out)
    audit = None
    if args.audit_log:
        parent = Path(args.audit_log).parent
        parent.mkdir(parents=True, exist_ok=True)
        audit = tempfile.NamedTemporaryFile("w", delete=False, dir=parent,
                                            prefix=".audit.", suffix=".tmp")
        audit.write("interval\tspan\tflow_id\tcoflow_id\tbytes_per_interval\trate_bps\torigin\n")
    try:
        res = run(trace, config, dag, dyn, policy=make_policy(name, config), audit=audit)
    except BaseException:
        if audit:
            audit.close()
            os.unlink(audit.name)
        raise
    if audit:
        audit.close()
        os.replace(audit.name, args.audit_log)
    write_atomic(out / f"{name}.tsv", metrics.run_table(res))
    summ = metrics.run_summary(res)
    write_atomic(out / f"{name}.summary.json", _dump(summ))
    print(f"{name}: {summ['coflows']} coflows, mean CCT {summ['mean_cct_us'] / 1000:.1f} ms, "
          f"median {summ['median_cct_us'] / 1000:.1f} ms"
          + (f", {len(res.rejected)} dynamics events rejected" if res.rejected else ""))
    return 0


def cmd_compare(args) -> int:
    trace, dag, dyn = load_inputs(args)
    config = config_from(args)
    names = _policies(args.policies)
    if len(names) < 2:
        raise ConfigError("compare needs at least two policies")
    tasks = [(n, n, trace, config, dag, dyn) for n in names]
    results = _run_all(tasks, args.jobs)
    out = Path(args.out)
    test = names[0]
    summaries = []
    for n in names:
        write_atomic(out / f"{n}.tsv", metrics.run_table(results[n]))
    for base in names[1:]:
        write_atomic(out / f"speedup-{test}-over-{base}.tsv",
                     metrics.speedup_table(results[base], results[test]))
        s = metrics.summary(results[base], results[test])
        summaries.append(s)
        bins = ", ".join(f"{b} {'-' if v is None else f'{v:.2f}'}" for b, v in s["bins"].items())
        print(f"{test} over {base}: median {s['median']:.3f}  p10 {s['p10']:.3f}  "
              f"p90 {s['p90']:.3f}  [{bins}]")
    write_atomic(out / "summary.json", _dump(summaries))
    return 0


def cmd_sweep(args) -> int:
    trace, dag, dyn = load_inputs(args)
    names = _policies(args.policies)
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    try:
        values = [int(v) if args.param == "K" else float(v) for v in args.values.split(",") if v]
    except ValueError:
        raise ConfigError(f"bad --values {args.values!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    tasks = []
    for v in values:
        cfg = config_from(args, **{args.param: v})
        for n in names:
            tasks.append(((v, n), n, trace, cfg, dag, dyn))
    results = _run_all(tasks, args.jobs)
    rows = ["param\tvalue\tpolicy\tmean_cct_us\tmedian_cct_us\tspeedup_baseline\t"
            "speedup_median\tspeedup_p10\tspeedup_p90"]
    doc = []
    for v in values:
        test = results[(v, names[0])]
        for n in names:
            r = results[(v, n)]
            rs = metrics.run_summary(r)
            row = {"param": args.param, "value": v, "policy": n,
                   "mean_cct_us": rs["mean_cct_us"], "median_cct_us": rs["median_cct_us"]}
            sp = ["", "", "", ""]
            if n != names[0]:
                s = metrics.speedups(r, test)
                row.update(speedup_of=names[0], median=s.median, p10=s.p10, p90=s.p90)
                sp = [n, f"{s.median:.6f}", f"{s.p10:.6f}", f"{s.p90:.6f}"]
            doc.append(row)
            rows.append("\t".join([args.param, f"{v:g}", n, f"{rs['mean_cct_us']:.1f}",
                                   f"{rs['median_cct_us']:.1f}", *sp]))
            print(rows[-1])
    out = Path(args.out)
    write_atomic(out / f"sweep-{args.param}.tsv", "\n".join(rows) + "\n")
    write_atomic(out / f"sweep-{args.param}.json", _dump({"seed": args.seed, "rows": doc}))
    return 0


def cmd_validate(args) -> int:
    trace, errors = check_trace(_read(args.trace, "trace"))
    for e in errors:
        print(f"{args.trace}: {e}", file=sys.stderr)
    if trace is None:
        print(f"{args.trace}: {len(errors)} error(s)", file=sys.stderr)
        return 1
    bad = 0
    if args.dag:
        try:
            parse_dag(_read(args.dag, "DAG"), {c.coflow_id for c in trace.coflows})
        except TraceError as e:
            print(f"{args.dag}: {e}", file=sys.stderr)
            bad += 1
    if args.dynamics:
        try:
            parse_dynamics(_read(args.dynamics, "dynamics"), trace)
        except TraceError as e:
            print(f"{args.dynamics}: {e}", file=sys.stderr)
            bad += 1
    st = metrics.flow_length_stats(trace)
    fr = st.fractions()
    total = sum(c.total_size for c in trace.coflows)
    print(f"{len(trace.coflows)} coflows, {trace.port_count} ports")
    print(f"flows: {trace.flow_count()}  bytes: {total}")
    print(f"single-flow: {st.single} ({fr['single']:.1%})  equal multi-flow: {st.equal_multi} "
          f"({fr['equal']:.1%})  unequal multi-flow: {st.unequal_multi} ({fr['unequal']:.1%})")
    counts = metrics.bin_counts(trace.coflows)
    print("bins: " + "  ".join(f"{b} {n}" for b, n in counts.items()))
    widths = [c.width for c in trace.coflows]
    print(f"width p10/p50/p90/max: {metrics.percentile(widths, 10)}/{metrics.percentile(widths, 50)}/"
          f"{metrics.percentile(widths, 90)}/{max(widths)}")
    return 1 if bad else 0


def cmd_synth(args) -> int:
    if args.preset == "fb":
        spec = fb_like(seed=args.seed)
    elif args.preset == "contended":
        spec = contended(seed=args.seed)
    else:
        spec = SynthSpec(seed=args.seed)
    over = {}
    if args.coflows is not None:
        over["coflow_count"] = args.coflows
    if args.ports is not None:
        over["port_count"] = args.ports
    if args.interarrival_ms is not None:
        over["mean_interarrival_ms"] = args.interarrival_ms
    if args.equal_fraction is not None:
        over["equal_flow_fraction"] = args.equal_fraction
    if over:
        from dataclasses import replace
        spec = replace(spec, **over)
    text = synthesize(spec)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)
        print(f"wrote {spec.coflow_count} coflows on {spec.port_count} ports to {args.out}")
    return 0


# ------------------------------------------------------------------ parser

def _sim_flags(p):
    g = p.add_argument_group("simulation parameters")
    g.add_argument("--K", type=int, default=10, help="number of priority queues (default 10)")
    g.add_argument("--E", type=float, default=10.0, help="queue threshold growth factor (default 10)")
    g.add_argument("--S", type=float, default=10.0, help="first queue threshold in MB (default 10)")
    g.add_argument("--delta-ms", type=float, default=8.0, help="scheduling interval (default 8 ms)")
    g.add_argument("--deadline-factor", type=float, default=2.0, help="deadline factor d (default 2)")
    g.add_argument("--arrival-scale", type=float, default=1.0,
                   help="A: arrivals happen A times faster (default 1)")
    g.add_argument("--port-rate-gbps", type=float, default=1.0, help="per-port rate (default 1)")
    g.add_argument("--availability", choices=[a.value for a in Availability], default="arrival",
                   help="when flow data becomes sendable (default arrival)")
    g.add_argument("--contention-scope", choices=["global", "queue"], default="global",
                   help="count contention across all coflows or within a queue (default global)")
    g.add_argument("--no-requeue", action="store_true",
                   help="disable re-queueing of coflows hit by restarts or stragglers")
    g.add_argument("--seed", type=int, default=0, help="seed echoed into summaries (default 0)")
    g.add_argument("--max-intervals", type=int, default=20_000_000,
                   help="abort a run after this many intervals (default 20M)")


def _inputs(p, dag=True):
    p.add_argument("--trace", required=True, help="trace file in coflow-benchmark format")
    if dag:
        p.add_argument("--dag", help="DAG sidecar: '<child> <parent>' per line")
        p.add_argument("--dynamics", help="dynamics events: 'time_ms KIND args' per line")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coflowsim", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="simulate one policy")
    _inputs(p)
    p.add_argument("--policy", default="saath", help="policy name (default saath)")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.add_argument("--audit-log", help="write the per-interval schedule to this TSV file")
    _sim_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="replay one trace under several policies")
    _inputs(p)
    p.add_argument("--policies", default="saath,aalo",
                   help="comma list; speedups are of the first over each other (default saath,aalo)")
    p.add_argument("--out", default=".")
    p.add_argument("--jobs", type=int, default=1, help="parallel policy runs (default 1)")
    _sim_flags(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="vary one parameter, one summary row per value and policy")
    _inputs(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma list of values (delta in ms, S in MB)")
    p.add_argument("--policies", default="saath,aalo")
    p.add_argument("--out", default=".")
    p.add_argument("--jobs", type=int, default=1)
    _sim_flags(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("validate", help="check a trace (and optional DAG/dynamics files)")
    _inputs(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic trace")
    p.add_argument("--preset", choices=["fb", "contended", "basic"], default="contended")
    p.add_argument("--coflows", type=int)
    p.add_argument("--ports", type=int)
    p.add_argument("--interarrival-ms", type=float)
    p.add_argument("--equal-fraction", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.set_defaults(fn=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (TraceError, ConfigError, DynamicsError, SimulationError) as e:
        print(f"coflowsim {args.cmd}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
