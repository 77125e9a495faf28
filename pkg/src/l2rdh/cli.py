"""Command-line entry point: ``l2rdh {gen,profile,predict,simulate,compare,sweep}``.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
unreadable or inconsistent data.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys

from .config import CacheConfig, ConfigError
from .histogram import DEFAULT_CUTOFF
from .metrics import MetricError, compare, write_histogram_csv
from .model import ModelConsistencyError, PredictionResult, predict
from .profiler import (ProfileIntegrityError, SchemaVersionError, load_profile, profile,
                       save_profile)
from .simulator import SimResult, simulate
from .sweep import SweepPlan, run_sweep
from .trace import Pattern, SyntheticSpec, TraceFormatError, gen_synthetic, read_trace, write_trace

EXIT_USAGE = 1
EXIT_DATA = 2

FORMATS = ["binary_u64_le", "hex_text", "bin", "hex"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def size_arg(text: str) -> int:
    m = re.fullmatch(r"\s*(\d+)\s*([kKmMgG]?)[bB]?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}")
    scale = {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30}[m.group(2).lower()]
    return int(m.group(1)) * scale


def _dump(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=1) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _load_json(path):
    with open(path) as f:
        return json.load(f)


def cmd_gen(a):
    spec = SyntheticSpec(Pattern(a.pattern), length=a.length, seed=a.seed, line_size=a.line,
                         base=a.base, stride=a.stride, working_set=a.working_set, nodes=a.nodes)
    n = write_trace(a.out, gen_synthetic(spec), a.format)
    print(f"{n} records written to {a.out}")


def cmd_profile(a):
    trace = read_trace(a.trace, a.format)
    l1 = CacheConfig(a.l1_size, a.line, a.l1_assoc, "lru")
    if a.warmup and a.warmup >= trace.size:
        raise UsageError(f"--warmup {a.warmup} is not smaller than the trace ({trace.size} references)")
    prof = profile(trace, l1, a.cutoff, a.warmup)
    save_profile(prof, a.out)
    print(f"profiled {prof.total_refs} references ({prof.cold} cold) for L1 {l1}, "
          f"{l1.sets} sets -> {a.out}")


def cmd_predict(a):
    prof = load_profile(a.profile)
    l2 = CacheConfig(a.l2_size, prof.l1_config.line_size if a.line is None else a.line,
                     a.l2_assoc, a.policy)
    res = predict(prof, l2, strict=a.strict)
    _dump(res.to_json(), a.out)
    if a.out not in (None, "-"):
        mr = res.miss_rate
        rate = "n/a" if mr is None else f"{mr.miss_rate:.6f} ({mr.method})"
        print(f"L2 {l2}: p_same={res.p_same:g}, predicted L2 accesses "
              f"{res.predicted_l2_accesses:.1f}, miss rate {rate}")


def cmd_simulate(a):
    trace = read_trace(a.trace, a.format)
    if a.warmup and a.warmup >= trace.size:
        raise UsageError(f"--warmup {a.warmup} is not smaller than the trace ({trace.size} references)")
    l1 = CacheConfig(a.l1_size, a.line, a.l1_assoc, "lru")
    l2 = CacheConfig(a.l2_size, a.line, a.l2_assoc, a.policy)
    res = simulate(trace, l1, l2, a.seed, a.cutoff, a.warmup)
    _dump(res.to_json(), a.out)
    if a.out not in (None, "-"):
        print(f"L1 {res.l1_misses}/{res.l1_accesses} misses, "
              f"L2 {res.l2_misses}/{res.l2_accesses} misses (seed {res.seed})")


def _load_truth(path):
    d = _load_json(path)
    kind = d.get("kind")
    if kind == "prediction":
        return PredictionResult.from_json(d)
    if kind == "sim_result":
        return SimResult.from_json(d)
    raise MetricError(f"{path}: expected a simulation or prediction document, got {kind!r}")


def cmd_compare(a):
    pred = PredictionResult.from_json(_load_json(a.pred))
    truth = _load_truth(a.sim)
    rep = compare(pred, truth)
    _dump(rep.to_json(), a.out)
    if a.csv:
        gt = truth.real_l2_rdh if isinstance(truth, PredictionResult) else truth.measured_l2_rdh
        write_histogram_csv(a.csv, pred.real_l2_rdh, gt)
    if a.out not in (None, "-"):
        print(f"HE={rep.he} model={rep.model_miss_rate} oracle={rep.oracle_miss_rate}")


def cmd_sweep(a):
    plan = SweepPlan.load(a.plan)
    if a.no_oracle:
        plan.with_oracle = False
    rep = run_sweep(plan, jobs=a.jobs, out_dir=a.out_dir)
    for phase, name, secs in rep.phases:
        print(f"{phase:<11s} {name:<12s} {secs:.4f}s")
    for name, o in rep.outcomes.items():
        mr = o.prediction.miss_rate
        line = f"{name:<12s} {str(o.prediction.l2_config):<24s} model={mr.miss_rate:.4f}" if mr else name
        c = o.comparison
        if c is not None and c.he is not None:
            line += f" oracle={c.oracle_miss_rate:.4f} HE={c.he:.4g}"
        print(line)
    if rep.error_total is not None:
        print(f"error_total {rep.error_total:.4f}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="l2rdh", description="L1 locality profiling and L2 reuse distance prediction")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic trace")
    g.add_argument("--pattern", required=True, choices=[x.value for x in Pattern])
    g.add_argument("--length", required=True, type=int)
    g.add_argument("--working-set", type=size_arg)
    g.add_argument("--stride", type=size_arg)
    g.add_argument("--nodes", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--line", type=int, default=64)
    g.add_argument("--base", type=lambda s: int(s, 0), default=0)
    g.add_argument("--format", choices=FORMATS, default="binary_u64_le")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    def trace_args(q):
        q.add_argument("--trace", required=True)
        q.add_argument("--format", choices=FORMATS, default="binary_u64_le")
        q.add_argument("--l1-size", type=size_arg, required=True)
        q.add_argument("--l1-assoc", type=int, required=True)
        q.add_argument("--line", type=int, default=64)
        q.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF)
        q.add_argument("--warmup", type=int, default=0)

    pr = sub.add_parser("profile", help="profile a trace against an LRU L1")
    trace_args(pr)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_profile)

    pd = sub.add_parser("predict", help="predict the L2 RDH and miss rate from a profile")
    pd.add_argument("--profile", required=True)
    pd.add_argument("--l2-size", type=size_arg, required=True)
    pd.add_argument("--l2-assoc", type=int, required=True)
    pd.add_argument("--policy", choices=["lru", "random"], required=True)
    pd.add_argument("--line", type=int, help="L2 line size (default: the profile's)")
    pd.add_argument("--strict", action="store_true",
                    help="start the hit-shift sum at rd = i + 1, dropping hit-free epochs")
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_predict)

    sm = sub.add_parser("simulate", help="run the reference two-level simulator")
    trace_args(sm)
    sm.add_argument("--l2-size", type=size_arg, required=True)
    sm.add_argument("--l2-assoc", type=int, required=True)
    sm.add_argument("--policy", choices=["lru", "random"], required=True)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_simulate)

    cp = sub.add_parser("compare", help="compare a prediction with a simulation")
    cp.add_argument("--pred", required=True)
    cp.add_argument("--sim", required=True, help="simulation (or prediction) JSON")
    cp.add_argument("--out")
    cp.add_argument("--csv", help="write bin,model,truth rows here")
    cp.set_defaults(func=cmd_compare)

    sw = sub.add_parser("sweep", help="profile once and predict every L2 config of a plan")
    sw.add_argument("--plan", required=True)
    sw.add_argument("--out-dir")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--no-oracle", action="store_true")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits on --help and on bad usage
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"l2rdh {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TraceFormatError, ProfileIntegrityError, SchemaVersionError,
            ModelConsistencyError, MetricError, KeyError, ValueError) as e:
        print(f"l2rdh {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
