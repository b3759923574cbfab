"""Command-line entry point: ``tllverify <command> ...``.

Machine-readable output goes to stdout, logs to stderr.  ``verify`` exits with
0 (SAT), 1 (UNSAT), 2 (error) or 3 (timeout).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arrangement import Arrangement, EmptyInputError, VerificationTimeout, all_regions
from .compiler import compile_multi
from .genbench import SuiteConfig, gnuplot_table, make_instance, preset, read_results, run_suite, summarize
from .io import SCHEMA_VERSIONS, FormatError, load_property, load_tll, save_property, save_tll
from .lp import LPError
from .model import InvalidSpecError, OutputBox, Polytope
from .oracle import GuardExceeded, oracle_lb_signs, oracle_lb_tuple, oracle_ub
from .verifier import Side, Status, UnsoundWitnessError, verify_box

log = logging.getLogger("tllverify")

EXIT_SAT, EXIT_UNSAT, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2, 3


def _default_workers() -> int:
    return os.cpu_count() or 1


def cmd_verify(args) -> int:
    spec = load_tll(args.network)
    P_X, box = load_property(args.property)
    try:
        verdict = verify_box(spec, P_X, box, workers=args.workers, timeout_s=args.timeout_s, seed=args.seed)
    except VerificationTimeout:
        print(json.dumps({"status": "TIMEOUT"}))
        return EXIT_TIMEOUT
    out = verdict.to_dict()
    if not args.stats:
        out.pop("stats", None)
        out.pop("sub_verdicts", None)
    print(json.dumps(out))
    return EXIT_SAT if verdict.status is Status.SAT else EXIT_UNSAT


def _property_for(n: int, half_width: float, side: Side, bound: float) -> tuple[Polytope, OutputBox]:
    P_X = Polytope.cube(n, half_width)
    lower = [bound] if side is Side.LOWER else [-np.inf]
    upper = [bound] if side is Side.UPPER else [np.inf]
    return P_X, OutputBox(lower, upper)


def cmd_generate(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SuiteConfig.from_dict({"groups": [{"n": args.n, "N": args.N, "M": args.M, "count": args.count}],
                                 "seed": args.seed})
    from .genbench import iter_instances
    for instance_id, g, seed in iter_instances(cfg):
        spec, _, side, bound = make_instance(g.n, g.N, g.M, seed, args.half_width, args.samples)
        save_tll(spec, out / f"{instance_id}.net.json")
        save_property(*_property_for(g.n, args.half_width, side, bound), out / f"{instance_id}.prop.json")
    log.info("wrote %d instance(s) to %s", args.count, out)
    return 0


def cmd_bench(args) -> int:
    if args.config:
        cfg = SuiteConfig.load(args.config)
    else:
        cfg = preset(args.preset)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.timeout_s is not None:
        cfg.timeout_s = args.timeout_s
    if args.workers is not None:
        cfg.workers = args.workers
    run_suite(cfg, args.out, resume=args.resume)
    report = summarize(read_results(args.out))
    print(json.dumps(report, indent=1))
    if args.table:
        Path(args.table).write_text(gnuplot_table(report))
    return 0


def cmd_summarize(args) -> int:
    report = summarize(read_results(args.csv))
    print(gnuplot_table(report) if args.table else json.dumps(report, indent=1))
    return 0


def cmd_export(args) -> int:
    spec = load_tll(args.network)
    net = compile_multi(spec, flatten=args.flatten)
    if args.out:
        net.save(args.out)
    else:
        print(json.dumps(net.to_dict()))
    return 0


def cmd_oracle_check(args) -> int:
    pairs = sorted(Path(args.dir).glob("*.net.json"))
    disagreements = 0
    checked = 0
    for net_path in pairs:
        prop_path = net_path.with_name(net_path.name.replace(".net.json", ".prop.json"))
        spec = load_tll(net_path)
        P_X, box = load_property(prop_path)
        verdict = verify_box(spec, P_X, box, workers=args.workers, seed=args.seed)
        for (k, side), sub in verdict.sub_verdicts.items():
            comp = spec.outputs[k]
            if side is Side.UPPER:
                oracles = {"ub": lambda: oracle_ub(comp, P_X, box.upper[k])}
            else:
                oracles = {"lb_tuple": lambda: oracle_lb_tuple(comp, P_X, box.lower[k]),
                           "lb_signs": lambda: oracle_lb_signs(comp, P_X, box.lower[k])}
            for name, run in oracles.items():
                try:
                    ref = run()
                except GuardExceeded as exc:
                    log.info("%s: %s skipped (%s)", net_path.name, name, exc)
                    continue
                checked += 1
                if ref.status is not sub.status:
                    disagreements += 1
                    print(f"DISAGREE {net_path.name} output={k} side={side.value} "
                          f"verifier={sub.status.value} {name}={ref.status.value}")
    print(json.dumps({"instances": len(pairs), "oracle_runs": checked, "disagreements": disagreements}))
    return 0 if disagreements == 0 else 1


def cmd_regions(args) -> int:
    spec = load_tll(args.network)
    P_X, _ = load_property(args.property)
    comp = spec.outputs[args.output]
    arr = Arrangement([fn.shifted(-args.level) for fn in comp.local_fns()], comp.n)
    writer = csv.writer(sys.stdout)
    writer.writerow(["level", "signs", "witness"])
    for reg in sorted(all_regions(arr, P_X), key=lambda r: (r.level, r.signs)):
        writer.writerow([reg.level, "".join("+" if s > 0 else "-" for s in reg.signs),
                         " ".join(f"{v:.6g}" for v in reg.witness)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    versions = ", ".join(f"{k}={v}" for k, v in SCHEMA_VERSIONS.items())
    p = argparse.ArgumentParser(prog="tllverify", description="Box-property verifier for TLL ReLU networks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} (schemas: {versions})")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify a network against a property file")
    v.add_argument("network")
    v.add_argument("property")
    v.add_argument("--timeout-s", type=float, default=300.0)
    v.add_argument("--workers", type=int, default=_default_workers())
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--stats", action="store_true", help="include counters and timings")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("generate", help="write random (network, property) pairs")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--half-width", type=float, default=2.0)
    g.add_argument("--samples", type=int, default=10_000)
    g.add_argument("outdir")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run a benchmark suite and write a results CSV")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--config", help="suite config JSON")
    src.add_argument("--preset", default="desk", choices=["exp1", "exp2", "exp3", "desk", "desk-exp2"])
    b.add_argument("--out", required=True, help="results CSV")
    b.add_argument("--table", help="also write a gnuplot table here")
    b.add_argument("--resume", action="store_true", help="skip instances already in the CSV")
    b.add_argument("--timeout-s", type=float)
    b.add_argument("--workers", type=int)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("summarize", help="summarize a results CSV")
    s.add_argument("csv")
    s.add_argument("--table", action="store_true", help="gnuplot table instead of JSON")
    s.set_defaults(func=cmd_summarize)

    e = sub.add_parser("export", help="compile a network to a layered ReLU JSON")
    e.add_argument("network")
    e.add_argument("--flatten", action="store_true")
    e.add_argument("-o", "--out")
    e.set_defaults(func=cmd_export)

    o = sub.add_parser("oracle-check", help="cross-check verifier verdicts against brute-force oracles")
    o.add_argument("dir")
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle_check)

    r = sub.add_parser("regions", help="dump the regions of {L_i - level} inside the input polytope as CSV")
    r.add_argument("network")
    r.add_argument("property")
    r.add_argument("--output", type=int, default=0)
    r.add_argument("--level", type=float, default=0.0)
    r.set_defaults(func=cmd_regions)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (FormatError, InvalidSpecError, EmptyInputError, LPError, UnsoundWitnessError,
            ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
