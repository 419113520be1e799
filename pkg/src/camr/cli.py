"""Command-line entry point: ``camr design|simulate|sweep|compare``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from camr.analysis import (
    LoadMismatch,
    camr_loads,
    ccdc_load,
    fmt,
    min_jobs,
    reconcile,
    to_csv,
    uncoded_baseline_load,
)
from camr.design import DesignError, DesignParams, build_design, check_design, design_to_dict, owners_of_job
from camr.jobs import JobError, corpus_records
from camr.placement import PlacementError, plan_to_dict
from camr.shuffle import ShuffleError, workers_from_env
from camr.simulation import simulate

log = logging.getLogger("camr")

STAGE_OF_ERROR = {
    DesignError: "design",
    PlacementError: "placement",
    JobError: "jobs",
    ShuffleError: "shuffle",
    LoadMismatch: "analysis",
}


def int_list(text: str) -> list[int]:
    """Parse ``2,3,4`` or ``2-5`` (or a mix) into a list of ints."""
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def _fail(stage: str, exc: Exception) -> int:
    print(f"error [{stage}]: {exc}", file=sys.stderr)
    return 1


def _stage_of(exc: Exception) -> str | None:
    for cls, name in STAGE_OF_ERROR.items():
        if isinstance(exc, cls):
            return name
    return None


def cmd_design(args) -> int:
    try:
        design = build_design(DesignParams(args.q, args.k))
    except DesignError as exc:
        return _fail("design", exc)
    problems = check_design(design)
    if args.format == "json":
        print(json.dumps(design_to_dict(design), indent=2))
    else:
        p = design.params
        print(f"q={p.q} k={p.k} K={p.K} J={p.J}")
        for cls_i, cls in enumerate(design.classes, 1):
            print(f"class {cls_i}:")
            for s in cls:
                b = design.block(s)
                print(f"  U_{s} = B[{b.class_index},{b.symbol}] points {sorted(b.points)}")
        print("owners:")
        for j in design.points:
            print(f"  X^({j}) = {{{', '.join(f'U_{s}' for s in owners_of_job(design, j))}}}")
    for msg in problems:
        print(f"invariant violated: {msg}", file=sys.stderr)
    return 0 if not problems else 1


def run_point(q, k, gamma, value_bytes, seed, aggregator="sum", coded=True, workers=1, dumps=None):
    """Simulate one grid point and reconcile its loads; returns (report, result)."""
    res = simulate(q, k, gamma, value_bytes, seed, aggregator=aggregator, coded=coded, workers=workers)
    if dumps:
        if dumps.get("design"):
            _write(dumps["design"], json.dumps(design_to_dict(res.design), indent=2) + "\n")
        if dumps.get("placement"):
            _write(dumps["placement"], json.dumps(plan_to_dict(res.plan), indent=2) + "\n")
        if dumps.get("log"):
            _write(dumps["log"], "".join(json.dumps(r.to_dict()) + "\n" for r in res.log))
        if dumps.get("corpus"):
            _write(dumps["corpus"], "".join(line + "\n" for line in corpus_records(res.corpus)))
    report = reconcile(res.log, q, k, gamma, res.value_bytes, seed, res.correct, coded=coded)
    return report, res


def cmd_simulate(args) -> int:
    dumps = {
        "design": args.dump_design,
        "placement": args.dump_placement,
        "log": args.dump_log,
        "corpus": args.dump_corpus,
    }
    try:
        report, res = run_point(
            args.q, args.k, args.gamma, args.value_bytes, args.seed,
            aggregator=args.aggregator, coded=not args.uncoded,
            workers=workers_from_env(), dumps=dumps,
        )
    except Exception as exc:
        stage = _stage_of(exc)
        if stage is None:
            raise
        return _fail(stage, exc)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    elif args.format == "csv":
        print(to_csv([report]), end="")
    else:
        print(report.to_text())
    if not res.correct:
        print(f"reduce outputs differ from oracle at (function, job) {res.mismatches()}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_sweep(args) -> int:
    reports, failures = [], []
    workers = workers_from_env()
    for q in args.q:
        for k in args.k:
            for gamma in args.gamma:
                for seed in args.seeds:
                    try:
                        report, _ = run_point(q, k, gamma, args.value_bytes, seed,
                                              aggregator=args.aggregator, workers=workers)
                    except Exception as exc:
                        stage = _stage_of(exc)
                        if stage is None:
                            raise
                        failures.append(f"q={q} k={k} gamma={gamma} seed={seed} [{stage}]: {exc}")
                        continue
                    reports.append(report)
                    if not report.ok:
                        failures.append(f"q={q} k={k} gamma={gamma} seed={seed}: incorrect reduce output")
    if args.format == "json":
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    elif args.format == "csv":
        print(to_csv(reports), end="")
    else:
        for r in reports:
            print(r.to_text())
            print()
        print(f"{len(reports)} points run, {len(failures)} failed")
    for msg in failures:
        print(f"failed: {msg}", file=sys.stderr)
    return 0 if not failures else 1


def compare_rows(K: int, ks: list[int] | None = None) -> tuple[list[dict], list[str]]:
    """One row per k dividing K (with q = K/k >= 2); notices for skipped k."""
    if ks is None:
        ks = [k for k in range(2, K // 2 + 1) if K % k == 0]
    rows, notices = [], []
    for k in ks:
        if k < 2 or K % k or K // k < 2:
            notices.append(f"k={k} skipped: need k >= 2 dividing K={K} with K/k >= 2")
            continue
        q = K // k
        j_camr, j_ccdc = min_jobs(q, k)
        l_camr = camr_loads(q, k)[3]
        l_ccdc = ccdc_load(Fraction(k - 1, K), K)
        rows.append({
            "k": k,
            "q": q,
            "mu": fmt(Fraction(k - 1, K)),
            "J_camr": j_camr,
            "J_ccdc_min": j_ccdc,
            "L_camr": fmt(l_camr),
            "L_ccdc": fmt(l_ccdc),
            "L_baseline": fmt(uncoded_baseline_load(q, k)),
            "loads_equal": l_camr == l_ccdc,
        })
    return rows, notices


def cmd_compare(args) -> int:
    if args.K < 4:
        return _fail("compare", ValueError(f"K={args.K} admits no k >= 2 with q >= 2"))
    rows, notices = compare_rows(args.K, args.k)
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    cols = ["k", "q", "mu", "J_camr", "J_ccdc_min", "L_camr", "L_ccdc", "L_baseline", "loads_equal"]
    if args.format == "json":
        print(json.dumps({"K": args.K, "rows": rows}, indent=2))
    elif args.format == "csv":
        print(",".join(cols))
        for r in rows:
            print(",".join(str(r[c]).lower() if isinstance(r[c], bool) else str(r[c]) for c in cols))
    else:
        widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) if rows else len(c) for c in cols}
        print("  ".join(c.rjust(widths[c]) for c in cols))
        for r in rows:
            print("  ".join(str(r[c]).rjust(widths[c]) for c in cols))
        print("L_baseline is a simulator-defined uncoded reference.")
    return 0 if all(r["loads_equal"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="camr", description="Coded aggregated MapReduce simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt_arg(sp, choices=("text", "json", "csv")):
        sp.add_argument("--format", choices=choices, default="text")

    d = sub.add_parser("design", help="build and dump the resolvable design")
    d.add_argument("--q", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    fmt_arg(d, ("text", "json"))
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="run the full pipeline for one (q, k, gamma)")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--gamma", type=int, default=2)
    s.add_argument("--value-bytes", type=int, default=None,
                   help="bytes per value; must be divisible by k-1 (default: smallest such >= 8)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--aggregator", choices=["sum", "max"], default="sum")
    s.add_argument("--uncoded", action="store_true", help="send every chunk uncoded (baseline)")
    s.add_argument("--dump-design", metavar="PATH")
    s.add_argument("--dump-placement", metavar="PATH")
    s.add_argument("--dump-log", metavar="PATH")
    s.add_argument("--dump-corpus", metavar="PATH")
    fmt_arg(s)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="simulate a (q, k, gamma, seed) grid")
    w.add_argument("--q", type=int_list, default=[2, 3, 4, 5])
    w.add_argument("--k", type=int_list, default=[2, 3, 4])
    w.add_argument("--gamma", type=int_list, default=[1, 2, 3])
    w.add_argument("--seeds", type=int_list, default=[0])
    w.add_argument("--value-bytes", type=int, default=None)
    w.add_argument("--aggregator", choices=["sum", "max"], default="sum")
    fmt_arg(w)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="job counts and loads against CCDC for a cluster size")
    c.add_argument("--K", type=int, required=True)
    c.add_argument("--k", type=int_list, default=None, help="restrict to these k values")
    fmt_arg(c)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
