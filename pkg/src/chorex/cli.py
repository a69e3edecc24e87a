"""Command-line front end.

Subcommands:

  extract FILE    extract a choreography from a network file
  project FILE    project a choreography file to a network
  equiv A B       bisimilarity verdict for two choreography files
  gen             materialize a generated-choreography corpus
  fuzz            materialize fuzzed-network variants of a corpus
  unroll          materialize unrolled-network variants of a corpus
  bench           run extraction across all strategies, emit CSV

Exit codes: 0 success; 1 extraction/projection/verdict failure
(no valid graph, merge error, verdict "no", or a deadlocked extraction
under --strict); 2 unreadable input, parse error, or check failure;
3 equivalence check exhausted its budget.

The default seed comes from the CHOREX_SEED environment variable when
set.  Identical inputs, flags, and seed give byte-identical stdout.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import time
from pathlib import Path

from .cc import Program
from .epp import MergeError, epp
from .equiv import SimBudget, bisimilar
from .extraction import extract
from .parser import (
    ParseError,
    parse_network,
    parse_program,
    pretty,
    pretty_behaviour,
)
from .sp import Call as SpCall, Network
from .strategies import STRATEGY_NAMES, Strategy
from .testgen import FuzzParams, GenParams, amend, fuzz, generate, unroll
from .wellformed import check_guardedness, check_well_formed


def _default_seed() -> int:
    return int(os.environ.get("CHOREX_SEED", "0"))


def _err(msg: str):
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SystemExit(_exit_with(f"cannot read {path}: {exc}", 2))


def _exit_with(msg: str, code: int) -> int:
    _err(msg)
    return code


def _parse_or_exit(parse, text: str, path: str):
    try:
        return parse(text)
    except ParseError as exc:
        span = exc.span
        where = f"{path}:{span.line}:{span.column}" if span else path
        raise SystemExit(_exit_with(f"{where}: {exc.message}", 2))


def _check_or_exit(net: Network) -> None:
    problems = check_well_formed(net).violations + check_guardedness(net).violations
    if problems:
        for kind, where, description in problems:
            _err(f"{kind} in {where}: {description}")
        raise SystemExit(2)


# --- extract -------------------------------------------------------------


def cmd_extract(args) -> int:
    net = _parse_or_exit(parse_network, _read(args.file), args.file)
    _check_or_exit(net)
    services = frozenset(s for s in (args.services or "").split(",") if s)
    unknown = services - set(net.names())
    if unknown:
        return _exit_with(f"unknown service process(es): {', '.join(sorted(unknown))}", 2)
    strategy = Strategy(args.strategy, args.seed)
    started = time.perf_counter()
    result = extract(net, services=services, strategy=strategy, parallel=not args.no_parallel)
    wall_millis = (time.perf_counter() - started) * 1000.0
    if args.dot:
        Path(args.dot).write_text(result.to_dot())
    if args.stats:
        stats = {
            "wallMillis": wall_millis,
            "nodesCreated": result.nodes_created,
            "nodesDeleted": result.nodes_deleted,
            "badloops": result.badloops,
            "components": len(result.components),
            "strategy": strategy.name,
            "seed": strategy.seed,
        }
        Path(args.stats).write_text(json.dumps(stats, indent=2) + "\n")
    if not result.ok:
        _err(str(result.failure))
        return 1
    print(pretty(result.program))
    remainders = result.deadlock_remainders
    if remainders:
        _err("extraction contains deadlocks; stuck processes:")
        for leaf in remainders:
            for p in sorted(leaf):
                _err(f"  {p}: {_remainder_text(leaf[p])}")
        if args.strict:
            return 1
    return 0


def _remainder_text(term) -> str:
    body = term.main
    while isinstance(body, SpCall):
        body = term.procedures[body.name]
    return pretty_behaviour(body)


# --- project -------------------------------------------------------------


def _project_program(prog: Program) -> dict:
    terms = {}
    for component in prog.components:
        net = epp(component)
        terms.update(net.processes)
    return terms


def cmd_project(args) -> int:
    prog = _parse_or_exit(parse_program, _read(args.file), args.file)
    try:
        terms = _project_program(prog)
    except MergeError as exc:
        _err(f"not projectable: merge failed at {exc.location}")
        return 1
    except ValueError:
        # A choreography that mentions no process projects to nothing.
        terms = {}
    if terms:
        print(pretty(Network(terms)))
    return 0


# --- equiv ---------------------------------------------------------------


def cmd_equiv(args) -> int:
    a = _parse_or_exit(parse_program, _read(args.a), args.a)
    b = _parse_or_exit(parse_program, _read(args.b), args.b)
    budget = SimBudget(max_pairs=args.budget, max_millis=args.millis)
    result = bisimilar(a, b, budget)
    print(json.dumps(result.to_json()))
    return {"yes": 0, "no": 1, "exhausted": 3}[result.verdict]


# --- corpus commands -----------------------------------------------------

# Parameter grid rows: each row yields (point-name, GenParams template).
# Repetitions per point scale with --scale (10 at scale 1).

_ROWS = ("size", "processes", "ifs", "ifs-defs", "procedures")


def _grid(rows):
    for row in rows:
        if row == "size":
            for k in range(1, 43):
                yield f"size-k{k}", dict(size=50 * k, processes=6, ifs=0, defs=0)
        elif row == "processes":
            for k in range(1, 21):
                yield f"processes-k{k}", dict(size=500, processes=5 * k, ifs=0, defs=0)
        elif row == "ifs":
            for k in range(1, 5):
                yield f"ifs-k{k}", dict(size=50, processes=6, ifs=10 * k, defs=0)
        elif row == "ifs-defs":
            for j in range(0, 6):
                for k in range(0, 4):
                    yield f"ifs-defs-j{j}k{k}", dict(size=200, processes=5, ifs=j, defs=5 * k)
        elif row == "procedures":
            for k in range(1, 16):
                yield f"procedures-k{k}", dict(size=20, processes=5, ifs=8, defs=k)
        else:
            raise SystemExit(_exit_with(f"unknown parameter row: {row}", 2))


def _corpus(rows, scale, seed):
    reps = max(1, round(10 * scale))
    for point, params in _grid(rows):
        for rep in range(reps):
            test_id = f"{point}-r{rep}"
            yield test_id, GenParams(seed=seed * 1_000_003 + rep, **params)


def _rows_arg(args):
    if not args.rows:
        return _ROWS
    return tuple(r.strip() for r in args.rows.split(",") if r.strip())


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, entries):
    out.joinpath("manifest.json").write_text(json.dumps(entries, indent=2) + "\n")


def cmd_gen(args) -> int:
    out = _outdir(args)
    entries = []
    for test_id, params in _corpus(_rows_arg(args), args.scale, args.seed):
        c = amend(generate(params))
        name = f"{test_id}.cc"
        out.joinpath(name).write_text(pretty(c) + "\n")
        entries.append(
            {
                "testId": test_id,
                "file": name,
                "params": {
                    "size": params.size,
                    "processes": params.processes,
                    "ifs": params.ifs,
                    "defs": params.defs,
                },
                "seed": params.seed,
                "expectedVerdict": "extractable",
            }
        )
    _write_manifest(out, entries)
    print(f"wrote {len(entries)} choreographies to {out}")
    return 0


_FUZZ_GRID = ((0, 1), (1, 0), (2, 2))


def cmd_fuzz(args) -> int:
    out = _outdir(args)
    entries = []
    for test_id, params in _corpus(_rows_arg(args), args.scale, args.seed):
        net = epp(amend(generate(params)))
        for d, s in _FUZZ_GRID:
            variant = fuzz(net, FuzzParams(deletions=d, swaps=s, seed=params.seed))
            name = f"{test_id}-d{d}s{s}.sp"
            out.joinpath(name).write_text(pretty(variant) + "\n")
            entries.append(
                {
                    "testId": f"{test_id}-d{d}s{s}",
                    "file": name,
                    "deletions": d,
                    "swaps": s,
                    "seed": params.seed,
                    "expectedVerdict": "unextractable-likely" if d else "unknown",
                }
            )
    _write_manifest(out, entries)
    print(f"wrote {len(entries)} fuzzed networks to {out}")
    return 0


def cmd_unroll(args) -> int:
    out = _outdir(args)
    entries = []
    for test_id, params in _corpus(_rows_arg(args), args.scale, args.seed):
        net = unroll(epp(amend(generate(params))), seed=params.seed)
        name = f"{test_id}-unrolled.sp"
        out.joinpath(name).write_text(pretty(net) + "\n")
        entries.append(
            {
                "testId": f"{test_id}-unrolled",
                "file": name,
                "seed": params.seed,
                "expectedVerdict": "extractable",
            }
        )
    _write_manifest(out, entries)
    print(f"wrote {len(entries)} unrolled networks to {out}")
    return 0


_CSV_HEADER = "testId,size,processes,ifs,defs,strategy,timeMs,nodes,badloops,verdict"


def _bench_one(test_id, params, strategy_name, net):
    strategy = Strategy(strategy_name, params.seed)
    started = time.perf_counter()
    result = extract(net, strategy=strategy)
    elapsed = (time.perf_counter() - started) * 1000.0
    if not result.ok:
        verdict = "fail"
    elif result.deadlock_remainders:
        verdict = "deadlock"
    else:
        verdict = "ok"
    return [
        test_id,
        params.size,
        params.processes,
        params.ifs,
        params.defs,
        strategy_name,
        f"{elapsed:.3f}",
        result.nodes_created - result.nodes_deleted,
        result.badloops,
        verdict,
    ]


def cmd_bench(args) -> int:
    out = _outdir(args)
    jobs = []
    for test_id, params in _corpus(_rows_arg(args), args.scale, args.seed):
        net = epp(amend(generate(params)))
        for name in STRATEGY_NAMES:
            jobs.append((test_id, params, name, net))
    rows = []
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda j: _bench_one(*j), jobs))
    else:
        rows = [_bench_one(*j) for j in jobs]
    path = out / "bench.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER.split(","))
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


# --- argument parsing ----------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="chorex", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a choreography from a network")
    p.add_argument("file")
    p.add_argument("--strategy", default="InteractionsFirst", choices=STRATEGY_NAMES)
    p.add_argument("--services", default="", metavar="p,q")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--no-parallel", action="store_true")
    p.add_argument("--dot", metavar="OUT.dot")
    p.add_argument("--stats", metavar="OUT.json")
    p.add_argument("--strict", action="store_true", help="treat deadlocks as failure")
    p.set_defaults(run=cmd_extract)

    p = sub.add_parser("project", help="project a choreography to a network")
    p.add_argument("file")
    p.set_defaults(run=cmd_project)

    p = sub.add_parser("equiv", help="check two choreographies for bisimilarity")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--budget", type=int, default=100_000, help="max pairs")
    p.add_argument("--millis", type=float, default=None, help="max wall time")
    p.set_defaults(run=cmd_equiv)

    for name, runner, blurb in (
        ("gen", cmd_gen, "write a generated corpus"),
        ("fuzz", cmd_fuzz, "write fuzzed variants of a corpus"),
        ("unroll", cmd_unroll, "write unrolled variants of a corpus"),
        ("bench", cmd_bench, "extract a corpus under every strategy"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("rows", nargs="?", default="", help=f"subset of {','.join(_ROWS)}")
        p.add_argument("--out", required=True)
        p.add_argument("--scale", type=float, default=1.0)
        p.add_argument("--seed", type=int, default=_default_seed())
        if name == "bench":
            p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(run=runner)

    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.run(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
