"""Command-line front end.

Subcommands: ``solve`` (color one instance), ``certify`` (Monte-Carlo
subgaussian report), ``hull`` (one point per set), ``bench`` (CSV sweep over
random Komlos instances).  Exit codes: 0 success, 1 certification failure
or numerical breakdown, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .applications import lp_discrepancy, round_hull_system
from .errors import InfeasibleError, InputError, NumericalError
from .generators import gen_beck_fiala, gen_duplicated, gen_hull_system, gen_komlos, gen_orthonormal
from .io import (
    dumps,
    hull_hash,
    instance_hash,
    read_hull_system,
    read_instance,
    write_atomic,
)
from .preprocess import eliminate_dependencies
from .stats import FAIL, certify, sample_colorings_parallel
from .walk import Instance, run_walk, walk_rng

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

# spawn keys for auxiliary streams; walks use (0, i)
_THETA_STREAM = 1
_PREPROCESS_STREAM = 2


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="instance file (.json, or .csv with one column per line)")
    src.add_argument("--gen", choices=["komlos", "beck-fiala", "orthonormal", "duplicated"])
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--m", type=int, default=None, help="dimension (default: n)")
    p.add_argument("--t", type=int, default=2, help="ones per column for beck-fiala")
    p.add_argument("--copies", type=int, default=2, help="repeats per vector for duplicated")
    p.add_argument("--instance-seed", type=_seed, default=None, help="generator seed (default: --seed)")
    p.add_argument("--x0", default=None, help='"zeros" or comma-separated starting values')


def _load_instance(args) -> Instance:
    if args.input:
        inst = read_instance(args.input)
    else:
        m = args.n if args.m is None else args.m
        gseed = args.seed if args.instance_seed is None else args.instance_seed
        if args.n < 1 or m < 1:
            raise InputError("--n and --m must be positive")
        if args.gen == "komlos":
            vectors = gen_komlos(args.n, m, gseed)
        elif args.gen == "beck-fiala":
            vectors = gen_beck_fiala(args.n, m, args.t, gseed)
        elif args.gen == "duplicated":
            vectors = gen_duplicated(args.n, m, args.copies, gseed)
        else:
            vectors = gen_orthonormal(args.n)
        inst = Instance.centered(vectors)
    if args.x0 is not None:
        if args.x0 == "zeros":
            x0 = np.zeros(inst.n)
        else:
            try:
                x0 = _float_list(args.x0)
            except argparse.ArgumentTypeError as exc:
                raise InputError(str(exc)) from exc
        inst = Instance(inst.vectors, x0)
    return inst


def _emit(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)


def _provenance(seed: int, digest: str) -> dict:
    return {"seed": seed, "version": __version__, "instance_hash": digest}


# --------------------------------------------------------------------------
# Commands


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    if args.samples < 1:
        raise InputError("--samples must be positive")
    digest = instance_hash(inst)
    pre_records = []
    if args.preprocess:
        inst, pre_records = eliminate_dependencies(inst, _stream(args.seed, _PREPROCESS_STREAM))

    index = 0
    if args.samples > 1:
        xs = sample_colorings_parallel(inst, args.samples, args.seed, args.workers)
        index = int(np.argmin(np.max(np.abs(xs @ inst.vectors.T), axis=1)))
    x, trace = run_walk(inst, walk_rng(args.seed, index), record_trace=True)

    disc = inst.vectors @ x
    doc = {
        "coloring": [int(v) for v in x],
        "linf_disc": float(np.max(np.abs(disc), initial=0.0)),
        "l2_disc": float(np.linalg.norm(disc)),
        "steps": len(trace),
        "preprocess_steps": len(pre_records),
        "samples": args.samples,
        "sample_index": index,
        "seed": args.seed,
        "provenance": _provenance(args.seed, digest),
    }
    if args.trace:
        lines = [json.dumps({"stage": "preprocess", **r.to_dict()}, sort_keys=True) for r in pre_records]
        lines += [json.dumps({"stage": "walk", **r.to_dict()}, sort_keys=True) for r in trace.steps]
        write_atomic(args.trace, "".join(line + "\n" for line in lines))
    _emit(args, dumps(doc))
    return EXIT_OK


def cmd_certify(args) -> int:
    inst = _load_instance(args)
    if args.samples < 2:
        raise InputError("--samples must be at least 2")
    if args.thetas < 1:
        raise InputError("--thetas must be positive")
    thetas = _stream(args.seed, _THETA_STREAM).standard_normal((args.thetas, inst.m))
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    report = certify(inst, thetas, args.lambdas, args.samples, args.seed, ts=args.ts, workers=args.workers)
    doc = report.to_dict()
    doc["thetas"] = thetas.tolist()
    doc["provenance"] = _provenance(args.seed, instance_hash(inst))
    _emit(args, dumps(doc))
    print(f"verdict: {report.verdict}", file=sys.stderr)
    return EXIT_FAIL if report.verdict == FAIL else EXIT_OK


def cmd_hull(args) -> int:
    if args.input:
        system = read_hull_system(args.input)
    else:
        m = args.n if args.m is None else args.m
        gseed = args.seed if args.instance_seed is None else args.instance_seed
        if args.n < 1 or m < 1:
            raise InputError("--n and --m must be positive")
        system = gen_hull_system(args.n, m, args.k, gseed)
    result = round_hull_system(system, args.epsilon, np.random.default_rng(args.seed))
    doc = {
        "selection": result.selection,
        "total": result.total.tolist(),
        "norm": result.norm,
        "bits": result.bits,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "provenance": _provenance(args.seed, hull_hash(system)),
    }
    _emit(args, dumps(doc))
    return EXIT_OK


BENCH_HEADER = "n,m,seed,linf_disc,l2_disc,runtime_ms"


def cmd_bench(args) -> int:
    if any(n < 1 for n in args.sizes) or args.seeds < 1:
        raise InputError("--sizes and --seeds must be positive")
    rows = [BENCH_HEADER]
    summary = {}
    for n in args.sizes:
        m = n if args.m is None else args.m
        discs = []
        for seed in range(args.seed, args.seed + args.seeds):
            vectors = gen_komlos(n, m, seed)
            start = time.perf_counter()
            x, _ = run_walk(Instance.centered(vectors), walk_rng(seed, 0))
            elapsed = (time.perf_counter() - start) * 1e3
            linf = float(np.max(np.abs(vectors @ x)))
            l2 = lp_discrepancy(vectors, x, 2)
            runtime = "" if args.no_timing else f"{elapsed:.3f}"
            rows.append(f"{n},{m},{seed},{linf!r},{l2!r},{runtime}")
            discs.append(linf)
        summary[n] = (float(np.median(discs)), float(np.percentile(discs, 95)))
    _emit(args, "\n".join(rows) + "\n")
    for n, (med, p95) in summary.items():
        print(f"n={n} median_disc={med:.4f} p95_disc={p95:.4f}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gswalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out", default="-", help="output file (default: stdout)")

    p = sub.add_parser("solve", help="color one instance")
    common(p)
    _add_instance_args(p)
    p.add_argument("--samples", type=int, default=1, help="independent walks; the best coloring is kept")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--preprocess", action="store_true", help="eliminate linear dependencies first")
    p.add_argument("--trace", default=None, help="write step records as JSON lines")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="Monte-Carlo subgaussian report")
    common(p)
    _add_instance_args(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--thetas", type=int, default=5, help="number of random unit test directions")
    p.add_argument("--lambdas", type=_float_list, default=[0.0, 0.25, 0.5, 1.0])
    p.add_argument("--ts", type=_float_list, default=[1.0, 2.0, 3.0], help="tail thresholds in units of sigma")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("hull", help="pick one point per set with a small sum")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="hull system JSON file")
    src.add_argument("--gen", action="store_true", help="use a random hull system")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, default=2, help="points per generated set")
    p.add_argument("--instance-seed", type=_seed, default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_hull)

    p = sub.add_parser("bench", help="CSV sweep over random Komlos instances")
    common(p)
    p.add_argument("--sizes", type=_int_list, default=[64, 128, 256])
    p.add_argument("--m", type=int, default=None, help="dimension (default: n)")
    p.add_argument("--seeds", type=int, default=50, help="instances per size, seeds --seed, --seed+1, ...")
    p.add_argument("--no-timing", action="store_true", help="leave runtime_ms empty for reproducible output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, InfeasibleError) as exc:
        print(f"gswalk: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"gswalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
