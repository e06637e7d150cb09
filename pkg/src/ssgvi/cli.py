"""Command line interface: ``ssgvi solve|generate|analyze|bench``.

Exit codes: 0 success, 1 solver did not converge, 2 usage or I/O error.

A MODEL argument is either a path to an ``.ssg`` file or a builtin spec:
``fig1``, ``tvi-chain:N``, ``ovi-easy:N``, ``ovi-hard:N``, ``simple-scc:N[:M]``,
``random:N[:SEED]``.
"""

from __future__ import annotations

import argparse
import csv
import multiprocessing as mp
import sys
import time
from pathlib import Path
from typing import Sequence

from ssgvi.analysis import aggregate_features, compute_features, write_feature_csv
from ssgvi.bellman import DiffMode
from ssgvi.generation import (
    HANDCRAFTED,
    GenParams,
    SccChainParams,
    TreeParams,
    generate_random,
    generate_scc_chain,
    generate_tree,
    handcrafted,
    spawn_seeds,
)
from ssgvi.io import load_model, save_model
from ssgvi.model import SsgModel, UsageError
from ssgvi.solvers import ALGORITHMS, SolverConfig, SolverResult, Status, solve

EXIT_OK = 0
EXIT_UNSOLVED = 1
EXIT_USAGE = 2

BENCH_FIELDS = (
    "model_name",
    "algorithm",
    "epsilon",
    "mode",
    "iterations",
    "verification_phases",
    "wall_time_ms",
    "status",
    "value_at_initial_lower",
    "value_at_initial_upper",
)

#: Extra seconds a bench worker gets to stop on its own before it is killed.
KILL_GRACE = 2.0


def resolve_model(spec: str) -> SsgModel:
    path = Path(spec)
    if path.is_file():
        return load_model(path)
    kind, *rest = spec.split(":")
    try:
        nums = [int(x) for x in rest]
    except ValueError:
        raise UsageError(f"bad model spec {spec!r}") from None
    if kind == "random":
        if not nums:
            raise UsageError("random models need a size: random:N[:SEED]")
        return generate_random(GenParams(n=nums[0], seed=nums[1] if len(nums) > 1 else 0))
    if kind in HANDCRAFTED:
        if kind != "fig1" and not nums:
            raise UsageError(f"{kind} needs a size: {kind}:N")
        return handcrafted(kind, *nums)
    raise UsageError(f"no such model file or builtin: {spec!r}")


def _config(args: argparse.Namespace, timeout: float | None) -> SolverConfig:
    return SolverConfig(
        epsilon=args.epsilon,
        naive_epsilon=args.naive_epsilon,
        mode=DiffMode(args.mode),
        deflate_every=args.deflate_every,
        gauss_seidel=args.gauss_seidel,
        max_iterations=args.max_iter,
        timeout=timeout,
        ovi_lower_check=args.ovi_lower_check,
        deflate=not args.no_deflate,
    )


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--naive-epsilon", type=float, default=None, help="defaults to --epsilon")
    p.add_argument("--mode", choices=[m.value for m in DiffMode], default="absolute")
    p.add_argument("--deflate-every", type=int, default=100)
    p.add_argument("--no-deflate", action="store_true", help="never deflate end components")
    p.add_argument("--gauss-seidel", action="store_true")
    p.add_argument("--ovi-lower-check", action="store_true")
    p.add_argument("--max-iter", type=int, default=10_000_000)


def cmd_solve(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    res = solve(model, args.alg, _config(args, args.timeout_s))
    s = model.initial
    lo, hi = res.bounds_at(s)
    if args.alg in ("vi", "tvi-vi"):
        print("warning: naive value iteration gives no guarantee on the result", file=sys.stderr)
    print(f"model:      {args.model}")
    print(f"algorithm:  {res.algorithm}")
    print(f"status:     {res.status.value}")
    if res.status is Status.PRECISE or lo == hi:
        print(f"value:      {lo!r}")
    else:
        print(f"bounds:     [{lo!r}, {hi!r}]")
    print(f"iterations: {res.iterations}")
    if res.verification_phases:
        print(f"phases:     {res.verification_phases}")
    print(f"time:       {res.wall_time:.3f}s")
    if res.status is Status.STALLED:
        print(f"stalled at: {res.diagnostics.get('stalled_scc')}")
    return EXIT_OK if res.status.ok else EXIT_UNSOLVED


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind in HANDCRAFTED:
        model = handcrafted(args.kind, args.n, args.m)
        path = out / f"{args.kind}_{args.n}.ssg"
        save_model(model, path)
        print(path)
        return EXIT_OK
    width = len(str(args.count - 1))
    for i, seed in enumerate(spawn_seeds(args.seed, args.count)):
        seed_int = int(seed.generate_state(1, dtype="uint64")[0])
        if args.kind == "random":
            model = generate_random(
                GenParams(
                    n=args.n,
                    minimizer_prob=args.minimizer_prob,
                    extra_action_geom=args.extra_action_geom,
                    min_prob=args.min_prob,
                    max_transitions_per_action=args.max_transitions,
                    seed=seed_int,
                )
            )
        elif args.kind == "tree":
            model = generate_tree(
                TreeParams(
                    n=args.n,
                    k=args.k,
                    seed=seed_int,
                    minimizer_prob=args.minimizer_prob,
                    extra_action_geom=args.extra_action_geom,
                    min_prob=args.min_prob,
                )
            )
        else:
            model = generate_scc_chain(
                SccChainParams(
                    n=args.n,
                    scc_size_min=args.scc_min,
                    scc_size_max=args.scc_max,
                    seed=seed_int,
                    minimizer_prob=args.minimizer_prob,
                    extra_action_geom=args.extra_action_geom,
                    min_prob=args.min_prob,
                )
            )
        path = out / f"{args.kind}_{args.n}_{i:0{width}d}.ssg"
        save_model(model, path)
        print(path)
    return EXIT_OK


def _model_files(specs: Sequence[str]) -> list[str]:
    out: list[str] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            out.extend(str(f) for f in sorted(p.glob("*.ssg")))
        else:
            out.append(spec)
    if not out:
        raise UsageError("no models given")
    return out


def cmd_analyze(args: argparse.Namespace) -> int:
    rows = [(name, compute_features(resolve_model(name))) for name in _model_files(args.models)]
    agg = None if args.no_aggregate else aggregate_features([r for _, r in rows])
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_feature_csv(fh, rows, agg)
    else:
        write_feature_csv(sys.stdout, rows, agg)
    return EXIT_OK


# -- bench ---------------------------------------------------------------------


def _bench_worker(conn, spec: str, alg: str, cfg: SolverConfig) -> None:
    try:
        model = resolve_model(spec)
        res: SolverResult = solve(model, alg, cfg)
        lo, hi = res.bounds_at(model.initial)
        conn.send(("ok", res.status.value, res.iterations, res.verification_phases, res.wall_time, lo, hi))
    except Exception as e:  # reported as a failed record
        conn.send(("error", repr(e)))
    finally:
        conn.close()


def _record(spec, alg, cfg, status, iterations=0, phases=0, wall=0.0, lo=0.0, hi=1.0) -> dict:
    return {
        "model_name": Path(spec).stem if Path(spec).is_file() else spec,
        "algorithm": alg,
        "epsilon": repr(cfg.epsilon),
        "mode": cfg.mode.value,
        "iterations": iterations,
        "verification_phases": phases,
        "wall_time_ms": f"{wall * 1000.0:.3f}",
        "status": status,
        "value_at_initial_lower": repr(float(lo)),
        "value_at_initial_upper": repr(float(hi)),
    }


def run_bench(
    models: Sequence[str],
    algorithms: Sequence[str],
    cfg: SolverConfig,
    out,
    timeout_s: float,
    workers: int = 1,
    header: bool = True,
) -> int:
    """Run every (model, algorithm) pair in its own process and append one
    CSV record per run to ``out``.  Returns the number of records."""
    ctx = mp.get_context("spawn")
    writer = csv.DictWriter(out, fieldnames=BENCH_FIELDS, lineterminator="\n")
    if header:
        writer.writeheader()
        out.flush()
    jobs = [(m, a) for m in models for a in algorithms]
    running: list[tuple] = []
    written = 0

    def finish(job, proc, conn, start):
        spec, alg = job
        if conn.poll():
            msg = conn.recv()
            if msg[0] == "ok":
                _, status, it, ph, wall, lo, hi = msg
                rec = _record(spec, alg, cfg, status, it, ph, wall, lo, hi)
            else:
                rec = _record(spec, alg, cfg, f"Error: {msg[1]}", wall=time.perf_counter() - start)
        else:
            rec = _record(spec, alg, cfg, Status.TIMEOUT.value, wall=time.perf_counter() - start)
        conn.close()
        proc.join()
        writer.writerow(rec)
        out.flush()

    while jobs or running:
        while jobs and len(running) < workers:
            job = jobs.pop(0)
            parent, child = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_bench_worker, args=(child, job[0], job[1], cfg), daemon=True)
            proc.start()
            child.close()
            running.append((job, proc, parent, time.perf_counter()))
        still = []
        for job, proc, conn, start in running:
            if conn.poll() or not proc.is_alive():
                finish(job, proc, conn, start)
                written += 1
            elif time.perf_counter() - start > timeout_s + KILL_GRACE:
                proc.kill()
                finish(job, proc, conn, start)
                written += 1
            else:
                still.append((job, proc, conn, start))
        running = still
        if running:
            time.sleep(0.01)
    return written


def cmd_bench(args: argparse.Namespace) -> int:
    models = _model_files(args.models)
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    for a in algs:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    cfg = _config(args, args.timeout_s)
    if args.out:
        path = Path(args.out)
        header = not (args.append and path.exists() and path.stat().st_size > 0)
        with open(path, "a" if args.append else "w", newline="") as fh:
            run_bench(models, algs, cfg, fh, args.timeout_s, args.workers, header)
    else:
        run_bench(models, algs, cfg, sys.stdout, args.timeout_s, args.workers)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssgvi", description="Solve, generate and analyze simple stochastic games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one model")
    p.add_argument("model")
    p.add_argument("--alg", choices=sorted(ALGORITHMS), default="bvi")
    p.add_argument("--timeout-s", type=float, default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write random or handcrafted models")
    p.add_argument("--kind", choices=["random", "tree", "scc-chain", *HANDCRAFTED], default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--m", type=int, default=1, help="number of trees for simple-scc")
    p.add_argument("--k", type=int, default=2, help="branching of tree models")
    p.add_argument("--scc-min", type=int, default=5)
    p.add_argument("--scc-max", type=int, default=20)
    p.add_argument("--minimizer-prob", type=float, default=0.5)
    p.add_argument("--min-prob", type=float, default=0.01)
    p.add_argument("--extra-action-geom", type=float, default=0.875)
    p.add_argument("--max-transitions", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="feature CSV for models")
    p.add_argument("models", nargs="+", help="model files, directories or builtin specs")
    p.add_argument("--out", default=None)
    p.add_argument("--no-aggregate", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="run algorithms on models with a per-run timeout")
    p.add_argument("models", nargs="+", help="model files, directories or builtin specs")
    p.add_argument("--algs", default="bvi,ovi,ptvi")
    p.add_argument("--timeout-s", type=float, default=60.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--append", action="store_true", help="append to --out without a second header")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
