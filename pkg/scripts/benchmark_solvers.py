#!/usr/bin/env python3
"""Benchmark the three solvers on small seeded networks where the
exhaustive optimum is known: hit rate against the global optimum and
wall time per run.

Usage:
    python scripts/benchmark_solvers.py [--runs N] [--sweeps S]
                                        [--restarts R] [--seed S0]
"""

import argparse
import sys
import time

from heatfair import (
    AnnealConfig,
    DistanceRule,
    build_qubo,
    compute_weights,
    default_penalties,
    generate_ring,
    generate_tree,
    solve_anneal,
    solve_exhaustive,
    solve_heuristic,
    synthetic_demands,
)


def build_cases(seed: int):
    rule = DistanceRule(kind="uniform", low=0.5, high=2.0)
    cases = []
    for i, n in enumerate((5, 6, 7, 8)):
        for topo in (
            generate_ring(n, chords=i % 3, rule=rule, seed=seed + i),
            generate_tree(n, branching=2 + i % 2, rule=rule, seed=seed + i),
        ):
            demands = synthetic_demands(n, timesteps=48, seed=seed + 50 + i)
            cases.append((topo, compute_weights(demands)))
    return cases


def main() -> int:
    parser = argparse.ArgumentParser(
        description="solver hit rates against the exhaustive optimum"
    )
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--sweeps", type=int, default=2000)
    parser.add_argument("--restarts", type=int, default=8)
    parser.add_argument("--seed", type=int, default=7000)
    args = parser.parse_args()

    cases = build_cases(args.seed)
    hits = {"anneal": 0, "heuristic": 0}
    spent = {"exhaustive": 0.0, "anneal": 0.0, "heuristic": 0.0}
    truths = {}
    for run in range(args.runs):
        topo, weights = cases[run % len(cases)]
        k = (run % 3) + 1
        cfg = default_penalties(topo, weights, k)
        q = build_qubo(topo, weights, k, cfg)
        key = (run % len(cases), k)
        if key not in truths:
            started = time.monotonic()
            truths[key] = solve_exhaustive(q).energy
            spent["exhaustive"] += time.monotonic() - started
        truth = truths[key]
        tol = 1e-9 * max(1.0, abs(truth))
        seed = args.seed + run

        started = time.monotonic()
        a = solve_anneal(
            q, AnnealConfig(sweeps=args.sweeps, restarts=args.restarts, seed=seed)
        )
        spent["anneal"] += time.monotonic() - started
        hits["anneal"] += a.energy <= truth + tol

        started = time.monotonic()
        h = solve_heuristic(
            topo, weights, k, cfg, seed=seed, restarts=args.restarts, qubo=q
        )
        spent["heuristic"] += time.monotonic() - started
        hits["heuristic"] += h.energy <= truth + tol

    print(f"{args.runs} runs over {len(cases)} networks, k in 1..3")
    print(f"exhaustive ground truths: {len(truths)} solves, {spent['exhaustive']:.2f}s")
    for name in ("anneal", "heuristic"):
        print(
            f"{name:>9}: {hits[name]}/{args.runs} optimal, "
            f"{spent[name] / args.runs * 1000:.1f} ms/run"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
