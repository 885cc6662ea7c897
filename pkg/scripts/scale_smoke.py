"""Large-vocabulary timing smoke: one EM iteration at full scale, in memory.

Builds two synthetic 200k-word embedding sides (noisy rotated permutation,
closed under the rank restriction), runs a single restricted EM iteration,
and writes phase timings to a JSON report.

    python3 scripts/scale_smoke.py --report /tmp/scale.json
"""

import argparse
import json
import sys
import time

import numpy as np

from lexmatch.candidates import build_candidates
from lexmatch.em import EmConfig, ModelParams, m_step, procrustes, run_em
from lexmatch.embeddings import EmbeddingMatrix
from lexmatch.seeds import PROVENANCE_TSV, SeedDictionary


def unit_columns(x):
    return x / np.linalg.norm(x, axis=0, keepdims=True)


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200_000, help="words per side")
    ap.add_argument("--top", type=int, default=40_000, help="rank restriction")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--noise", type=float, default=0.01)
    ap.add_argument("--n-seeds", type=int, default=100)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--rng-seed", type=int, default=42)
    ap.add_argument("--report", default=None, help="write timings JSON here")
    args = ap.parse_args()

    rng = np.random.default_rng(args.rng_seed)
    d, n, top = args.dim, args.n, args.top
    timings = {}

    t0 = time.perf_counter()
    S = EmbeddingMatrix(d, unit_columns(rng.standard_normal((d, n))))
    perm = np.concatenate([rng.permutation(top), top + rng.permutation(n - top)])
    R = random_orthogonal(d, rng)
    T = EmbeddingMatrix(
        d, unit_columns(R @ S.data[:, perm] + args.noise * rng.standard_normal((d, n)))
    )
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    seed_src = rng.choice(top, size=args.n_seeds, replace=False)
    seed = SeedDictionary(
        pairs=[(int(j), int(inv[j])) for j in sorted(seed_src)],
        provenance=PROVENANCE_TSV,
        n_requested=args.n_seeds,
    )
    timings["generate_s"] = time.perf_counter() - t0

    # phase timings for one iteration, measured on the module functions
    src_idx = np.array([j for j, _ in seed.pairs])
    trg_idx = np.array([i for _, i in seed.pairs])
    t0 = time.perf_counter()
    params = ModelParams(
        procrustes(S.data[:, src_idx], T.data[:, trg_idx]), np.zeros(d)
    )
    timings["init_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_candidates(
        S, T, params, k=args.k, restrict=(top, top), threads=args.threads
    )
    timings["candidates_s"] = time.perf_counter() - t0

    from lexmatch.assignment import solve_sparse_lap

    t0 = time.perf_counter()
    match = solve_sparse_lap(graph)
    timings["matching_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    params = m_step(S, T, match, params)
    timings["m_step_s"] = time.perf_counter() - t0

    # same thing through the public loop, end to end
    config = EmConfig(k=args.k, rank_restrict=(top, top), max_iters=1, threads=args.threads)
    t0 = time.perf_counter()
    _, match2, trace = run_em(S, T, seed, config)
    timings["run_em_one_iter_s"] = time.perf_counter() - t0

    payload = {
        "n": n,
        "top": top,
        "dim": d,
        "k": args.k,
        "threads": args.threads,
        "candidate_edges": graph.n_edges,
        "matched_pairs": len(match2),
        "timings": {key: round(val, 3) for key, val in timings.items()},
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
