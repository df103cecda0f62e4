#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the three hot paths (index build, top-50 queries, span argmax) in a
fresh subprocess per backend (the backend is chosen at import time) and
prints a comparison table. Results are also checked for equality across
backends, so the benchmark doubles as a parity smoke test.

Usage: python3 benchmarks/bench_kernels.py [--docs 5000] [--queries 500] [--spans 2000]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_lane(pure: bool, args) -> dict:
    env = dict(os.environ)
    if pure:
        env["HOPCHECK_PURE_PYTHON"] = "1"
    else:
        env.pop("HOPCHECK_PURE_PYTHON", None)
    cmd = [sys.executable, os.path.abspath(__file__), "--lane",
           "--docs", str(args.docs), "--queries", str(args.queries),
           "--spans", str(args.spans)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def lane_main(args) -> None:
    import random

    import numpy as np

    from hopcheck import kernels
    from hopcheck.scorer import best_span
    from hopcheck.tfidf import build_index, top_k

    rng = random.Random(13)
    vocab = [f"term{v}" for v in range(4000)]
    corpus = [(f"p{i}", " ".join(rng.choices(vocab, k=40))) for i in range(args.docs)]

    t0 = time.perf_counter()
    index = build_index(corpus, 1 << 24)
    build_s = time.perf_counter() - t0

    queries = [" ".join(rng.choices(vocab, k=6)) for _ in range(args.queries)]
    t0 = time.perf_counter()
    top1 = [top_k(index, q, 50)[0] for q in queries]
    query_s = time.perf_counter() - t0

    nrng = np.random.default_rng(13)
    spans = []
    t_span = 0.0
    for _ in range(args.spans):
        n = int(nrng.integers(2, 301))
        p_start, p_end = nrng.random(n), nrng.random(n)
        t0 = time.perf_counter()
        spans.append(best_span(p_start, p_end, 0, n - 1))
        t_span += time.perf_counter() - t0

    import zlib

    print(json.dumps({
        "backend": kernels.BACKEND,
        "build_s": build_s,
        "query_s": query_s,
        "span_s": t_span,
        "top1_digest": zlib.crc32(json.dumps(top1).encode("utf-8")),
        "span_digest": zlib.crc32(json.dumps(spans).encode("utf-8")),
    }))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=5000)
    parser.add_argument("--queries", type=int, default=500)
    parser.add_argument("--spans", type=int, default=2000)
    parser.add_argument("--lane", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.lane:
        lane_main(args)
        return

    lanes = {}
    for pure in (False, True):
        result = run_lane(pure, args)
        lanes[result["backend"]] = result
    if "compiled" not in lanes:
        print("note: compiled extension unavailable, both lanes ran pure Python")

    print(f"\n{args.docs} docs, {args.queries} top-50 queries, {args.spans} span argmaxes\n")
    print(f"{'stage':<14}" + "".join(f"{name:>12}" for name in lanes))
    for stage, key in (("index build", "build_s"), ("queries", "query_s"), ("span argmax", "span_s")):
        row = f"{stage:<14}"
        for result in lanes.values():
            row += f"{result[key]:>11.3f}s"
        print(row)
    if len(lanes) == 2:
        compiled, pure = lanes.get("compiled"), lanes.get("python")
        if compiled and pure:
            for key, label in (("build_s", "build"), ("query_s", "queries"), ("span_s", "spans")):
                print(f"speedup {label}: {pure[key] / compiled[key]:.2f}x")
            same = (compiled["top1_digest"] == pure["top1_digest"]
                    and compiled["span_digest"] == pure["span_digest"])
            print(f"results identical across backends: {same}")
            if not same:
                raise SystemExit("backend results diverged")


if __name__ == "__main__":
    main()
