"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--threads 1]

Each kernel runs on both backends with the same inputs; results must agree
and the table reports the best wall time of each.
"""
import argparse
import time

import numpy as np

from coarseforge import _fallback
from coarseforge.generators import cayley_ball, cycle_graph, free_group, random_tree
from coarseforge.rng import XorShift64Star

try:
    from coarseforge import _core
except ImportError:  # pragma: no cover
    _core = None


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases():
    yield "tree(80)", random_tree(80, 1)
    yield "cycle(60)", cycle_graph(60)
    yield "F2 ball r3", cayley_ball(free_group(2, 3)).graph


def kernels(g, threads):
    args = g._kernel_args()
    D = g.dist
    NX = g.next_hop_table()
    rng = XorShift64Star(3)
    triples = np.array([sorted(rng.sample(g.n, 3)) for _ in range(2000)], dtype=np.int32)
    quads = np.array([sorted(rng.sample(g.n, 4)) for _ in range(20000)], dtype=np.int32)
    targets = np.arange(g.n, dtype=np.int32)
    yield "all_pairs", lambda m: m.all_pairs(*args, threads)
    yield "next_hop", lambda m: m.next_hop(*args, D, targets, threads)
    yield "thin_exact", lambda m: m.thin_exact(D, NX, threads)
    yield "thin_triples", lambda m: m.thin_triples(D, NX, triples, threads)
    if g.n <= 130:
        yield "four_point_exact", lambda m: m.four_point_exact(D, threads)
    yield "four_point_quads", lambda m: m.four_point_quads(D, quads, threads)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core not built; run pip install -e . --no-build-isolation")
    print(f"{'graph':<12} {'kernel':<18} {'compiled s':>11} {'fallback s':>11} {'speedup':>8}  agree")
    for name, g in cases():
        for kname, fn in kernels(g, a.threads):
            tc, rc = best_of(lambda: fn(_core), a.repeat)
            tf, rf = best_of(lambda: fn(_fallback), 1)
            print(f"{name:<12} {kname:<18} {tc:11.4f} {tf:11.4f} {tf / max(tc, 1e-9):8.1f}  {same(rc, rf)}")


if __name__ == "__main__":
    main()
