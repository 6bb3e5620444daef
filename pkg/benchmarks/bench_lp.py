"""Compare the compiled simplex kernel with the pure Python fallback.

Run from the repository root:

    python benchmarks/bench_lp.py [--repeat 5]

Two workloads: raw kernel calls on random covering LPs of growing size, and a
full optimal-auction run (allocation plus payment integrals) which issues a
few thousand LP solves.
"""
import argparse
import timeit

import numpy as np

from optauction import lp
from optauction.auction import OptimalAuction
from optauction.model import SellerBid
from optauction.verify import draw_types, random_scenario


def random_lp(rng, n, m):
    M = (rng.random((m, n)) < 0.5).astype(float)
    for i in range(m):
        M[i, rng.integers(n)] = 1.0
    u = rng.uniform(1, 10, n)
    D = np.minimum(rng.uniform(0.5, 1.0, m) * (M @ u), M @ u)
    return rng.uniform(0, 5, n), u, M, D


def time_kernel(kernel, problems, repeat):
    def run():
        for h, u, M, D in problems:
            kernel(h, u, M, D, lp.TOLERANCE, None)
    return min(timeit.repeat(run, number=1, repeat=repeat)) / len(problems)


def time_auction(backend, scenario, bids, repeat):
    lp.set_backend(backend)
    # fresh mechanism per run so the payment cache starts empty
    return min(timeit.repeat(lambda: OptimalAuction(scan_steps=64).run(scenario, bids), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not lp.compiled_available():
        raise SystemExit("compiled kernel not built; reinstall without OPTAUCTION_NO_EXT")

    rng = np.random.default_rng(0)
    print(f"{'sellers x items':>16} {'python us':>11} {'compiled us':>12} {'speedup':>8}")
    for n, m in [(4, 2), (8, 4), (16, 8), (32, 12)]:
        problems = [random_lp(rng, n, m) for _ in range(50)]
        tp = time_kernel(lp._python_kernel, problems, args.repeat)
        tc = time_kernel(lp._compiled_kernel, problems, args.repeat)
        print(f"{f'{n} x {m}':>16} {tp * 1e6:11.1f} {tc * 1e6:12.1f} {tp / tc:7.1f}x")

    scenario = random_scenario(np.random.default_rng(1), 5, 4)
    bids = [SellerBid(i, c, q) for i, (c, q) in enumerate(draw_types(scenario, np.random.default_rng(2)), 1)]
    before = lp.BACKEND
    try:
        tp = time_auction("python", scenario, bids, args.repeat)
        tc = time_auction("compiled", scenario, bids, args.repeat)
    finally:
        lp.set_backend(before)
    print(f"\noptimal auction, 5 sellers x 4 items: python {tp * 1e3:.1f} ms, "
          f"compiled {tc * 1e3:.1f} ms, speedup {tp / tc:.1f}x")


if __name__ == "__main__":
    main()
