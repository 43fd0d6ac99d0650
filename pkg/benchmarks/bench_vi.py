"""Compare the compiled and pure-Python value-iteration kernels.

    python3 benchmarks/bench_vi.py [--sizes 5 10 20 40] [--repeat 3]

Each run solves maximal reachability of ``Goal`` on the closed IMC of
``chain_family(n)``, with the same zero and one sets pinned as the solver
uses.  A second table runs random interval MDPs with only the targets pinned,
which takes many more sweeps.
"""

import argparse
import random
import statistics
import timeit

import numpy as np

from cdpta.generators import chain_family, random_interval_row
from cdpta.imc import reduce_to_imc
from cdpta.imdp import Imdp, build_imdp
from cdpta.solver import kernels
from cdpta.solver.engine import ChoiceSystem, exists1, forall0


def random_system(n, seed=7):
    rng = random.Random(seed)
    states = tuple(range(n))
    actions = {s: ("a", "b") for s in states}
    rows = {(s, a): random_interval_row(rng, rng.sample(states, 3)) for s in states for a in ("a", "b")}
    system = ChoiceSystem.from_imdp(Imdp(states, actions, rows, 0)).closed()
    return system, set(range(max(1, n // 50)))


def chain_system(n):
    imc = reduce_to_imc(build_imdp(chain_family(n)))
    system = ChoiceSystem.from_imc(imc).closed()
    return system, system.target_indices(imc.targets_for({"Goal"}))


def prepare(system, targets, pin_qualitative):
    fixed = np.zeros(len(system.states), dtype=np.uint8)
    one = set(targets)
    if pin_qualitative:
        one |= exists1(system, targets)
        fixed[list(forall0(system, targets))] = 1
    fixed[list(one)] = 1
    start = np.zeros(len(system.states))
    start[list(one)] = 1.0
    return system.compile(), fixed, start, len(system.states)


def run_once(kernel, arrays, fixed, start, eps):
    x = start.copy()
    iterations, converged = kernel(*arrays, x, fixed, True, eps, 10**6)
    assert converged
    return x, iterations


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--random-sizes", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--epsilon", type=float, default=1e-9)
    args = ap.parse_args()

    if "cython" not in kernels.BACKENDS:
        print("compiled kernel not built; only the fallback is available")
    names = sorted(kernels.BACKENDS)
    header = f"{'states':>7} {'iters':>6} " + " ".join(f"{b + ' ms':>12}" for b in names)
    header += "  speedup" if len(names) == 2 else ""
    workloads = [("chain_family(n)", True, [(n, *chain_system(n)) for n in args.sizes]),
                 ("random IMDP with n states", False, [(n, *random_system(n)) for n in args.random_sizes])]
    for title, pin, cases in workloads:
        print(f"\n{title}\n{'n':>5} {header}")
        for n, system, targets in cases:
            print(f"{n:>5} {bench(names, system, targets, pin, args)}")


def bench(names, system, targets, pin, args):
    arrays, fixed, start, size = prepare(system, targets, pin)
    results, times = {}, {}
    for b in names:
        kernel = kernels.BACKENDS[b]
        results[b] = run_once(kernel, arrays, fixed, start, args.epsilon)
        runs = timeit.repeat(lambda: run_once(kernel, arrays, fixed, start, args.epsilon),
                             number=1, repeat=args.repeat)
        times[b] = statistics.median(runs) * 1000
    if len(names) == 2:
        assert np.array_equal(results["cython"][0], results["python"][0])
    line = f"{size:>7} {results[names[0]][1]:>6} " + " ".join(f"{times[b]:>12.2f}" for b in names)
    if len(names) == 2:
        line += f"  {times['python'] / times['cython']:>6.1f}x"
    return line


if __name__ == "__main__":
    main()
