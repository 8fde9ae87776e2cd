"""Time the compiled kernels against the pure numpy fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--points M] [--poles n] [--repeat R]``
"""

import argparse
import timeit

import numpy as np

from multihardy import _kernels_py

try:
    from multihardy import _kernels
except ImportError:  # extension not built
    _kernels = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--poles", type=int, default=4)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    x = rng.standard_normal((args.points, args.dim))
    poles = rng.standard_normal((args.poles, args.dim))
    exps = rng.uniform(-1.5, 1.5, args.poles)
    cases = {
        "pairwise_potential": lambda mod: mod.pairwise_potential(x, poles, 0.01),
        "sum_inverse_square": lambda mod: mod.sum_inverse_square(x, poles, 0.01),
        "power_product": lambda mod: mod.power_product(x, poles, exps),
    }
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{args.points} points, {args.poles} poles, dim {args.dim}, best of {args.repeat}")
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, call in cases.items():
        times = {b: min(timeit.repeat(lambda: call(m), number=1, repeat=args.repeat)) for b, m in backends.items()}
        speed = f"{times['python'] / times['cython']:>9.1f}x" if "cython" in times else ""
        print(f"{name:<20}" + "".join(f"{1e3 * t:>10.1f}ms" for t in times.values()) + speed)


if __name__ == "__main__":
    main()
