"""Time the compiled and pure-Python kernel backends on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from sputnik.kernels import available_backends


def cases(rng):
    F2 = rng.random((200, 2))
    F3 = rng.integers(0, 20, size=(200, 3)).astype(float)
    front = F2[np.argsort(F2[:, 0])]
    masks = rng.random((100, 60, 30)) < 0.05
    masks[:, :, 0] = True
    vm_cost = rng.choice([0.4, 1.0], size=30)
    vm_lat = rng.uniform(1, 60, size=30)
    archive = rng.random((40, 2))
    return {
        "nondominated_ranks(200x3)": ("nondominated_ranks", (F3,)),
        "crowding_distance(200x2)": ("crowding_distance", (F2,)),
        "hypervolume_2d(200)": ("hypervolume_2d", (front, np.array([1.1, 1.1]))),
        "evaluate_placements(100x60x30)": ("evaluate_placements", (masks, vm_cost, vm_lat)),
        "dominance_relation(200x2)": ("dominance_relation", (F2, F2[0])),
        "epsilon_archive_update(40)": ("epsilon_archive_update", (archive, np.array([0.3, 0.3]), np.array([0.05, 0.05]))),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only timing the python backend")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")
    for label, (name, argv) in cases(rng).items():
        times = {}
        for b, mod in backends.items():
            fn = getattr(mod, name)
            times[b] = min(timeit.repeat(lambda: fn(*argv), number=args.repeat, repeat=3)) / args.repeat
        cells = "".join(f"{times[b] * 1e6:12.1f}us" for b in backends)
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
        print(f"{label:34s}{cells}  {speed}")


if __name__ == "__main__":
    main()
