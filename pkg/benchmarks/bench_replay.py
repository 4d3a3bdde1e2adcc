"""Throughput comparison of the two frozen-replay backends.

Runs the same deficit-schedule replays through the compiled extension and
the pure-Python twin and prints steps/second for each. Invoke from the
repository root:

    python3 benchmarks/bench_replay.py [--steps N] [--repeats N]
"""

import argparse
import random
import time

from edgedispatch.ledger import REPLAY_BACKEND, replay_frozen

CASES = {
    "3 destinations": 3,
    "8 destinations": 8,
    "16 destinations": 16,
}


def best_rate(weights, steps, repeats, force_pure):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        replay_frozen(weights, steps, force_pure=force_pure)
        best = min(best, time.perf_counter() - start)
    return steps / best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200_000, help="steps per replay")
    parser.add_argument("--repeats", type=int, default=3, help="take the best of N")
    parser.add_argument("--seed", type=int, default=20260822)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    print(f"active backend: {REPLAY_BACKEND}; {args.steps} steps, best of {args.repeats}")
    if REPLAY_BACKEND != "compiled":
        print("note: compiled extension not loaded, both columns run pure Python")
    header = f"{'case':<18} {'compiled steps/s':>18} {'pure steps/s':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for label, k in CASES.items():
        weights = [rng.randint(1000, 50_000) for _ in range(k)]
        fast = best_rate(weights, args.steps, args.repeats, force_pure=False)
        pure = best_rate(weights, args.steps, args.repeats, force_pure=True)
        print(f"{label:<18} {fast:>18,.0f} {pure:>14,.0f} {fast / pure:>8.1f}x")

        # both paths must agree before their speed means anything
        a = replay_frozen(weights, 10_000)
        b = replay_frozen(weights, 10_000, force_pure=True)
        assert (a.counts, a.deficits) == (b.counts, b.deficits), label


if __name__ == "__main__":
    main()
