#!/usr/bin/env python3
"""Randomized agreement sweep: simulation check vs brute-force containment.

Generates seeded pairs of small deterministic models with a shared
interface (the same generator the acceptance suite uses), decides
candidate-simulates-reference with the production checker, and re-decides
it by exhaustive depth-bounded trace exploration.  Reports the verdict
distribution and any disagreement, which would indicate a checker bug.
"""

import argparse
import sys
import time
from collections import Counter
from pathlib import Path

# the pair generator lives with the test helpers on purpose: the acceptance
# suite and this sweep must draw from the same distribution
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from helpers import random_model_pair, trace_containment  # noqa: E402

from dfcompat import (  # noqa: E402
    Domain,
    build_step,
    flatten_and_validate,
    simulates,
    unfold_to_ts,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", "--count", type=int, default=200,
                    help="number of generated pairs (default 200)")
    ap.add_argument("--seed-base", type=int, default=0)
    ap.add_argument("--depth", type=int, default=6,
                    help="trace depth for the brute-force oracle")
    args = ap.parse_args(argv)

    tally: Counter[str] = Counter()
    disagreements = []
    started = time.perf_counter()
    for i in range(args.count):
        seed = args.seed_base + i
        model_a, model_b = random_model_pair(seed)
        flat_a = flatten_and_validate(model_a)
        flat_b = flatten_and_validate(model_b)
        dom = Domain(flat_b.input_domains())
        ts_a = unfold_to_ts(build_step(flat_a))
        ts_b = unfold_to_ts(build_step(flat_b))
        got = simulates(ts_a, ts_b, dom).holds
        want = trace_containment(ts_a, ts_b, dom, args.depth)
        tally["holds" if got else "fails"] += 1
        if got != want:
            disagreements.append((seed, got, want))
    elapsed = time.perf_counter() - started

    print(f"{args.count} pairs in {elapsed:.2f}s "
          f"(seeds {args.seed_base}..{args.seed_base + args.count - 1})")
    print(f"  simulation holds: {tally['holds']}")
    print(f"  simulation fails: {tally['fails']}")
    if disagreements:
        print(f"  DISAGREEMENTS: {len(disagreements)}")
        for seed, got, want in disagreements[:10]:
            print(f"    seed {seed}: checker={got} oracle={want}")
        return 1
    print("  oracle agreement: 100%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
