"""Sweep the target-length fitness over several requested sizes.

For each target, runs the failure search with fitness 1/|len - target|
and an admission threshold scaled so the archive only accepts problems
within 25% of the requested token length.  Prints the growth curve per
generation and the final length statistics, and optionally saves each
archive.
"""

import argparse
import os
import sys
import time

from sift.cli import build_model
from sift.expr import metrics
from sift.problemgen import seed_set
from sift.sagga import (
    FitnessSpec,
    MutationConfig,
    SearchConfig,
    run,
    save_archive,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="faulty:p=0.5", help="backend selector")
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--targets", default="10,20,40", help="token lengths to aim at")
    parser.add_argument("--seeds", default="default", help="named seed set")
    parser.add_argument("--archive-size", type=int, default=300)
    parser.add_argument("--generations", type=int, default=40)
    parser.add_argument("--beam", type=int, default=10)
    parser.add_argument("--out", help="directory for per-target archive files")
    args = parser.parse_args(argv)

    targets = [int(part) for part in args.targets.split(",") if part]
    model = build_model(args.model, run_seed=args.seed, beam=args.beam)
    seeds = seed_set(args.seeds)

    for target in targets:
        # fitness 1/|len - target| clears tau exactly when the length is
        # within 25% of the target, so the threshold is the tolerance
        config = SearchConfig(
            run_seed=args.seed,
            archive_size=args.archive_size,
            generation_cap=args.generations,
            fitness_threshold=1 / (0.25 * target),
            beam=args.beam,
        )
        spec = FitnessSpec(variant="target_length", target_length=target)
        t0 = time.monotonic()
        archive = run(config, MutationConfig(), spec, model, seeds)
        elapsed = time.monotonic() - t0

        print(f"== target {target} ({archive.status}, {elapsed:.1f}s)")
        print("gen  children  archived  total  mean_len")
        for g in archive.growth:
            mean = f"{g.mean_archived_token_len:.1f}" if g.mean_archived_token_len else "-"
            print(f"{g.generation:>3}  {g.children:>8}  {g.archived:>8}  "
                  f"{g.archive_total:>5}  {mean:>8}")
        lens = [metrics(e.problem).token_len for e in archive.entries]
        if lens:
            mean = sum(lens) / len(lens)
            print(f"final: {len(lens)} entries, mean token length {mean:.1f} "
                  f"(asked for {target}), min {min(lens)}, max {max(lens)}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, f"target{target}.archive")
            save_archive(path, archive)
            print(f"archive written to {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
