"""Robustness of a backend on neighbourhoods of problems it solves.

Filters the primitive suites down to problems the model answers
correctly at k=1, applies each perturbation kind to that solved pool,
and prints Fail@k per row.  A robust model keeps the perturbed rows
near zero; rates well above the solved baseline are robustness
failures, not capability gaps.
"""

import argparse
import os
import sys
import time

from sift.cli import build_model
from sift.metrics import fail_at_k, summary_table, write_records
from sift.model import DecodeParams
from sift.problemgen import (
    PERTURB_KINDS,
    perturb_suite,
    primitives_suite,
    successful_pool,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="faulty:p=0.3", help="backend selector")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=200, help="problems per template")
    parser.add_argument("--coeff-range", default="1:100", metavar="LO:HI")
    parser.add_argument("--k", default="1,10,50", help="comma-separated k values")
    parser.add_argument("--beam", type=int, default=50)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", help="directory for per-row record files")
    args = parser.parse_args(argv)

    lo, hi = (int(part) for part in args.coeff_range.split(":"))
    k_list = [int(part) for part in args.k.split(",") if part]
    model = build_model(args.model, run_seed=args.seed, beam=args.beam)
    params = DecodeParams(k=max(k_list), beam=max(args.beam, max(k_list)))

    suites = primitives_suite((lo, hi), args.n, args.seed)
    rows = {}
    solved = []
    t0 = time.monotonic()
    for template, cases in suites.items():
        result = fail_at_k(
            [c.problem for c in cases], model, params, k_list,
            run_seed=args.seed, workers=args.workers,
        )
        rows[template] = result.rates
        kept = successful_pool(cases, model, params, run_seed=args.seed)
        solved += kept
        print(f"{template}: {len(kept)}/{len(cases)} solved at k=1", file=sys.stderr)

    if not solved:
        print("model solves nothing; no neighbourhood to perturb", file=sys.stderr)
        return 1
    for kind in PERTURB_KINDS:
        shifted = perturb_suite(solved, kind, args.seed)
        result = fail_at_k(
            [c.problem for c in shifted], model, params, k_list,
            run_seed=args.seed, workers=args.workers,
        )
        rows[f"solved+{kind}"] = result.rates
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_records(
                os.path.join(args.out, f"solved+{kind}.records"),
                result.records, result.rates,
                {"row": f"solved+{kind}", "model": args.model, "seed": args.seed},
            )

    print(summary_table(rows))
    print(f"{len(solved)} solved problems perturbed, "
          f"{time.monotonic() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
