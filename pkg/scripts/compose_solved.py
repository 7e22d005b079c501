"""Compositionality falloff: sums of individually solved primitives.

Builds the exponent pool, keeps the members the model integrates at
k=1, then measures Fail@k on sums of 2..4 pool members.  Every summand
is solvable by construction, so any failure is a failure to compose.
"""

import argparse
import os
import sys
import time

from sift.cli import build_model
from sift.metrics import fail_at_k, summary_table, write_records
from sift.model import DecodeParams
from sift.problemgen import composition_suite, exponent_pool, successful_pool


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default="faulty:p=0.3", help="backend selector")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=300, help="sums per arity")
    parser.add_argument("--exponent-range", default="1:100", metavar="LO:HI")
    parser.add_argument("--k", default="1,10,50", help="comma-separated k values")
    parser.add_argument("--beam", type=int, default=50)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", help="directory for per-row record files")
    args = parser.parse_args(argv)

    lo, hi = (int(part) for part in args.exponent_range.split(":"))
    k_list = [int(part) for part in args.k.split(",") if part]
    model = build_model(args.model, run_seed=args.seed, beam=args.beam)
    params = DecodeParams(k=max(k_list), beam=max(args.beam, max(k_list)))

    t0 = time.monotonic()
    pool = exponent_pool((lo, hi))
    solved = successful_pool(pool, model, params, run_seed=args.seed)
    print(f"pool: {len(solved)}/{len(pool)} solved at k=1", file=sys.stderr)
    if len(solved) < 2:
        print("not enough solved pool members to compose", file=sys.stderr)
        return 1

    rows = {}
    baseline = fail_at_k(
        [c.problem for c in solved], model, params, k_list,
        run_seed=args.seed, workers=args.workers,
    )
    rows["arity1 (pool)"] = baseline.rates
    for arity in (2, 3, 4):
        cases = composition_suite(solved, arity, args.n, args.seed)
        result = fail_at_k(
            [c.problem for c in cases], model, params, k_list,
            run_seed=args.seed, workers=args.workers,
        )
        rows[f"arity{arity}"] = result.rates
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            write_records(
                os.path.join(args.out, f"arity{arity}.records"),
                result.records, result.rates,
                {"row": f"arity{arity}", "model": args.model, "seed": args.seed},
            )

    print(summary_table(rows))
    print(f"{time.monotonic() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
