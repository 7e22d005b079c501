"""Command-line entry point.

Four subcommands: `suite` generates a named problem family and measures
Fail@k, `sagga` runs the failure search, `verify` re-checks an archive
or a problem file, and `report` renders summaries from record files.
Every run takes an explicit seed; there is no ambient randomness, so
identical invocations write byte-identical outputs apart from the
record-header timestamp.

Flags may also come from a plain-text config file of `key = value`
lines (`--config`); flags given on the command line win.  Exit codes:
0 success, 1 usage error or failed check, 2 backend failure.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys

from . import metrics, oracle, problemgen, sagga
from .calculus import EquivConfig, verify_integral
from .expr import Expr, PrefixError, parse_infix, parse_prefix, to_infix
from .model import (
    CachingModel,
    DecodeParams,
    ExternalModel,
    Integrator,
    ModelError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for backend
    # failures, so convert to our own usage error instead
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# shared flag plumbing


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}")


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected LO:HI")


def _parse_buckets(text: str) -> list[tuple[int, int]]:
    return [_parse_range(part) for part in text.split(",") if part]


def load_config_file(path: str) -> dict[str, str]:
    """`key = value` per line; # comments and blank lines ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    file_values = load_config_file(args.config)
    known = set(vars(args))
    for key, value in file_values.items():
        if key not in known:
            raise UsageError(f"{args.config}: unknown key {key!r}")
        # a flag explicitly on the command line (non-None) wins
        if getattr(args, key, None) is None:
            if value.lower() in ("true", "false"):
                setattr(args, key, value.lower() == "true")
            else:
                setattr(args, key, value)


def build_model(selector: str, run_seed: int, beam: int) -> Integrator:
    """reference | faulty[:k=v,...] | external:cmd=... | external:tcp=host:port.

    faulty options: p, rank, seed, kinds (plus-separated).  A bare
    `external` reads SIFT_MODEL_ADDR or SIFT_MODEL_CMD from the
    environment.
    """
    name, _, rest = selector.partition(":")
    if name == "reference":
        if rest:
            raise UsageError("reference backend takes no options")
        return oracle.ReferenceModel()
    if name == "faulty":
        options = dict(
            part.split("=", 1) for part in rest.split(",") if "=" in part
        ) if rest else {}
        bad = set(options) - {"p", "rank", "seed", "kinds"}
        if bad or (rest and not options):
            raise UsageError(f"bad faulty options {rest!r}")
        spec = oracle.FaultSpec(
            p=float(options.get("p", 0.5)),
            rank_of_correct=int(options.get("rank", 1)),
            kinds=tuple(options["kinds"].split("+"))
            if "kinds" in options
            else oracle.DEFAULT_FAULT_KINDS,
        )
        return oracle.FaultyModel(spec, seed=int(options.get("seed", run_seed)), beam=beam)
    if name == "external":
        if not rest:
            rest_addr = os.environ.get("SIFT_MODEL_ADDR")
            rest_cmd = os.environ.get("SIFT_MODEL_CMD")
            if rest_addr:
                rest = f"tcp={rest_addr}"
            elif rest_cmd:
                rest = f"cmd={rest_cmd}"
            else:
                raise UsageError(
                    "external backend needs cmd=/tcp= or SIFT_MODEL_ADDR/SIFT_MODEL_CMD"
                )
        mode, _, value = rest.partition("=")
        if mode == "cmd":
            return ExternalModel(command=shlex.split(value))
        if mode == "tcp":
            host, _, port = value.rpartition(":")
            if not host or not port.isdigit():
                raise UsageError(f"bad tcp address {value!r}; expected host:port")
            return ExternalModel(address=value)
        raise UsageError(f"bad external mode {mode!r}; expected cmd= or tcp=")
    raise UsageError(f"unknown model backend {name!r}")


def _equiv_config(args: argparse.Namespace) -> EquivConfig:
    cfg = EquivConfig()
    if getattr(args, "budget", None) is not None:
        cfg = EquivConfig(per_candidate_budget=float(args.budget))
    return cfg


# --------------------------------------------------------------------------
# suite


SUITE_FAMILIES = (
    "primitives",
    "perturbed",
    "compositions",
    "extrapolation",
    "random",
)


def _generate_suites(args: argparse.Namespace) -> dict[str, list[Expr]]:
    seed = int(args.seed)
    n = int(args.n)
    family = args.family
    if family.startswith("file:"):
        cases = problemgen.load_problem_file(family[len("file:") :])
        return {"file": [c.problem for c in cases]}
    if family not in SUITE_FAMILIES:
        raise UsageError(
            f"unknown family {family!r}; have {SUITE_FAMILIES} or file:PATH"
        )
    coeff = _parse_range(args.range or "1:100")
    if family == "primitives":
        suites = problemgen.primitives_suite(coeff, n, seed)
        return {name: [c.problem for c in cases] for name, cases in suites.items()}
    if family == "perturbed":
        suites = problemgen.primitives_suite(coeff, n, seed)
        out: dict[str, list[Expr]] = {}
        for name, cases in suites.items():
            for kind in problemgen.PERTURB_KINDS:
                shifted = problemgen.perturb_suite(cases, kind, seed)
                out[f"{name}+{kind}"] = [c.problem for c in shifted]
        return out
    if family == "compositions":
        pool = problemgen.exponent_pool(coeff)
        return {
            f"composition{arity}": [
                c.problem
                for c in problemgen.composition_suite(pool, arity, n, seed)
            ]
            for arity in (2, 3, 4)
        }
    if family == "extrapolation":
        buckets = _parse_buckets(args.buckets or "1:100,101:1000")
        suites = problemgen.integer_extrapolation_suite(
            args.template or "cos", buckets, n, seed
        )
        return {name: [c.problem for c in cases] for name, cases in suites.items()}
    # random
    return {
        f"random{args.ops}": [
            c.problem
            for c in problemgen.random_tree_suite(int(args.ops or 10), n, seed)
        ]
    }


def _cmd_suite(args: argparse.Namespace) -> int:
    seed = int(args.seed)
    k_list = _parse_int_list(args.k or "1")
    params = DecodeParams(k=max(k_list), beam=max(int(args.beam or 10), max(k_list)))
    model = build_model(args.model or "reference", seed, params.beam)
    if args.cache:
        model = CachingModel(model)
    cfg = _equiv_config(args)
    suites = _generate_suites(args)

    rates_by_row: dict[str, dict[int, float]] = {}
    for name, problems in suites.items():
        result = metrics.fail_at_k(
            problems,
            model,
            params,
            k_list,
            cfg,
            run_seed=seed,
            strict_timeout=bool(args.strict_timeout),
            workers=int(args.workers or 1),
        )
        rates_by_row[name] = result.rates
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            safe = name.replace("/", "_").replace(" ", "")
            metrics.write_records(
                os.path.join(args.out, f"{safe}.records"),
                result.records,
                result.rates,
                meta={"family": name, "seed": seed, "model": args.model or "reference"},
            )
    print(metrics.summary_table(rates_by_row))
    return 0


# --------------------------------------------------------------------------
# sagga


def _load_seeds(spec: str) -> list[Expr]:
    if spec.startswith("file:"):
        return [c.problem for c in problemgen.load_problem_file(spec[len("file:") :])]
    return problemgen.seed_set(spec)


def _fitness_spec(args: argparse.Namespace) -> sagga.FitnessSpec:
    variant = args.fitness or "short"
    targets: tuple[Expr, ...] = ()
    if variant == "near_targets":
        if not args.targets:
            raise UsageError("--targets FILE is required for near_targets fitness")
        targets = tuple(
            c.problem for c in problemgen.load_problem_file(args.targets)
        )
    return sagga.FitnessSpec(
        variant=variant,
        eval_k=int(args.eval_k or 1),
        target_length=int(args.target_length) if args.target_length else None,
        targets=targets,
        gate=args.gate or None,
    )


def _cmd_sagga(args: argparse.Namespace) -> int:
    seed = int(args.seed)
    config = sagga.SearchConfig(
        run_seed=seed,
        seed_size=int(args.population or 100),
        generation_size=int(args.children or 1000),
        cluster_count=int(args.clusters or 10),
        fitness_threshold=float(args.threshold or 0.01),
        archive_size=int(args.archive_size or 1000),
        generation_cap=int(args.generations or 50),
        beam=int(args.beam or 10),
        checkpoint_path=args.checkpoint,
        equiv=_equiv_config(args),
    )
    mutation = sagga.CONSTANTS_ONLY if args.constants_only else sagga.MutationConfig(
        value_range=_parse_range(args.mutation_range or "-1000:1000")
    )
    fitness_spec = _fitness_spec(args)
    model = build_model(args.model or "faulty", seed, config.beam)
    if args.cache:
        model = CachingModel(model)
    seeds = _load_seeds(args.seeds or "default")
    resume = None
    if args.resume:
        if not args.checkpoint:
            raise UsageError("--resume needs --checkpoint")
        resume = sagga.load_checkpoint(args.checkpoint, config)

    archive = sagga.run(
        config, mutation, fitness_spec, model, seeds, resume=resume, progress=True
    )
    print(sagga.summarize(archive))
    if args.archive:
        sagga.save_archive(args.archive, archive)
        print(f"archive written to {args.archive}")
    return 2 if archive.status == "aborted" else 0


# --------------------------------------------------------------------------
# verify


def _cmd_verify(args: argparse.Namespace) -> int:
    seed = int(args.seed)
    cfg = _equiv_config(args)
    if bool(args.archive) == bool(args.problems):
        raise UsageError("verify needs exactly one of --archive or --problems")

    if args.archive:
        entries = sagga.load_archive_entries(args.archive)
        bad = 0
        for raw in entries:
            problem = parse_prefix(raw["prefix"])
            equiv = cfg.with_seed(
                sagga.derive_seed("verify", seed, " ".join(raw["prefix"]))
            )
            # verdicts are recorded in rank order; every archived rank
            # failed, so any success now is a mismatch
            for rank, _ in enumerate(raw["verdicts"], start=1):
                tokens = tuple(raw["candidates"][rank - 1])
                v = verify_integral(problem, tokens, equiv, rank=rank)
                if v.counts_as_success:
                    bad += 1
                    print(f"entry {to_infix(problem)}: rank {rank} now verifies")
        total = len(entries)
        pct = 100.0 * (total - bad) / total if total else 100.0
        print(f"{total - bad}/{total} entries re-verified ({pct:.1f}%)")
        return 0 if bad == 0 else 1

    cases = problemgen.load_problem_file(args.problems)
    k_list = _parse_int_list(args.k or "1")
    params = DecodeParams(k=max(k_list), beam=max(int(args.beam or 10), max(k_list)))
    model = build_model(args.model or "reference", seed, params.beam)
    result = metrics.fail_at_k(
        [c.problem for c in cases],
        model,
        params,
        k_list,
        cfg,
        run_seed=seed,
        strict_timeout=bool(args.strict_timeout),
        workers=int(args.workers or 1),
    )
    print(metrics.summary_table({"problems": result.rates}))
    return 0


# --------------------------------------------------------------------------
# report


def _cmd_report(args: argparse.Namespace) -> int:
    rates_by_row: dict[str, dict[int, float]] = {}
    for path in args.records:
        header, raw = metrics.read_records(path)
        label = header.get("meta", {}).get("family") or os.path.basename(path)
        rates_by_row[label] = {
            int(k): v for k, v in header.get("fail_at_k", {}).items()
        }
        if args.search_vs_model:
            records = [metrics.record_from_json(r) for r in raw]
            truths = _truths_for(records, args)
            k_list = sorted({k for r in records for k in r.m_by_k})
            model = build_model(
                args.model or "reference", int(args.seed or 0), int(args.beam or 10)
            )
            report = metrics.search_vs_model_report(records, model, truths, k_list)
            print(f"== {label}")
            print(report.render())
    if any(rates_by_row.values()):
        print(metrics.summary_table(rates_by_row))
    return 0


def _truths_for(records, args) -> list[Expr]:
    if args.truths:
        cases = problemgen.load_problem_file(args.truths)
        truths = [c.truth for c in cases]
        if any(t is None for t in truths) or len(truths) != len(records):
            raise UsageError("--truths must list one problem<TAB>truth per record")
        return truths
    out = []
    for record in records:
        truth = oracle.integrate_reference(record.problem)
        if truth is None:
            raise UsageError(
                f"no ground truth for {to_infix(record.problem)}; pass --truths"
            )
        out.append(truth)
    return out


# --------------------------------------------------------------------------
# wiring


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value file; flags override it")
    sub.add_argument("--seed", help="run seed (required; no ambient randomness)")
    sub.add_argument("--model", help="reference | faulty:p=0.5 | external:cmd=... | external:tcp=host:port")
    sub.add_argument("--beam", help="decode beam width (default 10)")
    sub.add_argument("--budget", help="per-candidate verification budget in seconds")
    sub.add_argument("--strict-timeout", action="store_true", default=None,
                     help="count verification timeouts as failures")
    sub.add_argument("--workers", help="parallel verification workers (default 1)")
    sub.add_argument("--cache", action="store_true", default=None,
                     help="memoize model calls")


def build_parser() -> _Parser:
    parser = _Parser(prog="sift", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    suite = commands.add_parser("suite", help="generate a family and measure Fail@k")
    _add_common(suite)
    suite.add_argument("--family", help=f"{'|'.join(SUITE_FAMILIES)}|file:PATH")
    suite.add_argument("--range", help="coefficient range LO:HI (default 1:100)")
    suite.add_argument("--n", help="problems per family row")
    suite.add_argument("--k", help="comma-separated k values (default 1)")
    suite.add_argument("--template", help="template for extrapolation (default cos)")
    suite.add_argument("--buckets", help="extrapolation ranges LO:HI,LO:HI,...")
    suite.add_argument("--ops", help="operator count for random trees (default 10)")
    suite.add_argument("--out", help="directory for per-family record files")

    search = commands.add_parser("sagga", help="search for an archive of failures")
    _add_common(search)
    search.add_argument("--fitness", help="short | target_length | near_targets")
    search.add_argument("--eval-k", help="k used for the failure indicator (default 1)")
    search.add_argument("--target-length", help="token length target")
    search.add_argument("--targets", help="problem file for near_targets fitness")
    search.add_argument("--gate", help=f"fitness gate: {'|'.join(sorted(sagga.GATES))}")
    search.add_argument("--seeds", help="default|poly|trig|trig-general|file:PATH")
    search.add_argument("--population", help="seed population size (default 100)")
    search.add_argument("--children", help="children per generation (default 1000)")
    search.add_argument("--clusters", help="embedding cluster count (default 10)")
    search.add_argument("--threshold", help="archive fitness threshold (default 0.01)")
    search.add_argument("--archive-size", help="target archive size (default 1000)")
    search.add_argument("--generations", help="generation cap (default 50)")
    search.add_argument("--mutation-range", help="mutation integer range (default -1000:1000)")
    search.add_argument("--constants-only", action="store_true", default=None,
                        help="only redraw literal leaf values")
    search.add_argument("--archive", help="archive output path")
    search.add_argument("--checkpoint", help="resumable checkpoint path")
    search.add_argument("--resume", action="store_true", default=None,
                        help="continue from --checkpoint")

    verify = commands.add_parser("verify", help="re-check an archive or problem file")
    _add_common(verify)
    verify.add_argument("--archive", help="archive file to re-verify")
    verify.add_argument("--problems", help="problem file to evaluate")
    verify.add_argument("--k", help="comma-separated k values (default 1)")

    report = commands.add_parser("report", help="render summaries from record files")
    _add_common(report)
    report.add_argument("records", nargs="+", help="record files")
    report.add_argument("--search-vs-model", action="store_true", default=None,
                        help="attribute failures to search or model via scores")
    report.add_argument("--truths", help="problem file with tab-separated truths")

    return parser


_COMMANDS = {
    "suite": _cmd_suite,
    "sagga": _cmd_sagga,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        if getattr(args, "seed", None) is None and args.command != "report":
            raise UsageError("--seed is required")
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (ModelError, OSError) as err:
        print(f"backend failure: {err}", file=sys.stderr)
        return 2
    except PrefixError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
