"""Failure-rate metrics over candidate lists.

The unit indicator m is 0 when any of the top-k candidates verifies as
an antiderivative of the problem and 1 otherwise; the headline metric
is the mean of m over a suite.  Verification is lazy: candidates are
checked in rank order and checking stops at the first success, which
cannot change any reported rate because verdicts are deterministic.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .calculus import EquivConfig, Verdict, verify_integral
from .expr import Expr, parse_infix, to_infix, to_prefix
from .model import CandidateList, DecodeParams, Integrator, TokenSeq
from .util import derive_seed


class ScoringUnsupported(Exception):
    """The backend cannot score, so no search-vs-model report."""


@dataclass(frozen=True)
class EvalRecord:
    """One problem's evaluation: verdicts for the checked prefix of the
    candidate list and the failure indicator per k."""

    index: int
    problem: Expr
    candidates: CandidateList
    verdicts: tuple[Verdict, ...]
    m_by_k: dict[int, int]
    first_correct_rank: int | None
    seconds: float

    def to_json(self) -> dict:
        # wall times stay off disk: files from identical runs must be
        # byte-identical, and elapsed seconds never are
        return {
            "index": self.index,
            "problem": to_infix(self.problem),
            "prefix": to_prefix(self.problem),
            "candidates": [list(c) for c in self.candidates.candidates],
            "scores": list(self.candidates.scores) if self.candidates.scores else None,
            "verdicts": [
                {"status": v.status, "rank": v.candidate_rank} for v in self.verdicts
            ],
            "m": {str(k): m for k, m in sorted(self.m_by_k.items())},
            "first_correct_rank": self.first_correct_rank,
        }


def _evaluate(
    problem: Expr,
    candidates: CandidateList,
    k_list: Sequence[int],
    cfg: EquivConfig,
    strict_timeout: bool,
    early_stop: bool = True,
) -> tuple[dict[int, int], tuple[Verdict, ...], int | None, float]:
    start = time.monotonic()
    k_max = max(k_list)
    verdicts: list[Verdict] = []
    first_correct: int | None = None
    for rank, tokens in enumerate(candidates.candidates[:k_max], start=1):
        v = verify_integral(problem, tokens, cfg, rank=rank, strict_timeout=strict_timeout)
        verdicts.append(v)
        if v.counts_as_success and first_correct is None:
            first_correct = rank
            if early_stop:
                break
    m_by_k = {
        k: 0 if (first_correct is not None and first_correct <= k) else 1
        for k in k_list
    }
    return m_by_k, tuple(verdicts), first_correct, time.monotonic() - start


def failure_indicator(
    problem: Expr,
    candidates: CandidateList,
    k: int,
    cfg: EquivConfig | None = None,
    strict_timeout: bool = False,
) -> int:
    """0 if some candidate within the top k verifies, else 1.

    An empty candidate list is a failure.  Timeouts count as success
    unless strict_timeout is set.
    """
    m_by_k, _, _, _ = _evaluate(
        problem, candidates, [k], cfg or EquivConfig(), strict_timeout
    )
    return m_by_k[k]


@dataclass(frozen=True)
class FailAtKResult:
    rates: dict[int, float]
    records: tuple[EvalRecord, ...]
    total_seconds: float
    worst_case_seconds: float


def fail_at_k(
    problems: Sequence[Expr],
    integrator: Integrator,
    params: DecodeParams,
    k_list: Sequence[int],
    cfg: EquivConfig | None = None,
    run_seed: int = 0,
    strict_timeout: bool = False,
    workers: int = 1,
    early_stop: bool = True,
) -> FailAtKResult:
    """Fail@k for every k in k_list over a problem list.

    Each problem gets one propose call at k = max(k_list) and a
    derived equivalence seed, so results do not depend on worker count
    or evaluation order.  The worst-case bound is k * budget * N.
    """
    cfg = cfg or EquivConfig()
    k_list = sorted(set(k_list))
    k_max = k_list[-1]
    call = DecodeParams(
        k=k_max,
        beam=max(params.beam, k_max),
        strategy=params.strategy,
        temperature=params.temperature,
    )
    start = time.monotonic()

    def one(index: int) -> EvalRecord:
        problem = problems[index]
        candidates = integrator.propose(problem, call)
        per_problem = cfg.with_seed(derive_seed("equiv", run_seed, cfg.seed, index))
        m_by_k, verdicts, first, seconds = _evaluate(
            problem, candidates, k_list, per_problem, strict_timeout, early_stop
        )
        return EvalRecord(
            index, problem, candidates, verdicts, m_by_k, first, seconds
        )

    indices = range(len(problems))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, indices))
    else:
        records = [one(i) for i in indices]

    n = max(len(problems), 1)
    rates = {
        k: sum(r.m_by_k[k] for r in records) / n for k in k_list
    }
    return FailAtKResult(
        rates=rates,
        records=tuple(records),
        total_seconds=time.monotonic() - start,
        worst_case_seconds=k_max * cfg.per_candidate_budget * len(problems),
    )


# --------------------------------------------------------------------------
# search-vs-model report


@dataclass(frozen=True)
class SearchReport:
    """Whether failures are the search's fault or the model's.

    unresolved@k is the fraction of k-failures where the true answer
    scores strictly below the k-th ranked candidate: a perfect search
    over the model's own distribution would still have missed it.
    """

    n: int
    n_failures: dict[int, int]
    unresolved: dict[int, float]
    p_at_1: float
    p_at_k_max: float
    mean_mass: float
    mean_mass_failures: float | None
    mean_mass_successes: float | None
    first_correct_ranks: tuple[int | None, ...]

    def render(self) -> str:
        lines = ["search vs model"]
        lines.append(f"  problems            {self.n}")
        lines.append(f"  mean p@1            {self.p_at_1:.6f}")
        lines.append(f"  mean p@k_max        {self.p_at_k_max:.6f}")
        lines.append(f"  mean candidate mass {self.mean_mass:.6f}")
        if self.mean_mass_failures is not None:
            lines.append(f"    over failures     {self.mean_mass_failures:.6f}")
        if self.mean_mass_successes is not None:
            lines.append(f"    over successes    {self.mean_mass_successes:.6f}")
        for k in sorted(self.unresolved):
            lines.append(
                f"  unresolved@{k:<2}       {self.unresolved[k]:.6f}"
                f"  ({self.n_failures[k]} failures)"
            )
        return "\n".join(lines)


def search_vs_model_report(
    records: Sequence[EvalRecord],
    integrator: Integrator,
    truths: Sequence[Expr],
    k_list: Sequence[int],
) -> SearchReport:
    """Attribute failures to search or model using candidate scores.

    Scores come from the recorded candidate lists when present and from
    integrator.score otherwise; the true answer is always scored via
    integrator.score.  Raises ScoringUnsupported when the backend cannot
    score something needed.
    """
    if len(records) != len(truths):
        raise ValueError("need one ground truth per record")
    k_list = sorted(set(k_list))

    def score_of(problem: Expr, tokens: TokenSeq) -> float:
        s = integrator.score(problem, tokens)
        if s is None:
            raise ScoringUnsupported(f"backend cannot score over {to_infix(problem)}")
        return s

    p1: list[float] = []
    pk: list[float] = []
    masses: list[float] = []
    fail_mass: list[float] = []
    ok_mass: list[float] = []
    n_failures = {k: 0 for k in k_list}
    unresolved_counts = {k: 0 for k in k_list}

    for record, truth in zip(records, truths):
        listed = record.candidates
        if listed.scores is not None:
            scores = list(listed.scores)
        else:
            scores = [score_of(record.problem, c) for c in listed.candidates]
        star = score_of(record.problem, tuple(to_prefix(truth)))
        mass = sum(scores)
        masses.append(mass)
        p1.append(scores[0] if scores else 0.0)
        pk.append(scores[min(k_list[-1], len(scores)) - 1] if scores else 0.0)
        failed_any = any(record.m_by_k.get(k, 0) == 1 for k in k_list)
        (fail_mass if failed_any else ok_mass).append(mass)
        for k in k_list:
            if record.m_by_k.get(k) != 1:
                continue
            n_failures[k] += 1
            if not scores:
                unresolved_counts[k] += 1
                continue
            kth = scores[min(k, len(scores)) - 1]
            if star < kth:
                unresolved_counts[k] += 1

    n = len(records)
    unresolved = {
        k: (unresolved_counts[k] / n_failures[k]) if n_failures[k] else 0.0
        for k in k_list
    }
    return SearchReport(
        n=n,
        n_failures=n_failures,
        unresolved=unresolved,
        p_at_1=sum(p1) / n if n else 0.0,
        p_at_k_max=sum(pk) / n if n else 0.0,
        mean_mass=sum(masses) / n if n else 0.0,
        mean_mass_failures=sum(fail_mass) / len(fail_mass) if fail_mass else None,
        mean_mass_successes=sum(ok_mass) / len(ok_mass) if ok_mass else None,
        first_correct_ranks=tuple(r.first_correct_rank for r in records),
    )


# --------------------------------------------------------------------------
# record files

RECORD_FORMAT = "sift-records-v1"


def write_records(
    path: str,
    records: Iterable[EvalRecord],
    rates: dict[int, float] | None = None,
    meta: dict | None = None,
) -> None:
    """Newline-delimited JSON: a header object, then one record per line.

    Identical configuration and seed give byte-identical files apart
    from the header timestamp.
    """
    header = {
        "format": RECORD_FORMAT,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if rates is not None:
        header["fail_at_k"] = {str(k): v for k, v in sorted(rates.items())}
    if meta:
        header["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")


def read_records(path: str) -> tuple[dict, list[dict]]:
    """Header dict plus raw record dicts (problems as infix text)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != RECORD_FORMAT:
        raise ValueError(f"{path} is not a record file")
    return header, [json.loads(line) for line in lines[1:]]


def records_to_exprs(raw_records: Sequence[dict]) -> list[Expr]:
    return [parse_infix(r["problem"]) for r in raw_records]


def record_from_json(raw: dict) -> EvalRecord:
    """Rebuild a record written by write_records; inverse of to_json."""
    return EvalRecord(
        index=raw["index"],
        problem=parse_infix(raw["problem"]),
        candidates=CandidateList(
            tuple(tuple(c) for c in raw["candidates"]),
            tuple(raw["scores"]) if raw.get("scores") else None,
        ),
        verdicts=tuple(
            Verdict(v["status"], v.get("elapsed", 0.0), v.get("rank"))
            for v in raw["verdicts"]
        ),
        m_by_k={int(k): m for k, m in raw["m"].items()},
        first_correct_rank=raw.get("first_correct_rank"),
        seconds=raw.get("seconds", 0.0),
    )


def summary_table(rates_by_row: dict[str, dict[int, float]]) -> str:
    """Plain-text Fail@k table, rows sorted by label."""
    ks = sorted({k for rates in rates_by_row.values() for k in rates})
    width = max([len(r) for r in rates_by_row] + [6])
    head = "  ".join([f"{'suite':<{width}}"] + [f"Fail@{k:<4}" for k in ks])
    lines = [head, "-" * len(head)]
    for row in sorted(rates_by_row):
        cells = [f"{rates_by_row[row].get(k, float('nan')):<9.4f}" for k in ks]
        lines.append("  ".join([f"{row:<{width}}"] + cells))
    return "\n".join(lines)
