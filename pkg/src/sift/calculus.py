"""Differentiation and numeric equivalence checking.

A candidate antiderivative is accepted when its symbolic derivative
agrees with the problem numerically at a fixed number of seeded sample
points.  Equality of real functions is undecidable in general; seeded
sampling with tight tolerances is the decision procedure here, and it
is deterministic for a given configuration.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace

from .expr import (
    Add,
    DivisionByZero,
    DomainError,
    Expr,
    Fn,
    IntegerLit,
    Mul,
    Pow,
    PrefixError,
    RationalLit,
    Var,
    as_fraction,
    canonicalize,
    eval_at,
    from_fraction,
    parse_prefix,
)

CORRECT = "correct"
INCORRECT = "incorrect"
TIMEOUT_COUNTED_CORRECT = "timeout_counted_correct"
UNPARSEABLE = "unparseable"


class InsufficientDomain(Exception):
    """Too few points where both expressions are defined; callers treat
    this as 'not equivalent'."""


class _DeadlineExceeded(Exception):
    pass


@dataclass(frozen=True)
class EquivConfig:
    """Sampling policy for numeric equivalence and verification."""

    sample_count: int = 12
    rel_tolerance: float = 1e-9
    abs_tolerance: float = 1e-12
    domain: tuple[float, float] = (-3.0, 3.0)
    max_retries_per_point: int = 20
    per_candidate_budget: float = 1.0
    seed: int = 0

    def with_seed(self, seed: int) -> "EquivConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Verdict:
    status: str
    # wall time is observational, not part of a verdict's identity:
    # identical runs must compare equal
    elapsed: float = field(compare=False)
    candidate_rank: int | None = None

    @property
    def counts_as_success(self) -> bool:
        return self.status in (CORRECT, TIMEOUT_COUNTED_CORRECT)


# --------------------------------------------------------------------------
# differentiation


def _d(e: Expr) -> Expr:
    match e:
        case IntegerLit(_) | RationalLit(_, _):
            return IntegerLit(0)
        case Var():
            return IntegerLit(1)
        case Add(args):
            return Add(tuple(_d(a) for a in args))
        case Mul(args):
            terms = []
            for i in range(len(args)):
                factors = args[:i] + (_d(args[i]),) + args[i + 1 :]
                terms.append(Mul(factors))
            return Add(tuple(terms))
        case Pow(base, exponent):
            fe = as_fraction(exponent)
            if fe is not None:
                # c * b^(c-1) * b'
                return Mul(
                    (
                        from_fraction(fe),
                        Pow(base, from_fraction(fe - 1)),
                        _d(base),
                    )
                )
            if as_fraction(base) is not None:
                # a^u * ln(a) * u'
                return Mul((Pow(base, exponent), Fn("ln", base), _d(exponent)))
            # b^e * (e' ln(b) + e * b' / b)
            return Mul(
                (
                    Pow(base, exponent),
                    Add(
                        (
                            Mul((_d(exponent), Fn("ln", base))),
                            Mul((exponent, _d(base), Pow(base, IntegerLit(-1)))),
                        )
                    ),
                )
            )
        case Fn(kind, arg):
            da = _d(arg)
            if kind == "sin":
                outer: Expr = Fn("cos", arg)
            elif kind == "cos":
                outer = Mul((IntegerLit(-1), Fn("sin", arg)))
            elif kind == "tan":
                outer = Add((IntegerLit(1), Pow(Fn("tan", arg), IntegerLit(2))))
            elif kind == "exp":
                outer = Fn("exp", arg)
            elif kind == "ln":
                outer = Pow(arg, IntegerLit(-1))
            elif kind == "sqrt":
                outer = Mul(
                    (RationalLit(1, 2), Pow(Fn("sqrt", arg), IntegerLit(-1)))
                )
            else:
                raise TypeError(f"unknown function kind {kind!r}")
            return Mul((outer, da))
        case _:
            raise TypeError(f"not an Expr: {e!r}")


def differentiate(e: Expr) -> Expr:
    """Symbolic derivative with respect to x, canonicalized."""
    return canonicalize(_d(e))


# --------------------------------------------------------------------------
# numeric equivalence


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise _DeadlineExceeded


def numeric_equiv(
    a: Expr, b: Expr, cfg: EquivConfig, deadline: float | None = None
) -> bool:
    """True iff a and b agree at cfg.sample_count seeded points.

    Points where either side leaves its domain are redrawn, up to
    cfg.max_retries_per_point times each; running out of valid points
    raises InsufficientDomain.
    """
    rng = random.Random(cfg.seed)
    lo, hi = cfg.domain
    for _ in range(cfg.sample_count):
        for _attempt in range(cfg.max_retries_per_point):
            _check_deadline(deadline)
            x0 = rng.uniform(lo, hi)
            try:
                va = eval_at(a, x0)
                vb = eval_at(b, x0)
            except DomainError:
                continue
            tol = cfg.abs_tolerance + cfg.rel_tolerance * max(abs(va), abs(vb))
            if abs(va - vb) > tol:
                return False
            break
        else:
            raise InsufficientDomain(
                f"no valid sample point within {cfg.max_retries_per_point} draws"
            )
    return True


# --------------------------------------------------------------------------
# verification


def verify_integral(
    problem: Expr,
    candidate: Expr | list[str] | tuple[str, ...],
    cfg: EquivConfig | None = None,
    rank: int = 1,
    strict_timeout: bool = False,
) -> Verdict:
    """Check one candidate antiderivative against a problem.

    The candidate may be an Expr or a prefix token stream; a stream that
    fails to parse is Unparseable.  The check differentiates the
    candidate and compares numerically.  Overrunning the per-candidate
    budget counts as correct by default (the generous convention) and as
    incorrect under strict_timeout.  Candidates whose verification blows
    the recursion limit are treated as incorrect: too deep to check is
    not a pass.
    """
    cfg = cfg or EquivConfig()
    start = time.monotonic()
    deadline = start + cfg.per_candidate_budget
    if not isinstance(candidate, Expr):
        try:
            candidate = parse_prefix(candidate)
        except PrefixError:
            return Verdict(UNPARSEABLE, time.monotonic() - start)
    try:
        _check_deadline(deadline)
        derivative = differentiate(candidate)
        _check_deadline(deadline)
        ok = numeric_equiv(derivative, problem, cfg, deadline)
    except _DeadlineExceeded:
        status = INCORRECT if strict_timeout else TIMEOUT_COUNTED_CORRECT
        elapsed = time.monotonic() - start
        rank_out = rank if status == TIMEOUT_COUNTED_CORRECT else None
        return Verdict(status, elapsed, rank_out)
    except (InsufficientDomain, DivisionByZero, RecursionError, OverflowError):
        return Verdict(INCORRECT, time.monotonic() - start)
    elapsed = time.monotonic() - start
    if ok:
        return Verdict(CORRECT, elapsed, rank)
    return Verdict(INCORRECT, elapsed)
