"""Reference integration and the fault-injection backend.

integrate_reference covers a closed class: linear combinations of
constants, x^q (rational q, including q = -1 -> ln(x)), sin/cos/exp
with an affine inner argument, tan/ln with a linear inner argument,
sqrt of an affine argument, and a^x for a positive integer a != 1.
Anything else returns None (unsupported) rather than a guess, so the
class boundary stays testable.

faulty_integrate wraps the reference in controlled corruption: with a
per-family probability the candidate list contains no correct answer,
otherwise the correct answer sits at a configured rank.  Corruptions
are built to change the derivative, never just the integration
constant, so a corrupted candidate cannot accidentally verify.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import model as model_mod
from .expr import (
    Add,
    DivisionByZero,
    Expr,
    Fn,
    IntegerLit,
    Mul,
    Pow,
    RationalLit,
    Var,
    X,
    as_fraction,
    canonicalize,
    from_fraction,
    to_prefix,
)
from .model import CandidateList, DecodeParams, TokenSeq
from .util import derive_seed

# --------------------------------------------------------------------------
# reference integration


def _affine(e: Expr) -> tuple[Fraction, Fraction] | None:
    """Match a*x + b with a != 0; returns (a, b) or None."""
    match e:
        case Var():
            return Fraction(1), Fraction(0)
        case Mul((head, Var())) if as_fraction(head) is not None:
            return as_fraction(head), Fraction(0)
        case Add((head, rest)) if as_fraction(head) is not None:
            inner = _affine(rest)
            if inner is not None and inner[1] == 0:
                return inner[0], as_fraction(head)
            return None
    return None


def _linear(e: Expr) -> Fraction | None:
    """Match a*x with a != 0; returns a or None."""
    aff = _affine(e)
    if aff is not None and aff[1] == 0:
        return aff[0]
    return None


def _integrate_core(core: Expr) -> Expr | None:
    match core:
        case Var():
            return Mul((RationalLit(1, 2), Pow(X, IntegerLit(2))))
        case Pow(Var(), exponent):
            q = as_fraction(exponent)
            if q is None:
                return None
            if q == -1:
                return Fn("ln", X)
            return Mul((from_fraction(1 / (q + 1)), Pow(X, from_fraction(q + 1))))
        case Pow(IntegerLit(a), Var()) if a >= 2:
            return Mul((Pow(IntegerLit(a), X), Pow(Fn("ln", IntegerLit(a)), IntegerLit(-1))))
        case Fn("sin", arg):
            aff = _affine(arg)
            if aff is None:
                return None
            return Mul((from_fraction(-1 / aff[0]), Fn("cos", arg)))
        case Fn("cos", arg):
            aff = _affine(arg)
            if aff is None:
                return None
            return Mul((from_fraction(1 / aff[0]), Fn("sin", arg)))
        case Fn("exp", arg):
            aff = _affine(arg)
            if aff is None:
                return None
            return Mul((from_fraction(1 / aff[0]), Fn("exp", arg)))
        case Fn("tan", arg):
            a = _linear(arg)
            if a is None:
                return None
            return Mul((from_fraction(-1 / a), Fn("ln", Fn("cos", arg))))
        case Fn("ln", arg):
            a = _linear(arg)
            if a is None:
                return None
            return Mul((X, Add((IntegerLit(-1), Fn("ln", arg)))))
        case Fn("sqrt", arg):
            aff = _affine(arg)
            if aff is None:
                return None
            return Mul((from_fraction(Fraction(2, 3) / aff[0]), Pow(arg, RationalLit(3, 2))))
    return None


def integrate_reference(e: Expr) -> Expr | None:
    """An antiderivative within the supported class, or None.

    The output always verifies: differentiate(result) is numerically
    equivalent to the input on the shared domain.
    """
    try:
        canon = canonicalize(e)
    except DivisionByZero:
        return None
    terms = canon.args if isinstance(canon, Add) else (canon,)
    parts: list[Expr] = []
    for term in terms:
        coeff = as_fraction(term)
        if coeff is not None:
            parts.append(Mul((from_fraction(coeff), X)))
            continue
        coeff = Fraction(1)
        core = term
        if isinstance(term, Mul):
            head = as_fraction(term.args[0])
            if head is not None:
                coeff = head
                rest = term.args[1:]
                core = rest[0] if len(rest) == 1 else Mul(rest)
        integral = _integrate_core(core)
        if integral is None:
            return None
        parts.append(Mul((from_fraction(coeff), integral)))
    return canonicalize(parts[0] if len(parts) == 1 else Add(tuple(parts)))


# --------------------------------------------------------------------------
# problem families


def classify(e: Expr) -> str:
    """Total classification used for per-family fault probabilities."""
    try:
        canon = canonicalize(e)
    except DivisionByZero:
        return "other"
    if isinstance(canon, Add):
        return "sum"
    core = canon
    if isinstance(canon, Mul) and as_fraction(canon.args[0]) is not None:
        rest = canon.args[1:]
        core = rest[0] if len(rest) == 1 else Mul(rest)
    match core:
        case IntegerLit(_) | RationalLit(_, _):
            return "constant"
        case Var() | Pow(Var(), _):
            return "power"
        case Pow(b, _) if as_fraction(b) is not None:
            return "exp"
        case Fn(kind, _):
            return kind
    return "other"


FAULT_KINDS = (
    "drop_division",
    "corrupt_constant",
    "template_swap",
    "garbage_tokens",
    "nonterminating",
)

# parseable-but-wrong corruptions; the token-level kinds are opt-in
DEFAULT_FAULT_KINDS = ("drop_division", "corrupt_constant", "template_swap")


@dataclass(frozen=True)
class FaultSpec:
    """Controlled failure behaviour for the simulated integrator.

    p is the probability that a problem's candidate list contains no
    correct answer; per_family overrides it by problem family.  When the
    answer is kept, it sits at rank_of_correct (1-based); a rank beyond
    k means it is effectively dropped.
    """

    p: float = 0.5
    per_family: dict[str, float] = field(default_factory=dict)
    kinds: tuple[str, ...] = DEFAULT_FAULT_KINDS
    rank_of_correct: int = 1
    max_tokens: int = model_mod.DEFAULT_TOKEN_CAP

    def __post_init__(self):
        for kind in self.kinds:
            if kind not in FAULT_KINDS:
                raise ValueError(f"unknown fault kind {kind!r}")
        if not self.kinds:
            raise ValueError("need at least one fault kind")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be a probability")

    def probability_for(self, family: str) -> float:
        return self.per_family.get(family, self.p)


# -- corruption helpers


def _literal_sites(e: Expr, top_level_constant: bool = True) -> list[tuple[int, ...]]:
    """Paths to literal leaves whose change alters the derivative.

    A literal that is itself a top-level summand is only an integration
    constant, so it is skipped.
    """
    sites: list[tuple[int, ...]] = []

    def walk(node: Expr, path: tuple[int, ...], additive: bool) -> None:
        match node:
            case IntegerLit(_) | RationalLit(_, _):
                if not additive:
                    sites.append(path)
            case Add(args):
                for i, a in enumerate(args):
                    walk(a, path + (i,), additive)
            case Mul(args):
                for i, a in enumerate(args):
                    walk(a, path + (i,), False)
            case Pow(base, exponent):
                walk(base, path + (0,), False)
                walk(exponent, path + (1,), False)
            case Fn(_, arg):
                walk(arg, path + (0,), False)

    walk(e, (), top_level_constant)
    return sites


def _replace_at(e: Expr, path: tuple[int, ...], value: Expr) -> Expr:
    if not path:
        return value
    i, rest = path[0], path[1:]
    match e:
        case Add(args):
            return Add(args[:i] + (_replace_at(args[i], rest, value),) + args[i + 1 :])
        case Mul(args):
            return Mul(args[:i] + (_replace_at(args[i], rest, value),) + args[i + 1 :])
        case Pow(base, exponent):
            if i == 0:
                return Pow(_replace_at(base, rest, value), exponent)
            return Pow(base, _replace_at(exponent, rest, value))
        case Fn(kind, arg):
            return Fn(kind, _replace_at(arg, rest, value))
    raise ValueError("path does not exist")


def _get_at(e: Expr, path: tuple[int, ...]) -> Expr:
    for i in path:
        match e:
            case Add(args) | Mul(args):
                e = args[i]
            case Pow(base, exponent):
                e = base if i == 0 else exponent
            case Fn(_, arg):
                e = arg
    return e


def _find_rational(e: Expr) -> tuple[int, ...] | None:
    stack: list[tuple[Expr, tuple[int, ...]]] = [(e, ())]
    while stack:
        node, path = stack.pop()
        if isinstance(node, RationalLit):
            return path
        match node:
            case Add(args) | Mul(args):
                for i in range(len(args) - 1, -1, -1):
                    stack.append((args[i], path + (i,)))
            case Pow(base, exponent):
                stack.append((exponent, path + (1,)))
                stack.append((base, path + (0,)))
            case Fn(_, arg):
                stack.append((arg, path + (0,)))
    return None


def _corrupt_constant(e: Expr, rng: random.Random) -> Expr:
    sites = _literal_sites(e)
    if not sites:
        # no derivative-relevant literal: shift the derivative by 2x
        return Add((e, Pow(X, IntegerLit(2))))
    path = sites[rng.randrange(len(sites))]
    leaf = _get_at(e, path)
    delta = rng.choice([1, 2, 3, 4, 5]) * rng.choice([1, -1])
    value = as_fraction(leaf) + delta
    return _replace_at(e, path, from_fraction(value))


def _drop_division(e: Expr, rng: random.Random) -> Expr:
    """k1/k2 coefficient -> 1/k1, the classic dropped-divisor shape."""
    path = _find_rational(e)
    if path is None:
        return _corrupt_constant(e, rng)
    lit = _get_at(e, path)
    assert isinstance(lit, RationalLit)
    p = abs(lit.num)
    sign = 1 if lit.num >= 0 else -1
    replacement = from_fraction(Fraction(sign, p) if p > 1 else Fraction(sign * lit.den))
    return _replace_at(e, path, replacement)


_TRIG_SWAP = {"sin": "cos", "cos": "sin", "tan": "sin", "exp": "ln", "ln": "exp"}


def _template_swap(e: Expr, rng: random.Random) -> Expr:
    """Answer with a neighbouring template: swap a function kind, or
    bump a power's exponent when there is nothing to swap."""

    swapped = False

    def swap(node: Expr) -> Expr:
        nonlocal swapped
        match node:
            case Fn(kind, arg) if not swapped and kind in _TRIG_SWAP:
                swapped = True
                return Fn(_TRIG_SWAP[kind], arg)
            case Fn(kind, arg):
                return Fn(kind, swap(arg))
            case Add(args):
                return Add(tuple(swap(a) for a in args))
            case Mul(args):
                return Mul(tuple(swap(a) for a in args))
            case Pow(base, exponent):
                return Pow(swap(base), swap(exponent))
        return node

    out = swap(e)
    if swapped:
        return out

    def bump(node: Expr) -> Expr:
        nonlocal swapped
        match node:
            case Pow(Var(), exponent) if not swapped and as_fraction(exponent) is not None:
                swapped = True
                return Pow(X, from_fraction(as_fraction(exponent) + 1))
            case Add(args):
                return Add(tuple(bump(a) for a in args))
            case Mul(args):
                return Mul(tuple(bump(a) for a in args))
            case Pow(base, exponent):
                return Pow(bump(base), exponent)
            case Fn(kind, arg):
                return Fn(kind, bump(arg))
        return node

    out = bump(e)
    if swapped:
        return out
    return _corrupt_constant(e, rng)


def _garbage_tokens(rng: random.Random) -> TokenSeq:
    # ends on a binary operator, so parsing always underflows
    length = rng.randrange(5, 30)
    body = [rng.choice(["add", "mul", "x", "sin", "INT+", "1", "pow"]) for _ in range(length)]
    body.append("add")
    return tuple(body)


def _nonterminating(spec: FaultSpec) -> TokenSeq:
    # a decode that never closes its subtrees, cut at the stream cap
    reps = spec.max_tokens // 2
    return tuple(["add", "mul"] * reps)[: spec.max_tokens]


def _corruption_stream(base: Expr, spec: FaultSpec, rng: random.Random):
    """Yield corrupted candidates (token streams), deterministically."""
    expr_kinds = [k for k in spec.kinds if k in DEFAULT_FAULT_KINDS]
    while True:
        kind = spec.kinds[rng.randrange(len(spec.kinds))]
        if kind == "garbage_tokens":
            yield _garbage_tokens(rng)
        elif kind == "nonterminating":
            yield _nonterminating(spec)
        else:
            if not expr_kinds:
                kind = "corrupt_constant"
            if kind == "drop_division":
                out = _drop_division(base, rng)
            elif kind == "template_swap":
                out = _template_swap(base, rng)
            else:
                out = _corrupt_constant(base, rng)
            yield tuple(to_prefix(out))


_SCORE_TOP = 0.9
_SCORE_DECAY = 0.45


def geometric_scores(n: int) -> tuple[float, ...]:
    """Synthetic rank-decayed probabilities for in-process backends."""
    return tuple(_SCORE_TOP * _SCORE_DECAY**i for i in range(n))


def out_of_list_score(beam: int) -> float:
    """Score given to a candidate the beam did not contain; strictly
    below anything in the list by construction."""
    return _SCORE_TOP * _SCORE_DECAY**beam * 0.5


def faulty_integrate(
    e: Expr, spec: FaultSpec, rng: random.Random, k: int = 1
) -> CandidateList:
    """Candidate list with controlled correctness.

    For problems the reference cannot integrate there is no correct
    answer to plant, so every candidate is a corruption of problem*x
    (wrong for any non-constant problem) and the problem counts as a
    model failure regardless of the probability draw.
    """
    ref = integrate_reference(e)
    fail = ref is None or rng.random() < spec.probability_for(classify(e))
    base = ref if ref is not None else Mul((e, X))
    stream = _corruption_stream(base, spec, rng)

    sequences: list[TokenSeq] = []
    seen: set[object] = set()
    correct_at = None if fail else min(spec.rank_of_correct, k + 1)
    budget = 4 * k + 8
    while len(sequences) < k and budget > 0:
        budget -= 1
        if correct_at is not None and len(sequences) == correct_at - 1:
            tokens = tuple(to_prefix(ref))
            correct_at = None
        else:
            tokens = next(stream)
        if len(tokens) > spec.max_tokens:
            # a real decoder cannot emit past the wire cap; an overlong
            # correct answer is simply unreachable
            continue
        key = model_mod._canonical_key(tokens)
        if key in seen:
            continue
        seen.add(key)
        sequences.append(tokens)
    return CandidateList(tuple(sequences), geometric_scores(len(sequences)))


# --------------------------------------------------------------------------
# in-process backends


@dataclass
class ReferenceModel:
    """The reference oracle wrapped as an integrator; at most one
    candidate, which is always correct when present."""

    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList:
        integral = integrate_reference(problem)
        if integral is None:
            return CandidateList(())
        return CandidateList((tuple(to_prefix(integral)),), geometric_scores(1))

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None:
        integral = integrate_reference(problem)
        if integral is None:
            return None
        if model_mod._canonical_key(tuple(candidate)) == canonicalize(integral):
            return geometric_scores(1)[0]
        return out_of_list_score(1)


@dataclass
class FaultyModel:
    """Deterministic fault-injected integrator.

    Every draw derives from (model seed, problem tokens, decode params),
    so propose is a pure function of its arguments; runs replay
    identically whatever the evaluation order.
    """

    spec: FaultSpec = field(default_factory=FaultSpec)
    seed: int = 0
    beam: int = 10

    def _rng(self, problem: Expr, params: DecodeParams) -> random.Random:
        label = derive_seed(
            "faulty",
            self.seed,
            " ".join(to_prefix(problem)),
            params.k,
            params.beam,
            params.strategy,
            params.temperature,
        )
        return random.Random(label)

    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList:
        return faulty_integrate(problem, self.spec, self._rng(problem, params), params.k)

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None:
        params = DecodeParams(k=self.beam, beam=self.beam)
        listed = self.propose(problem, params)
        key = model_mod._canonical_key(tuple(candidate))
        for i, cand in enumerate(listed.candidates):
            if model_mod._canonical_key(cand) == key:
                return listed.scores[i] if listed.scores else geometric_scores(i + 1)[-1]
        return out_of_list_score(params.beam)
