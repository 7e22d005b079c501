"""Problem suite generators.

Each generator pairs problems with ground-truth antiderivatives where
one is known; random trees are verify-only.  All draws come from an
explicit seed and coefficient pairs are sampled without replacement, so
a suite is a pure function of its arguments.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import oracle
from .calculus import EquivConfig
from .expr import (
    Add,
    Expr,
    Fn,
    IntegerLit,
    Mul,
    Pow,
    X,
    parse_infix,
    rational,
    to_infix,
)
from .metrics import fail_at_k
from .model import DecodeParams, Integrator
from .util import derive_seed


class RangeTooSmall(ValueError):
    """Not enough distinct coefficient draws in the requested range."""


class NoGroundTruth(ValueError):
    """A perturbation needs the base problem's antiderivative."""


class EmptyPool(ValueError):
    pass


@dataclass(frozen=True)
class ProblemCase:
    problem: Expr
    truth: Expr | None
    family: str
    verify_only: bool = False


# --------------------------------------------------------------------------
# primitive templates

PRIMITIVE_TEMPLATES = ("ln", "exp", "linear", "power42", "sin", "cos", "tan")


def build_template(name: str, k1: int, k2: int) -> Expr:
    kx = Mul((IntegerLit(k2), X)) if k2 != 1 else X
    c1 = IntegerLit(k1)
    match name:
        case "ln":
            return Mul((c1, Fn("ln", kx))) if k1 != 1 else Fn("ln", kx)
        case "exp":
            return Mul((c1, Fn("exp", kx))) if k1 != 1 else Fn("exp", kx)
        case "linear":
            return Mul((c1, X)) if k1 != 1 else X
        case "power42":
            p = Pow(X, IntegerLit(42))
            return Mul((c1, p)) if k1 != 1 else p
        case "sin":
            return Mul((c1, Fn("sin", kx))) if k1 != 1 else Fn("sin", kx)
        case "cos":
            return Mul((c1, Fn("cos", kx))) if k1 != 1 else Fn("cos", kx)
        case "tan":
            return Mul((c1, Fn("tan", kx))) if k1 != 1 else Fn("tan", kx)
    raise ValueError(f"unknown template {name!r}")


def _pairs_without_replacement(
    coeff_range: tuple[int, int], n: int, seed: int
) -> list[tuple[int, int]]:
    lo, hi = coeff_range
    width = hi - lo + 1
    if width < 1 or n > width * width:
        raise RangeTooSmall(
            f"{n} distinct pairs requested from [{lo}, {hi}]^2 ({width * width} available)"
        )
    rng = random.Random(seed)
    picks = rng.sample(range(width * width), n)
    return [(lo + p // width, lo + p % width) for p in picks]


def _with_truth(problem: Expr, family: str) -> ProblemCase:
    truth = oracle.integrate_reference(problem)
    if truth is None:
        raise NoGroundTruth(f"reference cannot integrate {to_infix(problem)}")
    return ProblemCase(problem, truth, family)


def primitives_suite(
    coeff_range: tuple[int, int],
    n: int,
    seed: int,
    templates: tuple[str, ...] = PRIMITIVE_TEMPLATES,
) -> dict[str, list[ProblemCase]]:
    """n problems per template; k1,k2 pairs drawn without replacement.

    One-coefficient templates (linear, power42) still consume a pair and
    use only k1, so their problem lists may repeat a k1 value while the
    underlying pairs stay distinct.
    """
    suites: dict[str, list[ProblemCase]] = {}
    for template in templates:
        pairs = _pairs_without_replacement(
            coeff_range, n, derive_seed("primitives", seed, template)
        )
        suites[template] = [
            _with_truth(build_template(template, k1, k2), template)
            for k1, k2 in pairs
        ]
    return suites


# --------------------------------------------------------------------------
# perturbations

PERTURB_KINDS = ("scale", "inv_scale", "add_exp", "add_ln")


def perturb_suite(
    base: list[ProblemCase],
    kind: str,
    seed: int,
    k_range: tuple[int, int] = (1, 100),
) -> list[ProblemCase]:
    """Neighbourhood variants of solved problems.

    scale: k*f, inv_scale: (1/k)*f with k drawn per problem; add_exp and
    add_ln append e^x or ln(x).  Truths follow by linearity.
    """
    if kind not in PERTURB_KINDS:
        raise ValueError(f"unknown perturbation {kind!r}")
    rng = random.Random(derive_seed("perturb", seed, kind))
    out: list[ProblemCase] = []
    for case in base:
        if case.truth is None:
            raise NoGroundTruth(f"no truth for {to_infix(case.problem)}")
        family = f"{case.family}+{kind}"
        if kind in ("scale", "inv_scale"):
            k = rng.randint(*k_range)
            factor: Expr = IntegerLit(k) if kind == "scale" else rational(1, k)
            problem = Mul((factor, case.problem))
            truth = Mul((factor, case.truth))
        elif kind == "add_exp":
            problem = Add((case.problem, Fn("exp", X)))
            truth = Add((case.truth, Fn("exp", X)))
        else:
            problem = Add((case.problem, Fn("ln", X)))
            truth = Add((case.truth, Mul((X, Add((IntegerLit(-1), Fn("ln", X)))))))
        out.append(ProblemCase(problem, truth, family))
    return out


# --------------------------------------------------------------------------
# compositions


def exponent_pool(c_range: tuple[int, int] = (1, 1000)) -> list[ProblemCase]:
    """x^c and x^(1/c) for c over the range; the compositional pool."""
    lo, hi = c_range
    if lo < 1 or hi < lo:
        raise RangeTooSmall(f"bad exponent range [{lo}, {hi}]")
    cases: list[ProblemCase] = []
    seen: set[Expr] = set()
    for c in range(lo, hi + 1):
        for e in (
            Pow(X, IntegerLit(c)) if c != 1 else X,
            Pow(X, rational(1, c)) if c != 1 else X,
        ):
            if e in seen:
                continue
            seen.add(e)
            cases.append(_with_truth(e, "exponent_pool"))
    return cases


def composition_suite(
    pool: list[ProblemCase], arity: int, n: int, seed: int
) -> list[ProblemCase]:
    """Sums of `arity` pool members drawn with replacement.

    Callers pass a pool the target model already answers correctly, so a
    failure here is a failure to compose.  Truths add by linearity.
    """
    if not pool:
        raise EmptyPool("composition needs a non-empty pool")
    if arity < 2:
        raise ValueError("arity must be at least 2")
    for case in pool:
        if case.truth is None:
            raise NoGroundTruth(f"no truth for {to_infix(case.problem)}")
    rng = random.Random(derive_seed("composition", seed, arity))
    out: list[ProblemCase] = []
    for _ in range(n):
        picks = [pool[rng.randrange(len(pool))] for _ in range(arity)]
        problem = Add(tuple(p.problem for p in picks))
        truth = Add(tuple(p.truth for p in picks))
        out.append(ProblemCase(problem, truth, f"composition{arity}"))
    return out


# --------------------------------------------------------------------------
# integer extrapolation


def integer_extrapolation_suite(
    template: str,
    buckets: list[tuple[int, int]],
    n_per_bucket: int,
    seed: int,
) -> dict[str, list[ProblemCase]]:
    """The primitive templates with coefficients from growing ranges."""
    out: dict[str, list[ProblemCase]] = {}
    for lo, hi in buckets:
        label = f"{template}[{lo},{hi}]"
        pairs = _pairs_without_replacement(
            (lo, hi), n_per_bucket, derive_seed("extrapolation", seed, template, lo, hi)
        )
        out[label] = [
            _with_truth(build_template(template, k1, k2), label) for k1, k2 in pairs
        ]
    return out


# --------------------------------------------------------------------------
# random trees

_RANDOM_BINARY = ("add", "mul", "pow")


def _random_tree(ops: int, rng: random.Random) -> Expr:
    if ops == 0:
        # composite leaves need operator budget; reweight x vs integer
        return X if rng.random() < 0.6 else IntegerLit(rng.randint(1, 9))
    roll = rng.random()
    if roll < 0.2:
        # simple composite leaf: k*x costs one operator, k/x costs two
        k = IntegerLit(rng.randint(2, 9))
        if ops >= 2 and rng.random() < 0.5:
            return Mul((k, Pow(_leaf_or_tree(ops - 2, rng), IntegerLit(-1))))
        return Mul((k, _leaf_or_tree(ops - 1, rng)))
    if roll < 0.45:
        kind = rng.choice(("sin", "cos", "tan", "exp", "ln", "sqrt"))
        return Fn(kind, _random_tree(ops - 1, rng))
    left_ops = rng.randint(0, ops - 1)
    op = rng.choice(_RANDOM_BINARY)
    a = _random_tree(left_ops, rng)
    b = _random_tree(ops - 1 - left_ops, rng)
    if op == "add":
        return Add((a, b))
    if op == "mul":
        return Mul((a, b))
    return Pow(a, b)


def _leaf_or_tree(ops: int, rng: random.Random) -> Expr:
    if ops == 0:
        return X
    return _random_tree(ops, rng)


def random_tree_suite(op_count: int, n: int, seed: int) -> list[ProblemCase]:
    """n random unary-binary trees with exactly op_count operator nodes.

    Verify-only: no ground truth is attached.  Nodes split roughly 20%
    simple composite (k*x, or k/x when budget allows), 25% unary
    function, 55% binary operator; composites spend their operators
    from the same budget, so the count stays exact.
    """
    if op_count < 0:
        raise ValueError("op_count must be non-negative")
    rng = random.Random(derive_seed("random_trees", seed, op_count))
    out = []
    for _ in range(n):
        tree = _random_tree(op_count, rng)
        out.append(ProblemCase(tree, None, f"random{op_count}", verify_only=True))
    return out


# --------------------------------------------------------------------------
# named seed sets

_SEED_SETS = {
    "default": ("1", "x", "x + 1", "x^2 + x + 1"),
    "poly": (
        "1",
        "2*x",
        "2/x",
        "2*x + 1",
        "2/x + 1",
        "2*x^2 + 2*x + 1",
        "2*x^2 + 2/x + 1",
        "2*x^3 + 2*x^2 + 1",
        "2*x^42 + 2*x^3 + 2*x^2 + 1",
    ),
    "trig": (
        "17*cos(83*x)",
        "17*cos(83*x) + 1",
        "34*sin(77*x)",
        "34*sin(77*x) + 1",
        "2*cos(2*x) + 2*x",
        "2*cos(2*x) + 2*x + 1",
        "2*sin(2*x) + 2*x",
        "2*sin(2*x) + 2*x + 1",
        "2*sin(2*x)*cos(2*x)",
    ),
    "trig-general": (
        "2*cos(2*x)",
        "2*cos(2*x) + 1",
        "2*sin(2*x)",
        "2*sin(2*x) + 1",
        "2*cos(2*x) + 2*x",
        "2*cos(2*x) + 2*x + 1",
        "2*sin(2*x) + 2*x",
        "2*sin(2*x) + 2*x + 1",
        "2*sin(2*x)*cos(2*x)",
    ),
}


def seed_set(name: str) -> list[Expr]:
    """A named mutation seed set; see SEED_SET_NAMES."""
    if name not in _SEED_SETS:
        raise ValueError(f"unknown seed set {name!r}; have {sorted(_SEED_SETS)}")
    return [parse_infix(text) for text in _SEED_SETS[name]]


SEED_SET_NAMES = tuple(sorted(_SEED_SETS))


# --------------------------------------------------------------------------
# problem files


def load_problem_file(path: str) -> list[ProblemCase]:
    """One infix problem per line; optional tab-separated ground truth.

    Blank lines and lines starting with # are skipped.
    """
    cases: list[ProblemCase] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "\t" in line:
                problem_text, truth_text = line.split("\t", 1)
                truth = parse_infix(truth_text.strip())
            else:
                problem_text, truth = line, None
            cases.append(
                ProblemCase(parse_infix(problem_text.strip()), truth, "file")
            )
    return cases


def save_problem_file(path: str, cases: list[ProblemCase]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            line = to_infix(case.problem)
            if case.truth is not None:
                line += "\t" + to_infix(case.truth)
            fh.write(line + "\n")


def successful_pool(
    cases: list[ProblemCase],
    integrator: Integrator,
    params: DecodeParams | None = None,
    cfg: EquivConfig | None = None,
    run_seed: int = 0,
) -> list[ProblemCase]:
    """The subset the target model answers correctly at k=1.

    Used to build validation seed material when no curated problem file
    is available: random trees filtered through the model.
    """
    params = params or DecodeParams(k=1, beam=10)
    result = fail_at_k(
        [c.problem for c in cases], integrator, params, [1], cfg, run_seed=run_seed
    )
    return [c for c, r in zip(cases, result.records) if r.m_by_k[1] == 0]
