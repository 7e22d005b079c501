"""Expression trees for single-variable algebra.

The tree is n-ary (Add and Mul hold argument tuples) while the external
prefix token format is binary, so serialization left-nests argument
lists and parsing re-flattens them.  There are no sub or div nodes:
``a - b`` and ``a / b`` normalize to ``a + (-1)*b`` and ``a * b^-1`` at
parse time, with exact rational folding for literal operands.  The
printers re-sugar subtraction and division for readability.

Every node is immutable and hashable, and every operation here is pure.
Integer literals are arbitrary precision; rational literals are kept
reduced, with a positive denominator, and are never integer-valued.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

# canonicalization folds literal powers up to 65536 bits, far past the
# interpreter's default int-to-string guard; printing must stay total
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(2_000_000)


# --------------------------------------------------------------------------
# node types


@dataclass(frozen=True, slots=True)
class Expr:
    def __str__(self) -> str:
        return to_infix(self)


@dataclass(frozen=True, slots=True)
class IntegerLit(Expr):
    value: int


@dataclass(frozen=True, slots=True)
class RationalLit(Expr):
    """Reduced non-integer rational; den > 0 always."""

    num: int
    den: int


@dataclass(frozen=True, slots=True)
class Var(Expr):
    """The single free variable x."""


@dataclass(frozen=True, slots=True)
class Add(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, slots=True)
class Fn(Expr):
    kind: str
    arg: Expr


X = Var()

FN_KINDS = ("sin", "cos", "tan", "exp", "ln", "sqrt")
_FN_SET = frozenset(FN_KINDS)
_FN_ORDER = {k: i for i, k in enumerate(FN_KINDS)}

_BINARY_TOKENS = ("add", "sub", "mul", "div", "pow")
_DIGIT_TOKENS = tuple(str(d) for d in range(10))
_SIGN_TOKENS = ("INT+", "INT-")

#: The full prefix token vocabulary.
VOCABULARY = frozenset(
    _BINARY_TOKENS + FN_KINDS + ("x",) + _SIGN_TOKENS + _DIGIT_TOKENS
)

_DIGIT_SET = frozenset(_DIGIT_TOKENS)
_BINARY_SET = frozenset(_BINARY_TOKENS)


# --------------------------------------------------------------------------
# errors


class PrefixError(ValueError):
    """A prefix token stream could not be parsed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position


class UnderflowError(PrefixError):
    """Stream ended while a subtree still needed arguments."""


class TrailingTokensError(PrefixError):
    """Tokens remained after a complete expression."""


class UnknownTokenError(PrefixError):
    """A token outside the vocabulary."""


class InfixSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DivisionByZero(ArithmeticError):
    """Exact literal folding produced a zero denominator."""


class DomainError(ArithmeticError):
    """Point evaluation left the real domain or overflowed."""


# --------------------------------------------------------------------------
# literal helpers


def as_fraction(e: Expr) -> Fraction | None:
    """The exact value of a literal node, or None for anything else."""
    if isinstance(e, IntegerLit):
        return Fraction(e.value)
    if isinstance(e, RationalLit):
        return Fraction(e.num, e.den)
    return None


def from_fraction(value: Fraction) -> Expr:
    if value.denominator == 1:
        return IntegerLit(value.numerator)
    return RationalLit(value.numerator, value.denominator)


def rational(num: int, den: int) -> Expr:
    """Exact num/den as a literal node; raises DivisionByZero on den == 0."""
    if den == 0:
        raise DivisionByZero(f"literal {num}/0")
    return from_fraction(Fraction(num, den))


def _negated(e: Expr) -> Expr:
    f = as_fraction(e)
    if f is not None:
        return from_fraction(-f)
    if isinstance(e, Mul):
        head = as_fraction(e.args[0])
        if head is not None:
            rest = e.args[1:]
            if head == -1:
                return rest[0] if len(rest) == 1 else Mul(rest)
            return Mul((from_fraction(-head),) + rest)
        return Mul((IntegerLit(-1),) + e.args)
    return Mul((IntegerLit(-1), e))


# --------------------------------------------------------------------------
# prefix serialization

def _encode_int(v: int) -> list[str]:
    sign = "INT+" if v >= 0 else "INT-"
    return [sign] + list(str(abs(v)))


def to_prefix(e: Expr) -> list[str]:
    """Binary prefix token stream.

    n-ary Add/Mul emit left-nested binary applications, so a flat
    ``Add((a, b, c))`` and the nested ``Add((Add((a, b)), c))`` share one
    token stream; parse_prefix always returns the flat spelling.
    Rational literals emit as ``div`` over two integer tokens.
    """
    out: list[str] = []
    stack: list[Expr] = [e]
    while stack:
        node = stack.pop()
        match node:
            case IntegerLit(v):
                out.extend(_encode_int(v))
            case RationalLit(num, den):
                out.append("div")
                stack.append(IntegerLit(den))
                stack.append(IntegerLit(num))
            case Var():
                out.append("x")
            case Add(args):
                out.extend(["add"] * (len(args) - 1))
                stack.extend(reversed(args))
            case Mul(args):
                out.extend(["mul"] * (len(args) - 1))
                stack.extend(reversed(args))
            case Pow(base, exponent):
                out.append("pow")
                stack.append(exponent)
                stack.append(base)
            case Fn(kind, arg):
                out.append(kind)
                stack.append(arg)
            case _:
                raise TypeError(f"not an Expr: {node!r}")
    return out


def _build_binary(op: str, a: Expr, b: Expr) -> Expr:
    if op == "add":
        if isinstance(a, Add):
            return Add(a.args + (b,))
        return Add((a, b))
    if op == "sub":
        neg = _negated(b)
        if isinstance(a, Add):
            return Add(a.args + (neg,))
        return Add((a, neg))
    if op == "mul":
        if isinstance(a, Mul):
            return Mul(a.args + (b,))
        return Mul((a, b))
    if op == "div":
        fa, fb = as_fraction(a), as_fraction(b)
        if fa is not None and fb is not None and fb != 0:
            return from_fraction(fa / fb)
        inv = Pow(b, IntegerLit(-1))
        if isinstance(a, Mul):
            return Mul(a.args + (inv,))
        return Mul((a, inv))
    return Pow(a, b)


def parse_prefix(tokens: list[str] | tuple[str, ...]) -> Expr:
    """Parse a binary prefix stream; the inverse of to_prefix.

    Iterative on purpose: adversarial streams near the length cap would
    otherwise exhaust the recursion limit before we can reject them.
    """
    tokens = list(tokens)
    n = len(tokens)
    stack: list[tuple[str, list[Expr]]] = []
    i = 0
    while i < n:
        t = tokens[i]
        if t in _BINARY_SET or t in _FN_SET:
            stack.append((t, []))
            i += 1
            continue
        if t == "x":
            value: Expr = X
            i += 1
        elif t in _SIGN_TOKENS:
            j = i + 1
            while j < n and tokens[j] in _DIGIT_SET:
                j += 1
            if j == i + 1:
                raise UnderflowError("integer sign token without digits", i)
            mag = int("".join(tokens[i + 1 : j]))
            value = IntegerLit(mag if t == "INT+" else -mag)
            i = j
        else:
            raise UnknownTokenError(f"unknown token {t!r}", i)
        # fold the completed leaf upward through waiting operators
        while stack:
            op, args = stack[-1]
            args.append(value)
            need = 1 if op in _FN_SET else 2
            if len(args) < need:
                break
            stack.pop()
            value = Fn(op, args[0]) if op in _FN_SET else _build_binary(op, *args)
        else:
            if i < n:
                raise TrailingTokensError("tokens after a complete expression", i)
            return value
    raise UnderflowError("stream ended mid-expression", n)


# --------------------------------------------------------------------------
# infix


_NAME_ALIASES = {"log": "ln"}


def _scan_infix(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            toks.append(("op", "^", i))
            i += 2
            continue
        if c in "+-*/^()":
            toks.append(("op", c, i))
            i += 1
            continue
        raise InfixSyntaxError(f"unexpected character {c!r}", i)
    return toks


def parse_infix(text: str) -> Expr:
    """Parse infix text.

    Grammar: integers, x, + - * / ^ (or **), parentheses, unary minus,
    and calls sin/cos/tan/exp/ln/sqrt (log is accepted for ln).  There
    is no implicit multiplication; write 30*cos(39*x).
    """
    toks = _scan_infix(text)
    pos = 0

    def peek_op(*ops: str) -> str | None:
        if pos < len(toks) and toks[pos][0] == "op" and toks[pos][1] in ops:
            return toks[pos][1]
        return None

    def err(message: str) -> InfixSyntaxError:
        at = toks[pos][2] if pos < len(toks) else len(text)
        return InfixSyntaxError(message, at)

    def parse_sum() -> Expr:
        nonlocal pos
        terms = [parse_product()]
        while (op := peek_op("+", "-")) is not None:
            pos += 1
            rhs = parse_product()
            terms.append(rhs if op == "+" else _negated(rhs))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def parse_product() -> Expr:
        nonlocal pos
        factors = [parse_unary()]
        while (op := peek_op("*", "/")) is not None:
            pos += 1
            rhs = parse_unary()
            if op == "*":
                factors.append(rhs)
                continue
            fa = as_fraction(factors[-1]) if len(factors) == 1 else None
            fb = as_fraction(rhs)
            if fa is not None and fb is not None and fb != 0:
                factors[-1] = from_fraction(fa / fb)
            else:
                factors.append(Pow(rhs, IntegerLit(-1)))
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def parse_unary() -> Expr:
        nonlocal pos
        if peek_op("-"):
            pos += 1
            return _negated(parse_unary())
        if peek_op("+"):
            pos += 1
            return parse_unary()
        return parse_power()

    def parse_power() -> Expr:
        nonlocal pos
        base = parse_atom()
        if peek_op("^"):
            pos += 1
            return Pow(base, parse_unary())
        return base

    def parse_atom() -> Expr:
        nonlocal pos
        if pos >= len(toks):
            raise err("expression ended unexpectedly")
        kind, tok, _at = toks[pos]
        if kind == "int":
            pos += 1
            return IntegerLit(int(tok))
        if kind == "name":
            name = _NAME_ALIASES.get(tok, tok)
            if name == "x":
                pos += 1
                return X
            if name in _FN_SET:
                pos += 1
                if not peek_op("("):
                    raise err(f"{tok} needs a parenthesized argument")
                pos += 1
                arg = parse_sum()
                if not peek_op(")"):
                    raise err("missing )")
                pos += 1
                return Fn(name, arg)
            raise err(f"unknown name {tok!r}")
        if peek_op("("):
            pos += 1
            inner = parse_sum()
            if not peek_op(")"):
                raise err("missing )")
            pos += 1
            return inner
        raise err(f"unexpected {tok!r}")

    result = parse_sum()
    if pos < len(toks):
        raise err(f"trailing input {toks[pos][1]!r}")
    return result


_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _prec(e: Expr) -> int:
    match e:
        case IntegerLit(v):
            return _PREC_ATOM if v >= 0 else _PREC_ADD
        case RationalLit(num, _):
            return _PREC_MUL if num >= 0 else _PREC_ADD
        case Add(_):
            return _PREC_ADD
        case Mul(_):
            return _PREC_MUL
        case Pow(_, _):
            return _PREC_POW
        case _:
            return _PREC_ATOM


def _fmt(e: Expr, ctx: int) -> str:
    text = _fmt_bare(e)
    if _prec(e) < ctx:
        return f"({text})"
    return text


def _split_sign(e: Expr) -> tuple[bool, Expr]:
    f = as_fraction(e)
    if f is not None and f < 0:
        return True, from_fraction(-f)
    if isinstance(e, Mul):
        head = as_fraction(e.args[0])
        if head is not None and head < 0:
            return True, _negated(e)
    return False, e


def _fmt_bare(e: Expr) -> str:
    match e:
        case IntegerLit(v):
            return str(v)
        case RationalLit(num, den):
            return f"{num}/{den}"
        case Var():
            return "x"
        case Fn(kind, arg):
            return f"{kind}({_fmt(arg, _PREC_ADD)})"
        case Pow(base, exponent):
            f = as_fraction(exponent)
            if f is not None and f < 0:
                # / binds looser than ^, so a power denominator needs no parens
                inv = Pow(base, from_fraction(-f)) if f != -1 else base
                return f"1/{_fmt(inv, _PREC_POW)}"
            return f"{_fmt(base, _PREC_ATOM)}^{_fmt(exponent, _PREC_POW)}"
        case Add(args):
            parts = [_fmt(args[0], _PREC_ADD)]
            for a in args[1:]:
                negative, mag = _split_sign(a)
                parts.append(" - " if negative else " + ")
                parts.append(_fmt(mag, _PREC_MUL))
            return "".join(parts)
        case Mul(args):
            negative = False
            coeff: Fraction | None = None
            num: list[Expr] = []
            den: list[Expr] = []
            for a in args:
                f = as_fraction(a)
                if f is not None and coeff is None:
                    negative, coeff = f < 0, abs(f)
                    continue
                if isinstance(a, Pow):
                    fe = as_fraction(a.exponent)
                    if fe is not None and fe < 0:
                        den.append(a.base if fe == -1 else Pow(a.base, from_fraction(-fe)))
                        continue
                num.append(a)
            if coeff is not None:
                if coeff.denominator != 1:
                    den.insert(0, IntegerLit(coeff.denominator))
                if coeff.numerator != 1 or not num:
                    num.insert(0, IntegerLit(coeff.numerator))
            text = "*".join(_fmt(f, _PREC_MUL) for f in num) or "1"
            if den:
                if len(den) == 1:
                    text += f"/{_fmt(den[0], _PREC_POW)}"
                else:
                    text += f"/({'*'.join(_fmt(f, _PREC_MUL) for f in den)})"
            return f"-{text}" if negative else text
        case _:
            raise TypeError(f"not an Expr: {e!r}")


def to_infix(e: Expr) -> str:
    """Readable infix text; parse_infix(to_infix(e)) is numerically equal to e."""
    return _fmt_bare(e)


# --------------------------------------------------------------------------
# canonicalization

# literal pow folding caps: beyond these the power stays symbolic, which
# keeps adversarial mutants like ((999^999)^999) from materializing
# million-digit integers while staying exact below the cap
_FOLD_MAX_EXP = 4096
_FOLD_MAX_BITS = 65536

# distribution of products over sums is capped; a bigger product is left
# factored (still deterministic and idempotent, just not expanded)
_EXPAND_MAX_TERMS = 4096


def sort_key(e: Expr):
    """Total order key: variant rank, then children, then literal value."""
    match e:
        case IntegerLit(v):
            return (0, (), (Fraction(v),))
        case RationalLit(num, den):
            return (0, (), (Fraction(num, den),))
        case Var():
            return (2, (), ())
        case Fn(kind, arg):
            return (3, (sort_key(arg),), (_FN_ORDER[kind],))
        case Add(args):
            return (4, tuple(sort_key(a) for a in args), ())
        case Mul(args):
            return (5, tuple(sort_key(a) for a in args), ())
        case Pow(base, exponent):
            return (6, (sort_key(base), sort_key(exponent)), ())
        case _:
            raise TypeError(f"not an Expr: {e!r}")


def _canon_pow(base: Expr, exponent: Expr) -> Expr:
    fe = as_fraction(exponent)
    fb = as_fraction(base)
    if fe == 0:
        return IntegerLit(1)
    if fe == 1:
        return base
    if fb == 0 and fe is not None:
        if fe < 0:
            raise DivisionByZero("0 raised to a negative power")
        return IntegerLit(0)
    if fb == 1:
        return IntegerLit(1)
    if fb is not None and fe is not None and fe.denominator == 1:
        n = fe.numerator
        bits = max(fb.numerator.bit_length(), fb.denominator.bit_length(), 1)
        if abs(n) <= _FOLD_MAX_EXP and bits * abs(n) <= _FOLD_MAX_BITS:
            return from_fraction(fb**n)
    if isinstance(base, Pow) and fe is not None and fe.denominator == 1:
        # (b^e)^n with integer n is exact wherever b^e is defined
        return _canon_pow(base.base, _canon_mul([base.exponent, exponent]))
    if isinstance(base, Mul) and fe is not None and fe.denominator == 1:
        return _canon_mul([_canon_pow(f, exponent) for f in base.args])
    if (
        isinstance(base, Add)
        and fe is not None
        and fe.denominator == 1
        and fe >= 2
        and len(base.args) ** fe.numerator <= _EXPAND_MAX_TERMS
    ):
        # same expansion cap as products over sums
        return _canon_mul([base] * fe.numerator)
    return Pow(base, exponent)


def _flatten(cls, args: list[Expr]) -> list[Expr]:
    flat: list[Expr] = []
    for a in args:
        if isinstance(a, cls):
            flat.extend(a.args)
        else:
            flat.append(a)
    return flat


def _canon_mul(args: list[Expr]) -> Expr:
    flat = _flatten(Mul, args)
    coeff = Fraction(1)
    factors: list[Expr] = []
    for a in flat:
        f = as_fraction(a)
        if f is not None:
            coeff *= f
        else:
            factors.append(a)
    if coeff == 0:
        return IntegerLit(0)

    sums = [f for f in factors if isinstance(f, Add)]
    if sums:
        size = math.prod(len(s.args) for s in sums)
        if size <= _EXPAND_MAX_TERMS:
            rest = [f for f in factors if not isinstance(f, Add)]
            rest.append(from_fraction(coeff))
            terms = [
                _canon_mul(rest + list(combo))
                for combo in itertools.product(*(s.args for s in sums))
            ]
            return _canon_add(terms)

    powers: dict[Expr, list[Expr]] = {}
    for f in factors:
        if isinstance(f, Pow):
            powers.setdefault(f.base, []).append(f.exponent)
        else:
            powers.setdefault(f, []).append(IntegerLit(1))
    rebuilt: list[Expr] = []
    changed = False
    for base, exps in powers.items():
        total = exps[0] if len(exps) == 1 else _canon_add(exps)
        if len(exps) > 1:
            changed = True
        new = _canon_pow(base, total)
        if as_fraction(new) is not None or isinstance(new, (Mul, Add)):
            changed = True
        rebuilt.append(new)
    if changed:
        return _canon_mul([from_fraction(coeff)] + rebuilt)

    rebuilt.sort(key=sort_key)
    if coeff != 1:
        rebuilt.insert(0, from_fraction(coeff))
    if not rebuilt:
        return IntegerLit(1)
    if len(rebuilt) == 1:
        return rebuilt[0]
    return Mul(tuple(rebuilt))


def _coeff_term(e: Expr) -> tuple[Fraction, Expr]:
    if isinstance(e, Mul):
        head = as_fraction(e.args[0])
        if head is not None:
            rest = e.args[1:]
            return head, (rest[0] if len(rest) == 1 else Mul(rest))
    return Fraction(1), e


def _canon_add(args: list[Expr]) -> Expr:
    flat = _flatten(Add, args)
    const = Fraction(0)
    coeffs: dict[Expr, Fraction] = {}
    for a in flat:
        f = as_fraction(a)
        if f is not None:
            const += f
            continue
        c, term = _coeff_term(a)
        coeffs[term] = coeffs.get(term, Fraction(0)) + c
    terms: list[Expr] = []
    for term, c in coeffs.items():
        if c == 0:
            continue
        if c == 1:
            terms.append(term)
        else:
            terms.append(_canon_mul([from_fraction(c), term]))
    terms.sort(key=sort_key)
    if const != 0 or not terms:
        terms.insert(0, from_fraction(const))
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def canonicalize(e: Expr) -> Expr:
    """Normal form: flattened, literal-folded, like terms and powers
    collected, arguments in a fixed total order.  Idempotent, and exact:
    the result is numerically equivalent to the input wherever both are
    defined.  Raises DivisionByZero when folding hits a zero denominator.
    """
    match e:
        case IntegerLit(_) | RationalLit(_, _) | Var():
            return e
        case Fn(kind, arg):
            return Fn(kind, canonicalize(arg))
        case Pow(base, exponent):
            return _canon_pow(canonicalize(base), canonicalize(exponent))
        case Add(args):
            return _canon_add([canonicalize(a) for a in args])
        case Mul(args):
            return _canon_mul([canonicalize(a) for a in args])
        case _:
            raise TypeError(f"not an Expr: {e!r}")


# --------------------------------------------------------------------------
# size metrics


@dataclass(frozen=True, slots=True)
class ExprMetrics:
    """Size measures.

    token_len is the binary prefix stream length.  op_node_count counts
    binary applications: an n-ary add/mul contributes len(args)-1, pow
    and functions 1 each; literals are leaves (a rational counts 0 even
    though it serializes through div).  term_count counts top-level
    summands after flattening nested top-level adds.
    """

    token_len: int
    node_count: int
    op_node_count: int
    depth: int
    term_count: int


def _shape(e: Expr) -> tuple[int, int, int]:
    match e:
        case IntegerLit(_) | RationalLit(_, _) | Var():
            return 1, 0, 1
        case Fn(_, arg):
            n, o, d = _shape(arg)
            return n + 1, o + 1, d + 1
        case Pow(base, exponent):
            nb, ob, db = _shape(base)
            ne, oe, de = _shape(exponent)
            return nb + ne + 1, ob + oe + 1, max(db, de) + 1
        case Add(args) | Mul(args):
            shapes = [_shape(a) for a in args]
            return (
                sum(s[0] for s in shapes) + 1,
                sum(s[1] for s in shapes) + len(args) - 1,
                max(s[2] for s in shapes) + 1,
            )
        case _:
            raise TypeError(f"not an Expr: {e!r}")


def term_count(e: Expr) -> int:
    if isinstance(e, Add):
        return sum(term_count(a) for a in e.args)
    return 1


def metrics(e: Expr) -> ExprMetrics:
    nodes, ops, depth = _shape(e)
    return ExprMetrics(
        token_len=len(to_prefix(e)),
        node_count=nodes,
        op_node_count=ops,
        depth=depth,
        term_count=term_count(e),
    )


# --------------------------------------------------------------------------
# point evaluation

_TAN_POLE_EPS = 1e-6


def _finite(v: float) -> float:
    if not math.isfinite(v):
        raise DomainError("overflow to non-finite")
    return v


def eval_at(e: Expr, x0: float) -> float:
    """Evaluate at a point; exact literals convert to float at the leaf.

    Raises DomainError outside the real domain (ln/sqrt of a negative,
    0 to a negative power, a tan pole with |cos| < 1e-6) and on overflow.
    """
    match e:
        case IntegerLit(v):
            try:
                return float(v)
            except OverflowError as exc:
                raise DomainError("integer too large for float") from exc
        case RationalLit(num, den):
            try:
                return float(Fraction(num, den))
            except OverflowError as exc:
                raise DomainError("rational too large for float") from exc
        case Var():
            return float(x0)
        case Add(args):
            return _finite(sum(eval_at(a, x0) for a in args))
        case Mul(args):
            acc = 1.0
            for a in args:
                acc *= eval_at(a, x0)
            return _finite(acc)
        case Pow(base, exponent):
            b = eval_at(base, x0)
            p = eval_at(exponent, x0)
            try:
                return _finite(math.pow(b, p))
            except (ValueError, OverflowError) as exc:
                raise DomainError(f"pow({b!r}, {p!r})") from exc
        case Fn(kind, arg):
            a = eval_at(arg, x0)
            try:
                if kind == "sin":
                    return math.sin(a)
                if kind == "cos":
                    return math.cos(a)
                if kind == "tan":
                    c = math.cos(a)
                    if abs(c) < _TAN_POLE_EPS:
                        raise DomainError("tan pole")
                    return _finite(math.sin(a) / c)
                if kind == "exp":
                    return _finite(math.exp(a))
                if kind == "ln":
                    if a <= 0:
                        raise DomainError("ln of a non-positive value")
                    return math.log(a)
                if kind == "sqrt":
                    if a < 0:
                        raise DomainError("sqrt of a negative value")
                    return math.sqrt(a)
            except OverflowError as exc:
                raise DomainError(f"{kind} overflow") from exc
            raise TypeError(f"unknown function kind {kind!r}")
        case _:
            raise TypeError(f"not an Expr: {e!r}")
