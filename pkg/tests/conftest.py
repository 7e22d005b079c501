"""Shared strategies for building random expression trees.

The prefix token format left-nests n-ary nodes, so Add((Add((a,b)),c))
and Add((a,b,c)) serialize identically; generators therefore never put
a same-kind node in first-child position, keeping token round-trips
exact tree identity instead of identity up to flattening.
"""

import math

import hypothesis.strategies as st
from hypothesis import settings

from sift.expr import Add, Fn, FN_KINDS, IntegerLit, Mul, Pow, RationalLit, X

settings.register_profile("sift", deadline=None, max_examples=100)
settings.load_profile("sift")


small_ints = st.integers(min_value=-50, max_value=50)
positive_ints = st.integers(min_value=1, max_value=50)


@st.composite
def rationals(draw):
    num = draw(st.integers(min_value=-30, max_value=30))
    den = draw(st.integers(min_value=2, max_value=30))
    if num % den == 0:
        num += 1
    g = math.gcd(num, den)
    return RationalLit(num // g, den // g)


leaves = st.one_of(
    st.just(X),
    small_ints.map(IntegerLit),
    rationals(),
)


def _add(children):
    return st.tuples(
        children.filter(lambda e: not isinstance(e, Add)),
        st.lists(children, min_size=1, max_size=3),
    ).map(lambda t: Add((t[0], *t[1])))


def _mul(children):
    return st.tuples(
        children.filter(lambda e: not isinstance(e, Mul)),
        st.lists(children, min_size=1, max_size=3),
    ).map(lambda t: Mul((t[0], *t[1])))


def _pow(children):
    # exponents stay literal so evaluation does not explode
    return st.tuples(children, st.integers(min_value=-4, max_value=4)).map(
        lambda t: Pow(t[0], IntegerLit(t[1]))
    )


def _fn(children):
    return st.tuples(st.sampled_from(FN_KINDS), children).map(
        lambda t: Fn(t[0], t[1])
    )


def expr_trees(max_leaves: int = 12):
    """Arbitrary well-formed trees; no same-kind first children."""
    return st.recursive(
        leaves,
        lambda children: st.one_of(
            _add(children), _mul(children), _pow(children), _fn(children)
        ),
        max_leaves=max_leaves,
    )


def shallow_trees():
    return expr_trees(max_leaves=6)
