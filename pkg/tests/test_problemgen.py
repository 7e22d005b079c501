import pytest
from hypothesis import given, settings, strategies as st

from sift.calculus import differentiate, numeric_equiv, EquivConfig
from sift.expr import canonicalize, metrics, parse_infix, to_infix
from sift.model import DecodeParams
from sift.oracle import ReferenceModel
from sift.problemgen import (
    EmptyPool,
    NoGroundTruth,
    PERTURB_KINDS,
    PRIMITIVE_TEMPLATES,
    ProblemCase,
    RangeTooSmall,
    SEED_SET_NAMES,
    build_template,
    composition_suite,
    exponent_pool,
    integer_extrapolation_suite,
    load_problem_file,
    perturb_suite,
    primitives_suite,
    random_tree_suite,
    save_problem_file,
    seed_set,
    successful_pool,
    _pairs_without_replacement,
)


def _truth_checks_out(case: ProblemCase) -> bool:
    back = differentiate(case.truth)
    return back == canonicalize(case.problem) or numeric_equiv(
        back, case.problem, EquivConfig()
    )


# --------------------------------------------------------------------------
# templates and coefficient pairs


@pytest.mark.parametrize(
    "name, k1, k2, text",
    [
        ("ln", 3, 2, "3*ln(2*x)"),
        ("ln", 1, 1, "ln(x)"),
        ("exp", 2, 5, "2*exp(5*x)"),
        ("linear", 7, 99, "7*x"),  # k2 unused
        ("linear", 1, 1, "x"),
        ("power42", 26, 1, "26*x^42"),
        ("sin", 34, 77, "34*sin(77*x)"),
        ("cos", 17, 83, "17*cos(83*x)"),
        ("tan", 5, 1, "5*tan(x)"),
    ],
)
def test_build_template_forms(name, k1, k2, text):
    assert build_template(name, k1, k2) == parse_infix(text)


def test_build_template_rejects_unknown_name():
    with pytest.raises(ValueError):
        build_template("sinh", 1, 1)


def test_pairs_are_distinct_and_in_range():
    pairs = _pairs_without_replacement((1, 100), 1000, seed=4)
    assert len(pairs) == 1000
    assert len(set(pairs)) == 1000
    assert all(1 <= a <= 100 and 1 <= b <= 100 for a, b in pairs)


def test_pairs_exhaust_a_tiny_range():
    pairs = _pairs_without_replacement((1, 2), 4, seed=0)
    assert sorted(pairs) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    with pytest.raises(RangeTooSmall):
        _pairs_without_replacement((1, 2), 5, seed=0)


def test_primitives_suite_shape_and_truths():
    suites = primitives_suite((1, 100), 25, seed=9)
    assert set(suites) == set(PRIMITIVE_TEMPLATES)
    for template, cases in suites.items():
        assert len(cases) == 25
        assert all(c.family == template for c in cases)
        assert all(_truth_checks_out(c) for c in cases)


def test_primitives_suite_is_deterministic():
    a = primitives_suite((1, 100), 10, seed=1)
    b = primitives_suite((1, 100), 10, seed=1)
    c = primitives_suite((1, 100), 10, seed=2)
    assert a == b
    assert a != c


# --------------------------------------------------------------------------
# perturbations


@pytest.mark.parametrize("kind", PERTURB_KINDS)
def test_perturbed_truths_still_differentiate_back(kind):
    base = primitives_suite((1, 50), 5, seed=3, templates=("sin", "power42"))
    for cases in base.values():
        for case in perturb_suite(cases, kind, seed=3):
            assert _truth_checks_out(case)
            assert case.family.endswith("+" + kind)


def test_perturb_rejects_unknown_kind():
    with pytest.raises(ValueError):
        perturb_suite([], "negate", seed=0)


def test_perturb_requires_truths():
    case = ProblemCase(parse_infix("x"), None, "bare")
    with pytest.raises(NoGroundTruth):
        perturb_suite([case], "scale", seed=0)


# --------------------------------------------------------------------------
# compositions


def test_exponent_pool_contents():
    pool = exponent_pool((1, 10))
    texts = {to_infix(c.problem) for c in pool}
    assert "x" in texts  # c = 1 collapses both forms
    assert "x^10" in texts
    assert "x^(1/10)" in texts
    # 1 + 9 integer + 9 reciprocal exponents, no duplicates
    assert len(pool) == 19
    assert all(_truth_checks_out(c) for c in pool)


def test_exponent_pool_rejects_bad_range():
    with pytest.raises(RangeTooSmall):
        exponent_pool((0, 5))
    with pytest.raises(RangeTooSmall):
        exponent_pool((5, 1))


@pytest.mark.parametrize("arity", [2, 3, 4])
def test_composition_truths_add_up(arity):
    pool = exponent_pool((1, 20))
    cases = composition_suite(pool, arity, 10, seed=6)
    assert len(cases) == 10
    for case in cases:
        assert len(case.problem.args) == arity
        assert _truth_checks_out(case)
        assert case.family == f"composition{arity}"


def test_composition_guards():
    pool = exponent_pool((1, 5))
    with pytest.raises(EmptyPool):
        composition_suite([], 2, 1, seed=0)
    with pytest.raises(ValueError):
        composition_suite(pool, 1, 1, seed=0)
    bare = ProblemCase(parse_infix("x"), None, "bare")
    with pytest.raises(NoGroundTruth):
        composition_suite([bare], 2, 1, seed=0)


# --------------------------------------------------------------------------
# extrapolation buckets


def test_extrapolation_labels_and_ranges():
    buckets = [(1, 100), (100, 500), (500, 1000)]
    out = integer_extrapolation_suite("cos", buckets, 8, seed=2)
    assert list(out) == ["cos[1,100]", "cos[100,500]", "cos[500,1000]"]
    for label, cases in out.items():
        assert len(cases) == 8
        for case in cases:
            assert case.family == label
            assert _truth_checks_out(case)


# --------------------------------------------------------------------------
# random trees


@settings(max_examples=40)
@given(
    st.integers(min_value=0, max_value=8),
    st.integers(min_value=0, max_value=1000),
)
def test_random_trees_have_exact_operator_count(ops, seed):
    for case in random_tree_suite(ops, 3, seed):
        assert metrics(case.problem).op_node_count == ops
        assert case.verify_only
        assert case.truth is None


def test_random_tree_suite_is_deterministic():
    a = random_tree_suite(5, 20, seed=8)
    b = random_tree_suite(5, 20, seed=8)
    assert a == b


def test_random_tree_suite_rejects_negative_budget():
    with pytest.raises(ValueError):
        random_tree_suite(-1, 1, seed=0)


# --------------------------------------------------------------------------
# seed sets


def test_seed_set_names_and_sizes():
    assert SEED_SET_NAMES == ("default", "poly", "trig", "trig-general")
    assert len(seed_set("default")) == 4
    for name in ("poly", "trig", "trig-general"):
        assert len(seed_set(name)) == 9


def test_seed_set_unknown_name():
    with pytest.raises(ValueError):
        seed_set("frobnicate")


def test_trig_seed_sets_differ_only_in_the_head():
    trig = seed_set("trig")
    general = seed_set("trig-general")
    assert trig[4:] == general[4:]
    assert trig[:4] != general[:4]


# --------------------------------------------------------------------------
# problem files


def test_problem_file_round_trip(tmp_path):
    pool = exponent_pool((1, 6))
    bare = random_tree_suite(3, 4, seed=1)
    path = str(tmp_path / "cases.problems")
    save_problem_file(path, pool + bare)
    loaded = load_problem_file(path)
    assert len(loaded) == len(pool) + len(bare)
    for original, again in zip(pool + bare, loaded):
        assert canonicalize(again.problem) == canonicalize(original.problem)
        if original.truth is None:
            assert again.truth is None
        else:
            assert canonicalize(again.truth) == canonicalize(original.truth)


def test_problem_file_skips_comments_and_blanks(tmp_path):
    path = tmp_path / "cases.problems"
    path.write_text("# header\n\nx + 1\t x^2/2 + x \n\n# tail\n2*x\n")
    loaded = load_problem_file(str(path))
    assert [to_infix(c.problem) for c in loaded] == ["x + 1", "2*x"]
    assert loaded[0].truth is not None
    assert loaded[1].truth is None


# --------------------------------------------------------------------------
# pool filtering


def test_successful_pool_keeps_what_the_model_solves():
    solvable = exponent_pool((2, 5))
    hard = [ProblemCase(parse_infix("sin(x^2)"), None, "hard", verify_only=True)]
    kept = successful_pool(hard + solvable, ReferenceModel(), DecodeParams(k=1, beam=1))
    assert kept == solvable
