import pytest
from hypothesis import given, settings, strategies as st

from sift.calculus import EquivConfig, Verdict
from sift.metrics import (
    EvalRecord,
    ScoringUnsupported,
    fail_at_k,
    failure_indicator,
    read_records,
    record_from_json,
    records_to_exprs,
    search_vs_model_report,
    summary_table,
    write_records,
)
from sift.model import CandidateList, DecodeParams, FixedModel
from sift.oracle import FaultSpec, FaultyModel, ReferenceModel
from sift.expr import parse_infix, to_prefix

COS_PROBLEMS = [parse_infix(f"{a}*cos({b}*x)") for a, b in [(30, 39), (17, 83), (2, 5), (7, 1)]]
PARAMS = DecodeParams(k=1, beam=10)


def _truth_tokens(problem):
    from sift.oracle import integrate_reference

    return tuple(to_prefix(integrate_reference(problem)))


# --------------------------------------------------------------------------
# failure indicator


def test_indicator_zero_when_listed_answer_verifies():
    problem = COS_PROBLEMS[0]
    listed = CandidateList.build([_truth_tokens(problem)])
    assert failure_indicator(problem, listed, k=1) == 0


def test_indicator_one_when_correct_answer_sits_below_k():
    problem = COS_PROBLEMS[0]
    listed = CandidateList.build(
        [tuple(to_prefix(parse_infix("x"))), _truth_tokens(problem)]
    )
    assert failure_indicator(problem, listed, k=1) == 1
    assert failure_indicator(problem, listed, k=2) == 0


def test_indicator_empty_list_fails():
    assert failure_indicator(COS_PROBLEMS[0], CandidateList(()), k=5) == 1


def test_indicator_timeout_convention():
    problem = COS_PROBLEMS[0]
    listed = CandidateList.build([_truth_tokens(problem)])
    squeezed = EquivConfig(per_candidate_budget=0.0)
    assert failure_indicator(problem, listed, k=1, cfg=squeezed) == 0
    assert (
        failure_indicator(problem, listed, k=1, cfg=squeezed, strict_timeout=True)
        == 1
    )


# --------------------------------------------------------------------------
# fail_at_k


def test_reference_model_never_fails_in_its_class():
    result = fail_at_k(COS_PROBLEMS, ReferenceModel(), PARAMS, [1, 10])
    assert result.rates == {1: 0.0, 10: 0.0}
    assert all(r.first_correct_rank == 1 for r in result.records)


def test_always_wrong_model_always_fails():
    model = FixedModel(tuple(to_prefix(parse_infix("x"))))
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 10])
    assert result.rates == {1: 1.0, 10: 1.0}


def test_planted_rank_separates_the_k_levels():
    # correct answer always present but at rank 3: k below that fails,
    # k at or above it succeeds
    model = FaultyModel(FaultSpec(p=0.0, rank_of_correct=3), seed=5)
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 2, 3, 10])
    assert result.rates == {1: 1.0, 2: 1.0, 3: 0.0, 10: 0.0}


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=10_000))
def test_rates_never_increase_with_k(seed):
    model = FaultyModel(FaultSpec(p=0.6, rank_of_correct=2), seed=seed)
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 2, 5, 10], run_seed=seed)
    rates = [result.rates[k] for k in (1, 2, 5, 10)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    for record in result.records:
        ms = [record.m_by_k[k] for k in (1, 2, 5, 10)]
        assert all(a >= b for a, b in zip(ms, ms[1:]))


def test_early_stop_matches_exhaustive_checking():
    model = FaultyModel(FaultSpec(p=0.5), seed=11)
    lazy = fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 5], run_seed=1)
    eager = fail_at_k(
        COS_PROBLEMS, model, PARAMS, [1, 5], run_seed=1, early_stop=False
    )
    assert lazy.rates == eager.rates
    for a, b in zip(lazy.records, eager.records):
        assert a.m_by_k == b.m_by_k
        assert a.first_correct_rank == b.first_correct_rank
        # the exhaustive pass keeps verifying past the first success
        assert len(a.verdicts) <= len(b.verdicts)


def test_worker_count_does_not_change_results():
    model = FaultyModel(FaultSpec(p=0.5), seed=11)
    serial = fail_at_k(COS_PROBLEMS * 4, model, PARAMS, [1, 5], run_seed=2)
    threaded = fail_at_k(
        COS_PROBLEMS * 4, model, PARAMS, [1, 5], run_seed=2, workers=4
    )
    assert serial.rates == threaded.rates
    for a, b in zip(serial.records, threaded.records):
        assert (a.index, a.m_by_k, a.first_correct_rank) == (
            b.index,
            b.m_by_k,
            b.first_correct_rank,
        )


def test_one_propose_call_per_problem():
    class Counting(FixedModel):
        calls = 0

        def propose(self, problem, params):
            Counting.calls += 1
            assert params.k == 10  # one call at the largest k
            return super().propose(problem, params)

    model = Counting(tuple(to_prefix(parse_infix("x"))))
    fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 5, 10])
    assert Counting.calls == len(COS_PROBLEMS)


def test_worst_case_bound():
    cfg = EquivConfig(per_candidate_budget=2.0)
    result = fail_at_k(COS_PROBLEMS, ReferenceModel(), PARAMS, [1, 10], cfg=cfg)
    assert result.worst_case_seconds == 10 * 2.0 * len(COS_PROBLEMS)
    assert result.total_seconds < result.worst_case_seconds


# --------------------------------------------------------------------------
# record files


def _run_records(seed=3):
    model = FaultyModel(FaultSpec(p=0.5), seed=seed)
    return fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 5], run_seed=seed)


def test_record_file_round_trip(tmp_path):
    result = _run_records()
    path = str(tmp_path / "run.records")
    write_records(path, result.records, rates=result.rates, meta={"suite": "cos"})
    header, raws = read_records(path)
    assert header["fail_at_k"] == {str(k): v for k, v in result.rates.items()}
    assert header["meta"] == {"suite": "cos"}
    assert len(raws) == len(result.records)
    for raw, record in zip(raws, result.records):
        rebuilt = record_from_json(raw)
        assert rebuilt.index == record.index
        assert rebuilt.m_by_k == record.m_by_k
        assert rebuilt.first_correct_rank == record.first_correct_rank
        assert rebuilt.candidates.candidates == record.candidates.candidates
        assert [v.status for v in rebuilt.verdicts] == [
            v.status for v in record.verdicts
        ]


def test_record_files_are_reproducible_apart_from_timestamp(tmp_path):
    a, b = str(tmp_path / "a.records"), str(tmp_path / "b.records")
    write_records(a, _run_records().records)
    write_records(b, _run_records().records)
    body = lambda p: open(p, encoding="utf-8").read().splitlines()[1:]  # noqa: E731
    assert body(a) == body(b)


def test_read_records_rejects_other_files(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text('{"format": "something-else"}\n')
    with pytest.raises(ValueError):
        read_records(str(path))


def test_records_to_exprs(tmp_path):
    result = _run_records()
    path = str(tmp_path / "run.records")
    write_records(path, result.records)
    _, raws = read_records(path)
    from sift.expr import canonicalize

    rebuilt = records_to_exprs(raws)
    assert [canonicalize(e) for e in rebuilt] == [
        canonicalize(p) for p in COS_PROBLEMS
    ]


def test_summary_table_layout():
    text = summary_table(
        {"cos": {1: 0.25, 10: 0.1}, "poly": {1: 0.0, 10: 0.0}}
    )
    lines = text.splitlines()
    assert "Fail@1" in lines[0] and "Fail@10" in lines[0]
    # rows come out sorted by label
    assert lines[2].startswith("cos") and lines[3].startswith("poly")
    assert "0.2500" in lines[2]


# --------------------------------------------------------------------------
# search vs model


def test_geometric_scorer_makes_every_failure_unresolved():
    # listed scores decay geometrically and the out-of-list score sits
    # below all of them, so the truth can never beat the k-th candidate
    model = FaultyModel(FaultSpec(p=1.0), seed=7)
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1, 5], run_seed=7)
    truths = [parse_infix("sin(x)")] * len(COS_PROBLEMS)
    report = search_vs_model_report(result.records, model, truths, [1, 5])
    assert report.n_failures == {1: len(COS_PROBLEMS), 5: len(COS_PROBLEMS)}
    assert report.unresolved == {1: 1.0, 5: 1.0}


def test_flat_scorer_resolves_every_failure():
    # a constant score ties the truth with the k-th candidate and a tie
    # is resolved: the search had no reason to rank the truth lower
    model = FixedModel(tuple(to_prefix(parse_infix("x"))))
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1])
    truths = [parse_infix("sin(x)")] * len(COS_PROBLEMS)
    report = search_vs_model_report(result.records, model, truths, [1])
    assert report.n_failures == {1: len(COS_PROBLEMS)}
    assert report.unresolved == {1: 0.0}


def test_no_failures_means_nothing_unresolved():
    model = ReferenceModel()
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1])
    truths = COS_PROBLEMS  # scoring needs the real antiderivative
    from sift.oracle import integrate_reference

    truths = [integrate_reference(p) for p in COS_PROBLEMS]
    report = search_vs_model_report(result.records, model, truths, [1])
    assert report.n_failures == {1: 0}
    assert report.unresolved == {1: 0.0}


def test_empty_candidate_list_is_unresolved():
    problem = COS_PROBLEMS[0]
    record = EvalRecord(
        index=0,
        problem=problem,
        candidates=CandidateList(()),
        verdicts=(),
        m_by_k={1: 1},
        first_correct_rank=None,
        seconds=0.0,
    )
    model = FixedModel(("x",))
    report = search_vs_model_report([record], model, [parse_infix("x")], [1])
    assert report.unresolved == {1: 1.0}
    assert report.p_at_1 == 0.0


def test_report_requires_scoring_support():
    class NoScores:
        def propose(self, problem, params):
            return CandidateList(())

        def score(self, problem, candidate):
            return None

    record = EvalRecord(
        index=0,
        problem=COS_PROBLEMS[0],
        candidates=CandidateList((("x",),)),
        verdicts=(Verdict("incorrect", 0.0, None),),
        m_by_k={1: 1},
        first_correct_rank=None,
        seconds=0.0,
    )
    with pytest.raises(ScoringUnsupported):
        search_vs_model_report([record], NoScores(), [parse_infix("x")], [1])


def test_report_requires_matching_truths():
    with pytest.raises(ValueError):
        search_vs_model_report([], FixedModel(("x",)), [parse_infix("x")], [1])


def test_report_mass_statistics():
    model = FixedModel(("x",), fixed_score=0.5)
    result = fail_at_k(COS_PROBLEMS, model, PARAMS, [1])
    report = search_vs_model_report(
        result.records, model, COS_PROBLEMS, [1]
    )
    assert report.p_at_1 == pytest.approx(0.5)
    assert report.mean_mass == pytest.approx(0.5)  # one candidate each
    assert report.mean_mass_failures == pytest.approx(0.5)
    assert report.mean_mass_successes is None  # every problem failed
