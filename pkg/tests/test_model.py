"""Backend plumbing, including the wire client against live subprocesses.

The external-model tests drive real child processes (and one TCP socket)
running tiny inline protocol servers, so they exercise the exact framing
a production backend would see.
"""

import json
import socket
import sys
import threading

import pytest

from sift.expr import parse_infix, parse_prefix, to_prefix
from sift.model import (
    CachingModel,
    CandidateList,
    DecodeParams,
    ExternalModel,
    FixedModel,
    MalformedResponse,
    ModelUnavailable,
    ResponseTooLarge,
)

X_PLUS_1 = parse_infix("x + 1")


# --------------------------------------------------------------------------
# shared types


def test_decode_params_validation():
    DecodeParams(k=3, beam=3)
    with pytest.raises(ValueError):
        DecodeParams(k=0)
    with pytest.raises(ValueError):
        DecodeParams(k=5, beam=3)
    with pytest.raises(ValueError):
        DecodeParams(strategy="greedy")
    with pytest.raises(ValueError):
        DecodeParams(temperature=0.0)


def test_candidate_list_scores_must_align_and_decrease():
    with pytest.raises(ValueError):
        CandidateList((("x",),), scores=(0.9, 0.5))
    with pytest.raises(ValueError):
        CandidateList((("x",), ("INT+", "1")), scores=(0.5, 0.9))
    ok = CandidateList((("x",), ("INT+", "1")), scores=(0.9, 0.9))
    assert len(ok) == 2


def test_candidate_list_build_dedups_by_canonical_form():
    # same expression spelled two ways collapses to the first spelling
    a = to_prefix(parse_infix("x + 1"))
    b = to_prefix(parse_infix("1 + x"))
    c = to_prefix(parse_infix("x + 2"))
    listed = CandidateList.build([a, b, c])
    assert listed.candidates == (tuple(a), tuple(c))


def test_candidate_list_build_keeps_unparseable_streams_apart():
    listed = CandidateList.build([["add", "x"], ["mul", "x"], ["add", "x"]])
    assert len(listed) == 2


def test_candidate_list_build_truncates_to_k():
    seqs = [["INT+", str(n)] for n in range(10)]
    listed = CandidateList.build(seqs, k=4)
    assert len(listed) == 4


def test_fixed_model():
    m = FixedModel(("x",), fixed_score=0.25)
    listed = m.propose(X_PLUS_1, DecodeParams(k=3, beam=3))
    assert listed.candidates == (("x",),)
    assert listed.scores == (0.25,)
    assert m.score(X_PLUS_1, ("anything",)) == 0.25


# --------------------------------------------------------------------------
# caching


class _CountingModel:
    def __init__(self):
        self.proposals = 0
        self.scorings = 0

    def propose(self, problem, params):
        self.proposals += 1
        return CandidateList.build([["x"]])

    def score(self, problem, candidate):
        self.scorings += 1
        return 0.5


def test_caching_model_memoizes_propose():
    inner = _CountingModel()
    m = CachingModel(inner)
    params = DecodeParams(k=1, beam=1)
    m.propose(X_PLUS_1, params)
    m.propose(X_PLUS_1, params)
    assert inner.proposals == 1
    assert (m.hits, m.misses) == (1, 1)


def test_caching_model_keys_on_canonical_problem():
    inner = _CountingModel()
    m = CachingModel(inner)
    params = DecodeParams(k=1, beam=1)
    m.propose(parse_prefix(["add", "x", "INT+", "1"]), params)
    m.propose(parse_prefix(["add", "INT+", "1", "x"]), params)
    assert inner.proposals == 1


def test_caching_model_distinguishes_params():
    inner = _CountingModel()
    m = CachingModel(inner)
    m.propose(X_PLUS_1, DecodeParams(k=1, beam=10))
    m.propose(X_PLUS_1, DecodeParams(k=2, beam=10))
    assert inner.proposals == 2


def test_caching_model_memoizes_score():
    inner = _CountingModel()
    m = CachingModel(inner)
    assert m.score(X_PLUS_1, ("x",)) == 0.5
    assert m.score(X_PLUS_1, ("x",)) == 0.5
    m.score(X_PLUS_1, ("INT+", "1"))
    assert inner.scorings == 2


# --------------------------------------------------------------------------
# wire client over child stdio

# each server below is an inline script so the test run leaves no
# fixture files behind and the protocol stays visible at the test site

ECHO_SERVER = r"""
import json, sys
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    out = {"id": req["id"]}
    if req["op"] == "propose":
        out["candidates"] = [["INT+", str(i)] for i in range(1, req["k"] + 1)]
        out["scores"] = [1.0 / i for i in range(1, req["k"] + 1)]
    elif req["op"] == "score":
        out["scores"] = [0.5]
    else:
        out["error"] = "unknown op"
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
"""


def _stdio_model(server: str, **kw) -> ExternalModel:
    return ExternalModel(command=[sys.executable, "-c", server], **kw)


def test_external_model_propose_over_stdio():
    with _stdio_model(ECHO_SERVER) as m:
        listed = m.propose(X_PLUS_1, DecodeParams(k=3, beam=5))
    assert listed.candidates == (
        ("INT+", "1"),
        ("INT+", "2"),
        ("INT+", "3"),
    )
    assert listed.scores == (1.0, 0.5, pytest.approx(1 / 3))


def test_external_model_score_over_stdio():
    with _stdio_model(ECHO_SERVER) as m:
        assert m.score(X_PLUS_1, ("x",)) == 0.5


def test_external_model_requires_exactly_one_transport():
    with pytest.raises(ValueError):
        ExternalModel()
    with pytest.raises(ValueError):
        ExternalModel(command=["true"], address="127.0.0.1:1")


REVERSING_SERVER = r"""
import json, sys
held = None
for line in sys.stdin:
    req = json.loads(line)
    if held is None:
        held = req
        continue
    for r in (req, held):
        out = {"id": r["id"], "candidates": [list(r["prefix"])]}
        sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
    held = None
"""


def test_external_model_routes_out_of_order_responses_by_id():
    # the server answers pairs of requests newest first, so each caller
    # only gets its own answer if the client routes by id
    problems = [parse_infix("x + 7"), parse_infix("x + 8")]
    results: dict[int, CandidateList] = {}
    with _stdio_model(REVERSING_SERVER) as m:
        started = threading.Barrier(2)

        def call(i):
            started.wait()
            results[i] = m.propose(problems[i], DecodeParams(k=1, beam=1))

        threads = [threading.Thread(target=call, args=(i,)) for i in (0, 1)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    for i, problem in enumerate(problems):
        assert results[i].candidates == (tuple(to_prefix(problem)),)


BAD_SHAPE_SERVER = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    sys.stdout.write(json.dumps({"id": req["id"], "candidates": "x"}) + "\n")
    sys.stdout.flush()
"""


def test_external_model_rejects_malformed_candidates():
    with _stdio_model(BAD_SHAPE_SERVER) as m:
        with pytest.raises(MalformedResponse):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))


MISALIGNED_SCORES_SERVER = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    out = {"id": req["id"], "candidates": [["x"]], "scores": [0.9, 0.1]}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
"""


def test_external_model_rejects_misaligned_scores():
    with _stdio_model(MISALIGNED_SCORES_SERVER) as m:
        with pytest.raises(MalformedResponse):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))


OVERLONG_SERVER = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    out = {"id": req["id"], "candidates": [["x"] * 1000]}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
"""


def test_external_model_rejects_overlong_candidates():
    with _stdio_model(OVERLONG_SERVER) as m:
        with pytest.raises(ResponseTooLarge):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))
    # a raised cap admits the same stream
    with _stdio_model(OVERLONG_SERVER, token_cap=1000) as m:
        listed = m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))
        assert len(listed.candidates[0]) == 1000


ERRORING_SERVER = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    sys.stdout.write(json.dumps({"id": req["id"], "error": "boom"}) + "\n")
    sys.stdout.flush()
"""


def test_external_model_surfaces_backend_errors():
    with _stdio_model(ERRORING_SERVER) as m:
        with pytest.raises(MalformedResponse, match="boom"):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))


def test_external_model_dead_backend_is_unavailable():
    with _stdio_model("pass") as m:
        with pytest.raises(ModelUnavailable):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))


def test_external_model_times_out_on_silence():
    with _stdio_model("import time; time.sleep(60)", timeout=0.2) as m:
        with pytest.raises(ModelUnavailable):
            m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))


# --------------------------------------------------------------------------
# wire client over TCP


def _serve_one_connection(listener: socket.socket) -> None:
    conn, _ = listener.accept()
    with conn, conn.makefile("r", encoding="utf-8") as rf, conn.makefile(
        "w", encoding="utf-8"
    ) as wf:
        for line in rf:
            req = json.loads(line)
            out = {"id": req["id"], "candidates": [list(req["prefix"])]}
            wf.write(json.dumps(out) + "\n")
            wf.flush()


def test_external_model_over_tcp():
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]
    server = threading.Thread(target=_serve_one_connection, args=(listener,))
    server.start()
    try:
        with ExternalModel(address=f"127.0.0.1:{port}") as m:
            listed = m.propose(X_PLUS_1, DecodeParams(k=1, beam=1))
        assert listed.candidates == (tuple(to_prefix(X_PLUS_1)),)
    finally:
        server.join(timeout=5)
        listener.close()


def test_external_model_refused_connection_is_unavailable():
    # grab a port and close it so nothing listens there
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    with pytest.raises(ModelUnavailable):
        ExternalModel(address=f"127.0.0.1:{port}")
