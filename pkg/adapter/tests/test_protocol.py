"""Protocol behaviour driven as raw JSON, the way a harness sees it."""

import json
import socket
import subprocess
import sys
import textwrap

import pytest

from seqserve import AdapterConfig, ConfigError, handle_line, load_backend, stub_backend

STUB = stub_backend(("mul", "INT+", "2", "x"), 0.25)


def _ask(payload, backend=STUB, cap=512):
    line = payload if isinstance(payload, str) else json.dumps(payload)
    return handle_line(line, backend, cap)


# --------------------------------------------------------------------------
# configuration invariants


def test_config_needs_exactly_one_backend():
    with pytest.raises(ConfigError):
        AdapterConfig()
    with pytest.raises(ConfigError):
        AdapterConfig(stub_candidate=("x",), backend_path="mod:fn")
    AdapterConfig(stub_candidate=("x",))
    AdapterConfig(backend_path="mod:fn")


def test_config_rejects_empty_candidate_and_bad_cap():
    with pytest.raises(ConfigError):
        AdapterConfig(stub_candidate=())
    with pytest.raises(ConfigError):
        AdapterConfig(stub_candidate=("x",), token_cap=0)


def test_load_backend_rejects_bad_paths():
    with pytest.raises(ConfigError):
        load_backend(AdapterConfig(backend_path="no_colon"))
    with pytest.raises(ConfigError):
        load_backend(AdapterConfig(backend_path="nowhere.at.all:fn"))
    with pytest.raises(ConfigError):
        load_backend(AdapterConfig(backend_path="json:__doc__"))  # not callable


# --------------------------------------------------------------------------
# one line in, one response out


def test_propose_echoes_the_fixed_candidate():
    response = _ask(
        {"id": 3, "op": "propose", "prefix": ["x"], "k": 5, "beam": 10,
         "strategy": "beam", "temperature": 1.0}
    )
    assert response == {
        "id": 3, "candidates": [["mul", "INT+", "2", "x"]], "scores": [0.25]
    }


def test_score_answers_the_fixed_constant():
    response = _ask(
        {"id": 4, "op": "score", "prefix": ["x"], "candidate": ["x"]}
    )
    assert response == {"id": 4, "scores": [0.25]}


@pytest.mark.parametrize(
    "payload, expect_id",
    [
        ("this is not json", None),
        ("42", None),
        ('{"op": "propose"}', None),
        ({"id": 7, "op": "transmogrify"}, 7),
        ({"id": 8, "op": "propose", "prefix": "x", "k": 1}, 8),
        ({"id": 9, "op": "propose", "prefix": ["x", 3], "k": 1}, 9),
        ({"id": 10, "op": "propose", "prefix": ["x"], "k": 0}, 10),
        ({"id": 11, "op": "propose", "prefix": ["x"], "k": True}, 11),
        ({"id": 12, "op": "propose", "prefix": ["x"]}, 12),
        ({"id": 13, "op": "score", "prefix": ["x"]}, 13),
        ({"id": 14, "op": "score", "prefix": ["x"], "candidate": [1]}, 14),
    ],
)
def test_malformed_requests_get_error_responses(payload, expect_id):
    response = _ask(payload)
    assert response["error"]
    assert response["id"] == expect_id


def test_backend_exception_becomes_an_error_response():
    def moody(request):
        raise RuntimeError("no answers today")

    response = _ask(
        {"id": 1, "op": "propose", "prefix": ["x"], "k": 1}, backend=moody
    )
    assert response["id"] == 1 and "no answers today" in response["error"]


def test_overlong_candidate_is_refused_not_sent():
    def verbose(request):
        return {"candidates": [["x"] * 100]}

    response = _ask(
        {"id": 2, "op": "propose", "prefix": ["x"], "k": 1},
        backend=verbose, cap=8,
    )
    assert response["id"] == 2 and "exceeds cap" in response["error"]


# --------------------------------------------------------------------------
# whole processes over standard streams

CMD = [sys.executable, "-m", "seqserve", "--stub", "mul INT+ 2 x", "--score", "0.25"]


def _converse(lines, command=CMD, timeout=20):
    proc = subprocess.run(
        command, input="".join(line + "\n" for line in lines),
        capture_output=True, text=True, timeout=timeout,
    )
    return proc, [json.loads(line) for line in proc.stdout.splitlines()]


def test_stdio_roundtrip_and_eof_exit():
    requests = [
        json.dumps({"id": i, "op": "propose", "prefix": ["x"], "k": 1,
                    "beam": 10, "strategy": "beam", "temperature": 1.0})
        for i in (5, 2, 9)
    ]
    proc, answers = _converse(requests)
    assert proc.returncode == 0
    assert [a["id"] for a in answers] == [5, 2, 9]
    assert all(a["candidates"] == [["mul", "INT+", "2", "x"]] for a in answers)


def test_stream_survives_garbage_between_requests():
    requests = [
        json.dumps({"id": 1, "op": "score", "prefix": ["x"], "candidate": ["x"]}),
        "garbage",
        '{"op": "propose"}',
        json.dumps({"id": 2, "op": "score", "prefix": ["x"], "candidate": ["x"]}),
    ]
    proc, answers = _converse(requests)
    assert proc.returncode == 0
    assert [a.get("id") for a in answers] == [1, None, None, 2]
    assert answers[1]["error"] and answers[2]["error"]
    assert answers[0] == answers[3] | {"id": 1}


def test_cli_rejects_backend_ambiguity():
    proc = subprocess.run(
        [sys.executable, "-m", "seqserve", "--stub", "x", "--backend", "m:f"],
        capture_output=True, text=True, timeout=20,
    )
    assert proc.returncode == 1
    assert "exactly one" in proc.stderr


def test_user_backend_module(tmp_path):
    (tmp_path / "echoback.py").write_text(
        textwrap.dedent(
            """
            def answer(request):
                if request["op"] == "propose":
                    return {"candidates": [list(request["prefix"])] * request["k"],
                            "scores": [1.0 / (i + 1) for i in range(request["k"])]}
                return {"scores": [0.125]}
            """
        )
    )
    import os

    env = dict(os.environ, PYTHONPATH=str(tmp_path))
    proc = subprocess.run(
        [sys.executable, "-m", "seqserve", "--backend", "echoback:answer"],
        input=json.dumps({"id": 0, "op": "propose", "prefix": ["sin", "x"],
                          "k": 2, "beam": 10, "strategy": "beam",
                          "temperature": 1.0}) + "\n",
        capture_output=True, text=True, timeout=20, env=env,
    )
    assert proc.returncode == 0
    answer = json.loads(proc.stdout.splitlines()[0])
    assert answer == {
        "id": 0,
        "candidates": [["sin", "x"], ["sin", "x"]],
        "scores": [1.0, 0.5],
    }


# --------------------------------------------------------------------------
# TCP mode


def test_tcp_serves_consecutive_connections():
    proc = subprocess.Popen(
        CMD[:3] + ["--stub", "x", "--tcp", "127.0.0.1:0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, bufsize=1,
    )
    try:
        assert proc.stderr is not None
        banner = proc.stderr.readline()
        assert banner.startswith("listening on ")
        host, _, port = banner.split()[-1].rpartition(":")
        for attempt in range(2):
            with socket.create_connection((host, int(port)), timeout=10) as conn:
                writer = conn.makefile("w", encoding="utf-8")
                reader = conn.makefile("r", encoding="utf-8")
                writer.write(json.dumps(
                    {"id": attempt, "op": "score", "prefix": ["x"],
                     "candidate": ["x"]}) + "\n")
                writer.flush()
                answer = json.loads(reader.readline())
                assert answer == {"id": attempt, "scores": [0.5]}
    finally:
        proc.terminate()
        proc.wait(timeout=10)
