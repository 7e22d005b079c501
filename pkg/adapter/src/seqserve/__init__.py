"""Model-side server for the integrator wire protocol.

Speaks newline-delimited JSON over standard streams or TCP:

    request:  {"id": .., "op": "propose"|"score", "prefix": [..],
               "k": .., "beam": .., "strategy": .., "temperature": ..,
               "candidate": [..]}
    response: {"id": .., "candidates": [[..], ..], "scores": [..],
               "error": ".."}

Token lists pass through verbatim; this side never parses expressions,
so the harness keeps the single source of truth for the algebra.  A
malformed request gets an error response carrying the request id when
one could be read, and the stream stays open for the next request.

Backends are callables from a decoded request dict to the response
body (everything but the id).  The built-in stub answers every propose
with one fixed candidate and every score with one fixed constant,
which makes conformance checks against an in-process twin exact.
"""

from __future__ import annotations

import importlib
import json
import logging
import socket
import sys
from dataclasses import dataclass
from typing import Callable, IO

__all__ = [
    "AdapterConfig",
    "ConfigError",
    "StreamLost",
    "handle_line",
    "serve",
    "stub_backend",
]

log = logging.getLogger("seqserve")

DEFAULT_TOKEN_CAP = 512

Backend = Callable[[dict], dict]


class ConfigError(ValueError):
    pass


class StreamLost(Exception):
    """The outgoing stream failed mid-answer; the server cannot go on."""


@dataclass(frozen=True)
class AdapterConfig:
    """Exactly one backend (stub candidate or module path) and one
    listen mode (standard streams unless a TCP address is given)."""

    stub_candidate: tuple[str, ...] | None = None
    stub_score: float = 0.5
    backend_path: str | None = None
    tcp: str | None = None
    token_cap: int = DEFAULT_TOKEN_CAP

    def __post_init__(self):
        if (self.stub_candidate is None) == (self.backend_path is None):
            raise ConfigError("pass exactly one of a stub candidate or a backend path")
        if self.stub_candidate is not None and not self.stub_candidate:
            raise ConfigError("stub candidate needs at least one token")
        if self.token_cap < 1:
            raise ConfigError("token cap must be positive")


def stub_backend(candidate: tuple[str, ...], score: float) -> Backend:
    fixed = list(candidate)

    def answer(request: dict) -> dict:
        if request["op"] == "propose":
            return {"candidates": [list(fixed)], "scores": [score]}
        return {"scores": [score]}

    return answer


def load_backend(cfg: AdapterConfig) -> Backend:
    if cfg.stub_candidate is not None:
        return stub_backend(cfg.stub_candidate, cfg.stub_score)
    modname, _, attr = str(cfg.backend_path).partition(":")
    if not modname or not attr:
        raise ConfigError(f"backend path {cfg.backend_path!r} is not MODULE:ATTR")
    try:
        backend = getattr(importlib.import_module(modname), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot load backend {cfg.backend_path!r}: {exc}") from exc
    if not callable(backend):
        raise ConfigError(f"backend {cfg.backend_path!r} is not callable")
    return backend


# --------------------------------------------------------------------------
# request handling


def _token_list(value: object) -> bool:
    return isinstance(value, list) and all(isinstance(t, str) for t in value)


def handle_line(line: str, backend: Backend, token_cap: int) -> dict:
    """One request line to one response object; never raises.

    Anything that cannot be answered properly becomes an error response,
    with the request id whenever one could be recovered.
    """
    try:
        request = json.loads(line)
    except json.JSONDecodeError:
        return {"id": None, "error": "request is not JSON"}
    if not isinstance(request, dict):
        return {"id": None, "error": "request must be an object"}
    if "id" not in request:
        return {"id": None, "error": "request has no id"}
    rid = request["id"]

    op = request.get("op")
    if op not in ("propose", "score"):
        return {"id": rid, "error": f"unknown op {op!r}"}
    if not _token_list(request.get("prefix")):
        return {"id": rid, "error": "prefix must be a list of token strings"}
    if op == "propose":
        k = request.get("k")
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            return {"id": rid, "error": "k must be a positive integer"}
    else:
        if not _token_list(request.get("candidate")):
            return {"id": rid, "error": "candidate must be a list of token strings"}

    try:
        body = backend(request)
    except Exception as exc:  # a user backend must not take the server down
        log.warning("backend failed on request %r: %s", rid, exc)
        return {"id": rid, "error": f"backend failure: {exc}"}
    for candidate in body.get("candidates") or ():
        if len(candidate) > token_cap:
            return {
                "id": rid,
                "error": f"candidate of {len(candidate)} tokens exceeds cap {token_cap}",
            }
    return {"id": rid, **body}


def _serve_stream(lines: IO[str], out: IO[str], backend: Backend, token_cap: int) -> None:
    for line in lines:
        line = line.strip()
        if not line:
            continue
        response = handle_line(line, backend, token_cap)
        if response.get("error"):
            log.warning("answering error: %s", response["error"])
        try:
            out.write(json.dumps(response) + "\n")
            out.flush()
        except (BrokenPipeError, OSError) as exc:
            raise StreamLost(str(exc)) from exc


def serve(cfg: AdapterConfig) -> None:
    """Answer requests until end-of-input (or a signal, under TCP).

    Standard-streams mode returns on EOF.  TCP mode accepts connections
    one at a time, forever; the bound address is announced on stderr so
    callers may bind port 0.
    """
    backend = load_backend(cfg)
    if cfg.tcp is None:
        _serve_stream(sys.stdin, sys.stdout, backend, cfg.token_cap)
        return

    host, _, port = cfg.tcp.rpartition(":")
    listener = socket.create_server((host or "127.0.0.1", int(port)))
    bound_host, bound_port = listener.getsockname()[:2]
    print(f"listening on {bound_host}:{bound_port}", file=sys.stderr, flush=True)
    with listener:
        while True:
            conn, _ = listener.accept()
            with conn:
                reader = conn.makefile("r", encoding="utf-8")
                writer = conn.makefile("w", encoding="utf-8")
                try:
                    _serve_stream(reader, writer, backend, cfg.token_cap)
                except StreamLost:
                    # this client is gone; the listener is still fine
                    log.warning("connection lost mid-answer")
