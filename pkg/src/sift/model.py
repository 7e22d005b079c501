"""Integrator backends: the interface, caching, and the wire client.

An integrator proposes candidate antiderivatives as prefix token
streams and can score a single candidate.  In-process backends live in
oracle.py; this module owns the shared types plus the client for an
external model speaking newline-delimited JSON over child stdio or TCP:

    request:  {"id": .., "op": "propose"|"score", "prefix": [..],
               "k": .., "beam": .., "strategy": .., "temperature": ..,
               "candidate": [..]}
    response: {"id": .., "candidates": [[..], ..], "scores": [..],
               "error": ".."}

Responses may arrive out of order; they are matched by id.
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from .expr import Expr, PrefixError, canonicalize, parse_prefix, to_prefix

TokenSeq = tuple[str, ...]

DEFAULT_TOKEN_CAP = 512


class ModelError(Exception):
    pass


class ModelUnavailable(ModelError):
    """The backend process or connection failed."""


class MalformedResponse(ModelError):
    """The backend answered with something outside the protocol."""


class ResponseTooLarge(ModelError):
    """A candidate stream exceeded the per-candidate token cap."""


@dataclass(frozen=True)
class DecodeParams:
    k: int = 1
    beam: int = 10
    strategy: str = "beam"
    temperature: float = 1.0

    def __post_init__(self):
        if not 1 <= self.k <= self.beam:
            raise ValueError(f"need 1 <= k <= beam, got k={self.k} beam={self.beam}")
        if self.strategy not in ("beam", "sample"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def _canonical_key(tokens: TokenSeq) -> object:
    try:
        return canonicalize(parse_prefix(tokens))
    except (PrefixError, ArithmeticError, RecursionError):
        return ("raw",) + tokens


@dataclass(frozen=True)
class CandidateList:
    """Ranked candidates; scores, when present, are non-increasing."""

    candidates: tuple[TokenSeq, ...]
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.scores is not None:
            if len(self.scores) != len(self.candidates):
                raise ValueError("scores and candidates must align")
            if any(a < b for a, b in zip(self.scores, self.scores[1:])):
                raise ValueError("scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.candidates)

    @classmethod
    def build(
        cls,
        sequences: Sequence[Sequence[str]],
        scores: Sequence[float] | None = None,
        k: int | None = None,
    ) -> "CandidateList":
        """Dedup by canonical form (rank order preserved), truncate to k."""
        kept: list[TokenSeq] = []
        kept_scores: list[float] = []
        seen: set[object] = set()
        for i, seq in enumerate(sequences):
            tokens = tuple(seq)
            key = _canonical_key(tokens)
            if key in seen:
                continue
            seen.add(key)
            kept.append(tokens)
            if scores is not None:
                kept_scores.append(float(scores[i]))
            if k is not None and len(kept) >= k:
                break
        return cls(tuple(kept), tuple(kept_scores) if scores is not None else None)


@runtime_checkable
class Integrator(Protocol):
    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList: ...

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None: ...


@dataclass
class FixedModel:
    """Answers every problem with one configured candidate and score.

    The in-process twin of the external stub adapter, used to check
    protocol conformance end to end.
    """

    candidate: TokenSeq
    fixed_score: float = 0.5

    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList:
        return CandidateList.build([self.candidate], [self.fixed_score], k=params.k)

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None:
        return self.fixed_score


class CachingModel:
    """Memoizes propose/score on (canonical problem tokens, params).

    Backends are deterministic by contract, so cached and uncached runs
    are bit-identical.  Thread safe.
    """

    def __init__(self, inner: Integrator):
        self.inner = inner
        self._lock = threading.Lock()
        self._propose: dict[object, CandidateList] = {}
        self._score: dict[object, float | None] = {}
        self.hits = 0
        self.misses = 0

    def _problem_key(self, problem: Expr) -> tuple[str, ...]:
        return tuple(to_prefix(canonicalize(problem)))

    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList:
        key = (self._problem_key(problem), params)
        with self._lock:
            if key in self._propose:
                self.hits += 1
                return self._propose[key]
        result = self.inner.propose(problem, params)
        with self._lock:
            self.misses += 1
            self._propose[key] = result
        return result

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None:
        key = (self._problem_key(problem), tuple(candidate))
        with self._lock:
            if key in self._score:
                self.hits += 1
                return self._score[key]
        result = self.inner.score(problem, candidate)
        with self._lock:
            self.misses += 1
            self._score[key] = result
        return result


# --------------------------------------------------------------------------
# external backend


class _Transport:
    def send_line(self, line: str) -> None:
        raise NotImplementedError

    def readline(self) -> str:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _ProcessTransport(_Transport):
    def __init__(self, command: Sequence[str]):
        try:
            self.proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ModelUnavailable(f"could not start {command!r}: {exc}") from exc

    def send_line(self, line: str) -> None:
        try:
            assert self.proc.stdin is not None
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ModelUnavailable(f"backend stdin closed: {exc}") from exc

    def readline(self) -> str:
        assert self.proc.stdout is not None
        try:
            return self.proc.stdout.readline()
        except (OSError, ValueError):
            return ""

    def close(self) -> None:
        # closing stdin is the polite shutdown: servers reading it see
        # EOF and exit on their own; terminate covers the rest
        if self.proc.stdin is not None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _TcpTransport(_Transport):
    def __init__(self, host: str, port: int, connect_timeout: float = 10.0):
        try:
            self.sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise ModelUnavailable(f"could not connect to {host}:{port}: {exc}") from exc
        self.sock.settimeout(None)
        self._reader = self.sock.makefile("r", encoding="utf-8")
        self._writer = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
        except OSError as exc:
            raise ModelUnavailable(f"connection lost: {exc}") from exc

    def readline(self) -> str:
        try:
            return self._reader.readline()
        except (OSError, ValueError):
            return ""

    def close(self) -> None:
        # shutdown first: it delivers EOF to both ends even while the
        # makefile wrappers still hold the descriptor, unblocking any
        # reader before the buffers are torn down
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        for handle in (self._reader, self._writer, self.sock):
            try:
                handle.close()
            except OSError:
                pass


class ExternalModel:
    """Client for a wire-protocol backend.

    Exactly one of command (child process over stdio) or address
    ("host:port" TCP) selects the transport.  A reader thread routes
    responses to the issuing call by id, so slow answers for one request
    do not block others and out-of-order responses are fine.
    """

    def __init__(
        self,
        command: Sequence[str] | None = None,
        address: str | None = None,
        token_cap: int = DEFAULT_TOKEN_CAP,
        timeout: float = 60.0,
    ):
        if (command is None) == (address is None):
            raise ValueError("pass exactly one of command or address")
        if command is not None:
            self._transport: _Transport = _ProcessTransport(command)
        else:
            host, _, port = str(address).rpartition(":")
            self._transport = _TcpTransport(host or "127.0.0.1", int(port))
        self.token_cap = token_cap
        self.timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._pending: dict[int, queue.Queue] = {}
        self._dead: Exception | None = None
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    # -- plumbing

    def _read_loop(self) -> None:
        while True:
            line = self._transport.readline()
            if not line:
                self._fail(ModelUnavailable("backend stream ended"))
                return
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                rid = payload["id"]
            except (json.JSONDecodeError, TypeError, KeyError):
                self._fail(MalformedResponse(f"unroutable response line: {line[:200]}"))
                return
            with self._lock:
                slot = self._pending.get(rid)
            if slot is not None:
                slot.put(payload)

    def _fail(self, exc: Exception) -> None:
        with self._lock:
            self._dead = exc
            pending = list(self._pending.values())
        for slot in pending:
            slot.put(exc)

    def _call(self, payload: dict) -> dict:
        with self._lock:
            if self._dead is not None:
                raise self._dead
            rid = self._next_id
            self._next_id += 1
            slot: queue.Queue = queue.Queue()
            self._pending[rid] = slot
        payload = {"id": rid, **payload}
        try:
            self._transport.send_line(json.dumps(payload))
            try:
                answer = slot.get(timeout=self.timeout)
            except queue.Empty:
                raise ModelUnavailable(f"no response within {self.timeout}s") from None
        finally:
            with self._lock:
                self._pending.pop(rid, None)
        if isinstance(answer, Exception):
            raise answer
        if answer.get("error"):
            raise MalformedResponse(f"backend error: {answer['error']}")
        return answer

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "ExternalModel":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- integrator interface

    def propose(self, problem: Expr, params: DecodeParams) -> CandidateList:
        answer = self._call(
            {
                "op": "propose",
                "prefix": to_prefix(problem),
                "k": params.k,
                "beam": params.beam,
                "strategy": params.strategy,
                "temperature": params.temperature,
            }
        )
        raw = answer.get("candidates")
        if not isinstance(raw, list) or any(
            not isinstance(c, list) or any(not isinstance(t, str) for t in c)
            for c in raw
        ):
            raise MalformedResponse("candidates must be a list of token lists")
        for c in raw:
            if len(c) > self.token_cap:
                raise ResponseTooLarge(
                    f"candidate of {len(c)} tokens exceeds cap {self.token_cap}"
                )
        scores = answer.get("scores")
        if scores is not None:
            if not isinstance(scores, list) or len(scores) != len(raw):
                raise MalformedResponse("scores must align with candidates")
            try:
                scores = [float(s) for s in scores]
            except (TypeError, ValueError) as exc:
                raise MalformedResponse("scores must be numbers") from exc
        try:
            return CandidateList.build(raw, scores, k=params.k)
        except ValueError as exc:
            raise MalformedResponse(str(exc)) from exc

    def score(self, problem: Expr, candidate: TokenSeq) -> float | None:
        answer = self._call(
            {
                "op": "score",
                "prefix": to_prefix(problem),
                "candidate": list(candidate),
            }
        )
        scores = answer.get("scores")
        if scores is None:
            return None
        if not isinstance(scores, list) or len(scores) != 1:
            raise MalformedResponse("score response needs a one-element scores list")
        try:
            return float(scores[0])
        except (TypeError, ValueError) as exc:
            raise MalformedResponse("scores must be numbers") from exc
