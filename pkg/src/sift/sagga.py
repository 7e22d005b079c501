"""Genetic search for archives of verified failure cases.

Each generation mutates a seed population, scores the children with a
failure-weighted fitness against the target integrator, archives every
child above the fitness threshold (deduplicated by canonical form), and
reseeds from the highest-fitness member of each embedding cluster so
the archive stays diverse.  The loop ends when the archive reaches the
requested size or the generation cap.

Determinism: every mutation stream derives from (run seed, generation,
seed index, child index), clustering from (run seed, generation), and
verification from (run seed, child tokens), so a run is a pure function
of its configuration and archives replay byte-identically, including
across checkpoint resume.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .calculus import EquivConfig, Verdict
from .expr import (
    Add,
    DivisionByZero,
    DomainError,
    Expr,
    Fn,
    IntegerLit,
    Mul,
    Pow,
    RationalLit,
    Var,
    X,
    canonicalize,
    eval_at,
    metrics,
    parse_infix,
    parse_prefix,
    to_infix,
    to_prefix,
)
from .metrics import _evaluate
from .model import CandidateList, DecodeParams, Integrator, ModelUnavailable
from .util import derive_seed, stable_bucket


class NoApplicableSite(ValueError):
    """The tree has no node admitting an enabled mutation."""


class TooFewPoints(ValueError):
    """Fewer points than clusters."""


# --------------------------------------------------------------------------
# mutations

INTERNAL_MUTATIONS = ("constant", "symbol", "operation", "add_arg")
LEAF_MUTATIONS = ("constant", "symbol", "simple_op")


@dataclass(frozen=True)
class MutationConfig:
    """Which mutations are enabled and the integer draw range.

    Internal-node mutations: replace the node with a drawn constant,
    replace it with x, swap its operation within {add, mul, pow}, or
    append an argument (a drawn simple term; a one-argument function
    gets it added inside its argument).  Leaf mutations: redraw a
    literal leaf's value, replace a leaf with k*x, or replace a leaf
    with k1 op x^k2 for op in {*, **, /} and k2 in {1, 2}.
    """

    internal: tuple[str, ...] = INTERNAL_MUTATIONS
    leaf: tuple[str, ...] = LEAF_MUTATIONS
    value_range: tuple[int, int] = (-1000, 1000)

    def __post_init__(self):
        for m in self.internal:
            if m not in INTERNAL_MUTATIONS:
                raise ValueError(f"unknown internal mutation {m!r}")
        for m in self.leaf:
            if m not in LEAF_MUTATIONS:
                raise ValueError(f"unknown leaf mutation {m!r}")
        if not self.internal and not self.leaf:
            raise ValueError("no mutations enabled")


CONSTANTS_ONLY = MutationConfig(internal=(), leaf=("constant",))


def _draw_int(cfg: MutationConfig, rng: random.Random) -> int:
    return rng.randint(cfg.value_range[0], cfg.value_range[1])


def simple_op(cfg: MutationConfig, rng: random.Random) -> Expr:
    """A drawn simple term: k1 op x^k2, op in {*, **, /}, k2 in {1, 2}."""
    k1 = IntegerLit(_draw_int(cfg, rng))
    k2 = rng.choice((1, 2))
    xk: Expr = X if k2 == 1 else Pow(X, IntegerLit(k2))
    op = rng.choice(("mul", "pow", "div"))
    if op == "mul":
        return Mul((k1, xk))
    if op == "pow":
        return Pow(k1, xk)
    return Mul((k1, Pow(xk, IntegerLit(-1))))


def _node_paths(e: Expr) -> list[tuple[tuple[int, ...], Expr]]:
    out: list[tuple[tuple[int, ...], Expr]] = []

    def walk(node: Expr, path: tuple[int, ...]) -> None:
        out.append((path, node))
        match node:
            case Add(args) | Mul(args):
                for i, a in enumerate(args):
                    walk(a, path + (i,))
            case Pow(base, exponent):
                walk(base, path + (0,))
                walk(exponent, path + (1,))
            case Fn(_, arg):
                walk(arg, path + (0,))

    walk(e, ())
    return out


def _replace(e: Expr, path: tuple[int, ...], value: Expr) -> Expr:
    if not path:
        return value
    i, rest = path[0], path[1:]
    match e:
        case Add(args):
            return Add(args[:i] + (_replace(args[i], rest, value),) + args[i + 1 :])
        case Mul(args):
            return Mul(args[:i] + (_replace(args[i], rest, value),) + args[i + 1 :])
        case Pow(base, exponent):
            if i == 0:
                return Pow(_replace(base, rest, value), exponent)
            return Pow(base, _replace(exponent, rest, value))
        case Fn(kind, arg):
            return Fn(kind, _replace(arg, rest, value))
    raise ValueError("path does not exist")


def _applicable(node: Expr, cfg: MutationConfig) -> list[tuple[str, str]]:
    """(site kind, mutation name) pairs enabled at this node."""
    found: list[tuple[str, str]] = []
    is_leaf = isinstance(node, (IntegerLit, RationalLit, Var))
    if is_leaf:
        for m in cfg.leaf:
            if m == "constant" and not isinstance(node, (IntegerLit, RationalLit)):
                # value redraw needs a literal; replacing x is the
                # symbol/simple_op mutations' job
                continue
            found.append(("leaf", m))
        return found
    for m in cfg.internal:
        if m == "operation" and not isinstance(node, (Add, Mul, Pow)):
            continue
        if m == "add_arg" and not isinstance(node, (Add, Mul, Fn)):
            continue
        found.append(("internal", m))
    return found


def _apply_mutation(
    node: Expr, site: str, mutation: str, cfg: MutationConfig, rng: random.Random
) -> Expr:
    if site == "leaf":
        if mutation == "constant":
            return IntegerLit(_draw_int(cfg, rng))
        if mutation == "symbol":
            k = _draw_int(cfg, rng)
            return Mul((IntegerLit(k), X)) if k != 1 else X
        return simple_op(cfg, rng)
    if mutation == "constant":
        return IntegerLit(_draw_int(cfg, rng))
    if mutation == "symbol":
        return X
    if mutation == "operation":
        assert isinstance(node, (Add, Mul, Pow))
        current = {Add: "add", Mul: "mul", Pow: "pow"}[type(node)]
        choices = [op for op in ("add", "mul", "pow") if op != current]
        op = rng.choice(choices)
        args = node.args if isinstance(node, (Add, Mul)) else (node.base, node.exponent)
        if op == "add":
            return Add(args)
        if op == "mul":
            return Mul(args)
        out = args[0]
        for a in args[1:]:
            out = Pow(out, a)
        return out
    # add_arg
    extra = simple_op(cfg, rng)
    match node:
        case Add(args):
            return Add(args + (extra,))
        case Mul(args):
            return Mul(args + (extra,))
        case Fn(kind, arg):
            inner = Add(arg.args + (extra,)) if isinstance(arg, Add) else Add((arg, extra))
            return Fn(kind, inner)
    raise ValueError(f"add_arg does not apply to {node!r}")


def mutate(e: Expr, cfg: MutationConfig, rng: random.Random) -> Expr:
    """One mutation at a uniformly drawn admitting node.

    With the constants-only config the tree shape is preserved and
    exactly one literal leaf changes value.  Raises NoApplicableSite
    when nothing in the tree admits an enabled mutation.
    """
    sites = [
        (path, node, options)
        for path, node in _node_paths(e)
        if (options := _applicable(node, cfg))
    ]
    if not sites:
        raise NoApplicableSite(f"no enabled mutation applies within {to_infix(e)}")
    path, node, options = sites[rng.randrange(len(sites))]
    site, mutation = options[rng.randrange(len(options))]
    return _replace(e, path, _apply_mutation(node, site, mutation, cfg, rng))


# --------------------------------------------------------------------------
# embedding and clustering

_EMBED_OPS = ("add", "mul", "pow", "sin", "cos", "tan", "exp", "ln", "sqrt")
_BIGRAM_BUCKETS = 16
_COEFF_EDGES = (1, 10, 100, 1000)
_LEN_EDGES = (4, 8, 16, 32, 64, 128, 256)


def embed(e: Expr) -> np.ndarray:
    """Structural feature vector for diversity clustering.

    Operator-kind histogram, leaf counts, depth, a token-length bucket,
    coefficient-magnitude buckets, and hashed token-bigram counts.
    Deterministic, non-negative, and never the zero vector.
    """
    ops = dict.fromkeys(_EMBED_OPS, 0)
    leaves = {"x": 0, "lit": 0}
    coeff_buckets = [0.0] * (len(_COEFF_EDGES) + 1)

    def bucket_value(value: float) -> None:
        mag = abs(value)
        for i, edge in enumerate(_COEFF_EDGES):
            if mag <= edge:
                coeff_buckets[i] += 1
                return
        coeff_buckets[-1] += 1

    stack = [e]
    while stack:
        node = stack.pop()
        match node:
            case IntegerLit(v):
                leaves["lit"] += 1
                bucket_value(float(v) if abs(v) < 10**9 else math.inf)
            case RationalLit(num, den):
                leaves["lit"] += 1
                bucket_value(abs(num / den))
            case Var():
                leaves["x"] += 1
            case Add(args):
                ops["add"] += len(args) - 1
                stack.extend(args)
            case Mul(args):
                ops["mul"] += len(args) - 1
                stack.extend(args)
            case Pow(base, exponent):
                ops["pow"] += 1
                stack.extend((base, exponent))
            case Fn(kind, arg):
                ops[kind] += 1
                stack.append(arg)

    tokens = to_prefix(e)
    length_onehot = [0.0] * (len(_LEN_EDGES) + 1)
    for i, edge in enumerate(_LEN_EDGES):
        if len(tokens) <= edge:
            length_onehot[i] = 1.0
            break
    else:
        length_onehot[-1] = 1.0
    bigrams = [0.0] * _BIGRAM_BUCKETS
    for a, b in zip(tokens, tokens[1:]):
        bigrams[stable_bucket(f"{a}|{b}", _BIGRAM_BUCKETS)] += 1.0

    depth = metrics(e).depth
    vec = (
        [float(ops[k]) for k in _EMBED_OPS]
        + [float(leaves["x"]), float(leaves["lit"]), float(depth)]
        + length_onehot
        + coeff_buckets
        + bigrams
    )
    return np.asarray(vec, dtype=np.float64)


def distance(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine distance in [0, 2]; 0 for identical directions."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0 if nu == nv else 1.0
    cos = float(np.dot(u, v)) / (nu * nv)
    return 1.0 - max(-1.0, min(1.0, cos))


def cluster(vectors: np.ndarray, k: int, rng: random.Random) -> list[int]:
    """k-means labels with farthest-point init; at most 100 iterations.

    Vectors are L2-normalized first so Euclidean k-means tracks the
    cosine geometry used by distance().
    """
    n = len(vectors)
    if n < k:
        raise TooFewPoints(f"{n} points for {k} clusters")
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    points = vectors / norms

    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.randrange(n)]
    dist = np.linalg.norm(points - centroids[0], axis=1)
    for i in range(1, k):
        centroids[i] = points[int(np.argmax(dist))]
        dist = np.minimum(dist, np.linalg.norm(points - centroids[i], axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(100):
        sq = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(sq, axis=1)
        for c in range(k):
            members = points[new_labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                # re-seed an empty cluster on the point farthest from
                # its assigned centroid
                worst = int(np.argmax(sq[np.arange(n), new_labels]))
                centroids[c] = points[worst]
                new_labels[worst] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return [int(c) for c in labels]


# --------------------------------------------------------------------------
# fitness

FITNESS_VARIANTS = ("short", "target_length", "near_targets")


def _contains_trig(e: Expr) -> bool:
    match e:
        case Fn(kind, arg):
            return kind in ("sin", "cos", "tan") or _contains_trig(arg)
        case Add(args) | Mul(args):
            return any(_contains_trig(a) for a in args)
        case Pow(base, exponent):
            return _contains_trig(base) or _contains_trig(exponent)
    return False


GATES = {"contains_trig": _contains_trig}

_NEAR_FLOOR = 1e-6


@dataclass(frozen=True)
class FitnessSpec:
    """Failure-weighted fitness.

    short: m / token_len, favouring small failures.  target_length:
    m / |token_len - target_length|, 1 at an exact match.  near_targets:
    m / max(min cosine distance to the targets, 1e-6).  An optional gate
    predicate zeroes fitness for problems missing a property.
    """

    variant: str = "short"
    eval_k: int = 1
    target_length: int | None = None
    targets: tuple[Expr, ...] = ()
    gate: str | None = None

    def __post_init__(self):
        if self.variant not in FITNESS_VARIANTS:
            raise ValueError(f"unknown fitness variant {self.variant!r}")
        if self.variant == "target_length" and not self.target_length:
            raise ValueError("target_length fitness needs target_length")
        if self.variant == "near_targets" and not self.targets:
            raise ValueError("near_targets fitness needs targets")
        if self.gate is not None and self.gate not in GATES:
            raise ValueError(f"unknown gate {self.gate!r}; have {sorted(GATES)}")


def fitness_value(spec: FitnessSpec, problem: Expr, m: int) -> float:
    """The fitness given an already-computed failure indicator."""
    if m == 0:
        return 0.0
    if spec.gate is not None and not GATES[spec.gate](problem):
        return 0.0
    if spec.variant == "short":
        return 1.0 / metrics(problem).token_len
    if spec.variant == "target_length":
        gap = abs(metrics(problem).token_len - int(spec.target_length or 0))
        return 1.0 / max(gap, 1)
    vec = embed(problem)
    best = min(distance(vec, embed(t)) for t in spec.targets)
    return 1.0 / max(best, _NEAR_FLOOR)


def fitness(
    spec: FitnessSpec,
    problem: Expr,
    integrator: Integrator,
    params: DecodeParams,
    cfg: EquivConfig,
) -> float:
    """Evaluate the integrator on the problem and weight the failure."""
    candidates = integrator.propose(problem, params)
    m_by_k, _, _, _ = _evaluate(problem, candidates, [spec.eval_k], cfg, False)
    return fitness_value(spec, problem, m_by_k[spec.eval_k])


# --------------------------------------------------------------------------
# the search loop


@dataclass(frozen=True)
class SearchConfig:
    run_seed: int = 0
    seed_size: int = 100
    generation_size: int = 1000
    cluster_count: int = 10
    fitness_threshold: float = 0.01
    archive_size: int = 1000
    generation_cap: int = 50
    beam: int = 10
    # problems past the wire cap cannot be posted to a model at all
    max_problem_tokens: int = 512
    checkpoint_path: str | None = None
    equiv: EquivConfig = field(default_factory=EquivConfig)


@dataclass(frozen=True)
class ArchiveEntry:
    problem: Expr
    fitness: float
    generation: int
    cluster: int
    seed_problem: Expr
    candidates: CandidateList
    verdicts: tuple[Verdict, ...]

    def to_json(self) -> dict:
        return {
            "problem": to_infix(self.problem),
            "prefix": to_prefix(self.problem),
            "fitness": self.fitness,
            "generation": self.generation,
            "cluster": self.cluster,
            "seed": to_infix(self.seed_problem),
            "candidates": [list(c) for c in self.candidates.candidates],
            "scores": list(self.candidates.scores) if self.candidates.scores else None,
            "verdicts": [
                {"status": v.status, "rank": v.candidate_rank} for v in self.verdicts
            ],
        }


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    children: int
    discarded: int
    collisions: int
    archived: int
    archive_total: int
    mean_archived_token_len: float | None
    seconds: float = field(compare=False)


@dataclass
class Archive:
    entries: list[ArchiveEntry]
    status: str  # filled | generation_cap_reached | aborted | in_progress
    growth: list[GenerationStats]
    config: SearchConfig
    collisions: int
    # seed population at the moment of the last checkpoint, so a resumed
    # run continues the exact mutation streams of an uninterrupted one
    next_seeds: list[Expr] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def problems(self) -> list[Expr]:
        return [e.problem for e in self.entries]


def _normalize(e: Expr) -> Expr:
    # round-trip through the token format; mutation then sees exactly
    # the tree the model is shown, and checkpoint resume is exact
    return parse_prefix(to_prefix(e))


def _has_valid_point(e: Expr, cfg: EquivConfig, rng: random.Random) -> bool:
    lo, hi = cfg.domain
    for _ in range(cfg.max_retries_per_point):
        try:
            eval_at(e, rng.uniform(lo, hi))
            return True
        except DomainError:
            continue
    return False


@dataclass(frozen=True)
class _Child:
    problem: Expr
    canonical: Expr
    seed_problem: Expr


def _spawn_children(
    seeds: list[Expr], cfg: SearchConfig, mcfg: MutationConfig, generation: int
) -> tuple[list[_Child], int, int]:
    """Mutate every seed; returns (children, discarded, collisions)."""
    fanout = math.ceil(cfg.generation_size / max(len(seeds), 1))
    children: list[_Child] = []
    seen: set[Expr] = set()
    discarded = 0
    collisions = 0
    for i, seed in enumerate(seeds):
        for j in range(fanout):
            rng = random.Random(derive_seed("mutate", cfg.run_seed, generation, i, j))
            try:
                child = _normalize(mutate(seed, mcfg, rng))
                canon = canonicalize(child)
            except (NoApplicableSite, DivisionByZero):
                discarded += 1
                continue
            if len(to_prefix(child)) > cfg.max_problem_tokens:
                discarded += 1
                continue
            if not _has_valid_point(child, cfg.equiv, rng):
                discarded += 1
                continue
            if canon in seen:
                collisions += 1
                continue
            seen.add(canon)
            children.append(_Child(child, canon, seed))
    return children, discarded, collisions


def run(
    config: SearchConfig,
    mutation: MutationConfig,
    fitness_spec: FitnessSpec,
    integrator: Integrator,
    seeds: list[Expr],
    resume: "Archive | None" = None,
    progress: bool = False,
) -> Archive:
    """Search until the archive is full or the generation cap.

    Children that are everywhere-undefined on the sample domain, or
    whose canonicalization divides by zero, are discarded before any
    model call.  Within a run the archive is deduplicated by canonical
    form; canonical collisions are counted, not archived twice.
    """
    if not seeds:
        raise ValueError("need at least one seed problem")
    params = DecodeParams(
        k=fitness_spec.eval_k, beam=max(config.beam, fitness_spec.eval_k)
    )

    if resume is not None:
        entries = list(resume.entries)
        growth = list(resume.growth)
        collisions_total = resume.collisions
        start_gen = growth[-1].generation + 1 if growth else 0
        seed_list = list(resume.next_seeds)
    else:
        entries, growth, collisions_total, start_gen, seed_list = [], [], 0, 0, []

    if not seed_list:
        base = [_normalize(s) for s in seeds]
        seed_list = [base[i % len(base)] for i in range(config.seed_size)]

    archived_keys = {canonicalize(e.problem) for e in entries}
    status = "generation_cap_reached"

    for generation in range(start_gen, config.generation_cap):
        if len(entries) >= config.archive_size:
            status = "filled"
            break
        tick = time.monotonic()
        children, discarded, collisions = _spawn_children(
            seed_list, config, mutation, generation
        )
        collisions_total += collisions
        if not children:
            _write_checkpoint(config, entries, growth, seed_list, collisions_total)
            continue

        fits: list[float] = []
        evaluated: list[tuple[_Child, CandidateList, tuple[Verdict, ...]]] = []
        try:
            for child in children:
                candidates = integrator.propose(child.problem, params)
                equiv = config.equiv.with_seed(
                    derive_seed(
                        "verify", config.run_seed, " ".join(to_prefix(child.problem))
                    )
                )
                m_by_k, verdicts, _, _ = _evaluate(
                    child.problem, candidates, [fitness_spec.eval_k], equiv, False
                )
                fits.append(
                    fitness_value(fitness_spec, child.problem, m_by_k[fitness_spec.eval_k])
                )
                evaluated.append((child, candidates, verdicts))
        except ModelUnavailable:
            # keep what we have; the checkpoint lets the run resume once
            # the backend is back
            _write_checkpoint(config, entries, growth, seed_list, collisions_total)
            return Archive(
                entries=entries,
                status="aborted",
                growth=growth,
                config=config,
                collisions=collisions_total,
                next_seeds=seed_list,
            )

        k_eff = min(config.cluster_count, len(children))
        vectors = np.stack([embed(c.problem) for c in children])
        labels = cluster(vectors, k_eff, random.Random(derive_seed("cluster", config.run_seed, generation)))

        archived_now = 0
        lens: list[int] = []
        for (child, candidates, verdicts), fit, label in zip(evaluated, fits, labels):
            if len(entries) >= config.archive_size:
                break
            if fit <= config.fitness_threshold:
                continue
            if child.canonical in archived_keys:
                collisions_total += 1
                continue
            archived_keys.add(child.canonical)
            entries.append(
                ArchiveEntry(
                    problem=child.problem,
                    fitness=fit,
                    generation=generation,
                    cluster=label,
                    seed_problem=child.seed_problem,
                    candidates=candidates,
                    verdicts=verdicts,
                )
            )
            archived_now += 1
            lens.append(metrics(child.problem).token_len)

        # next seeds: best of each cluster, padded by global rank
        per_cluster = math.ceil(config.seed_size / k_eff)
        order = sorted(range(len(children)), key=lambda i: (-fits[i], i))
        chosen: list[int] = []
        chosen_set: set[int] = set()
        for c in range(k_eff):
            members = [i for i in order if labels[i] == c]
            for i in members[:per_cluster]:
                chosen.append(i)
                chosen_set.add(i)
        for i in order:
            if len(chosen) >= config.seed_size:
                break
            if i not in chosen_set:
                chosen.append(i)
                chosen_set.add(i)
        seed_list = [children[i].problem for i in chosen[: config.seed_size]]
        if len(seed_list) < config.seed_size:
            seed_list = [
                seed_list[i % len(seed_list)] for i in range(config.seed_size)
            ]

        stats = GenerationStats(
            generation=generation,
            children=len(children),
            discarded=discarded,
            collisions=collisions,
            archived=archived_now,
            archive_total=len(entries),
            mean_archived_token_len=(sum(lens) / len(lens)) if lens else None,
            seconds=time.monotonic() - tick,
        )
        growth.append(stats)
        if progress:
            mean = f"{stats.mean_archived_token_len:.1f}" if lens else "-"
            print(
                f"gen {generation:>3}  children {stats.children:>5}  "
                f"archived {archived_now:>4}  total {len(entries):>5}  "
                f"mean len {mean}",
                flush=True,
            )
        _write_checkpoint(config, entries, growth, seed_list, collisions_total)
        if len(entries) >= config.archive_size:
            status = "filled"
            break

    return Archive(
        entries=entries,
        status=status,
        growth=growth,
        config=config,
        collisions=collisions_total,
        next_seeds=seed_list,
    )


# --------------------------------------------------------------------------
# archive and checkpoint files


def save_archive(path: str, archive: Archive) -> None:
    """One JSON object per line, preceded by a run header."""
    header = {
        "format": "sift-archive-v1",
        "status": archive.status,
        "entries": len(archive.entries),
        "collisions": archive.collisions,
        "run_seed": archive.config.run_seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for entry in archive.entries:
            fh.write(json.dumps(entry.to_json(), sort_keys=True) + "\n")


def load_archive_entries(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines or json.loads(lines[0]).get("format") != "sift-archive-v1":
        raise ValueError(f"{path} is not an archive file")
    return [json.loads(line) for line in lines[1:]]


def _write_checkpoint(
    config: SearchConfig,
    entries: list[ArchiveEntry],
    growth: list[GenerationStats],
    seed_list: list[Expr],
    collisions: int,
) -> None:
    if config.checkpoint_path is None:
        return
    payload = {
        "format": "sift-checkpoint-v1",
        "run_seed": config.run_seed,
        "next_generation": (growth[-1].generation + 1) if growth else 0,
        "collisions": collisions,
        "seeds": [to_prefix(s) for s in seed_list],
        "growth": [vars(g) for g in growth],
        "entries": [e.to_json() for e in entries],
    }
    with open(config.checkpoint_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str, config: SearchConfig) -> "Archive":
    """Rebuild resumable state written by a previous run."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "sift-checkpoint-v1":
        raise ValueError(f"{path} is not a checkpoint")
    entries = [
        ArchiveEntry(
            problem=parse_prefix(raw["prefix"]),
            fitness=raw["fitness"],
            generation=raw["generation"],
            cluster=raw["cluster"],
            seed_problem=parse_infix(raw["seed"]),
            candidates=CandidateList(
                tuple(tuple(c) for c in raw["candidates"]),
                tuple(raw["scores"]) if raw.get("scores") else None,
            ),
            verdicts=tuple(
                Verdict(v["status"], 0.0, v.get("rank")) for v in raw["verdicts"]
            ),
        )
        for raw in payload["entries"]
    ]
    growth = [GenerationStats(**g) for g in payload["growth"]]
    return Archive(
        entries=entries,
        status="in_progress",
        growth=growth,
        config=config,
        collisions=payload["collisions"],
        next_seeds=[parse_prefix(toks) for toks in payload["seeds"]],
    )


def summarize(archive: Archive) -> str:
    """Shape statistics of the archive, plus the growth curve."""
    if not archive.entries:
        return "archive is empty"
    ms = [metrics(e.problem) for e in archive.entries]
    terms = [m.term_count for m in ms]
    share = lambda p: 100.0 * sum(p(t) for t in terms) / len(terms)
    lines = [
        f"entries            {len(archive.entries)}  ({archive.status})",
        f"generations        {len(archive.growth)}",
        f"canonical clashes  {archive.collisions}",
        f"mean token length  {sum(m.token_len for m in ms) / len(ms):.2f}",
        f"mean nodes         {sum(m.node_count for m in ms) / len(ms):.2f}",
        f"mean ops           {sum(m.op_node_count for m in ms) / len(ms):.2f}",
        f"mean depth         {sum(m.depth for m in ms) / len(ms):.2f}",
        f"terms 1/2/3+       {share(lambda t: t == 1):.0f}% / "
        f"{share(lambda t: t == 2):.0f}% / {share(lambda t: t >= 3):.0f}%",
    ]
    return "\n".join(lines)
