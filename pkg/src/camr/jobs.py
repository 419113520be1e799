"""Word-count jobs, map outputs and fixed-width aggregation."""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Union


class JobError(ValueError):
    pass


@dataclass(frozen=True)
class Aggregator:
    """An associative, commutative combiner over integers of ``width`` bytes."""

    name: str
    width: int
    identity: int
    op: Callable[[int, int, int], int]

    def combine(self, a: int, b: int) -> int:
        return self.op(a, b, self.width)

    def encode(self, value: int) -> bytes:
        return value.to_bytes(self.width, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.width:
            raise JobError(f"expected {self.width} bytes, got {len(data)}")
        return int.from_bytes(data, "big")


def _mod_sum(a, b, width):
    return (a + b) % (1 << (8 * width))


def sum_aggregator(width: int) -> Aggregator:
    """Addition modulo 2^(8*width): linear aggregation, the word-count case."""
    return Aggregator("sum", width, 0, _mod_sum)


def max_aggregator(width: int) -> Aggregator:
    return Aggregator("max", width, 0, lambda a, b, w: max(a, b))


AGGREGATORS = {"sum": sum_aggregator, "max": max_aggregator}


@dataclass(frozen=True)
class JobSpec:
    job: int
    payloads: tuple[str, ...]
    vocabulary: tuple[str, ...]

    @property
    def N(self) -> int:
        return len(self.payloads)


@dataclass(frozen=True)
class IntermediateValue:
    function: int
    job: int
    subfile: int
    value: int


@dataclass(frozen=True)
class AggregateValue:
    function: int
    job: int
    subfiles: frozenset[int]
    data: bytes

    @property
    def key(self) -> tuple[int, int, frozenset[int]]:
        return self.function, self.job, self.subfiles


def _word_pool(size: int) -> list[str]:
    return [f"w{i:04d}" for i in range(size)]


def generate_corpus(
    seed: int,
    J: int,
    Q: int,
    N: int,
    value_bytes: int,
    k: int | None = None,
    max_words: int = 40,
) -> list[JobSpec]:
    """Deterministic synthetic corpus of J jobs with N subfile payloads each.

    Each subfile holds at most ``max_words`` words, so per-subfile counts are
    bounded by ``max_words`` and whole-job totals stay below 2^(8*value_bytes).
    """
    if value_bytes < 1:
        raise JobError("value_bytes must be >= 1")
    if k is not None and value_bytes % (k - 1):
        raise JobError(f"value_bytes={value_bytes} is not divisible by k-1={k - 1}")
    if N * max_words >= 1 << (8 * value_bytes):
        raise JobError(
            f"value_bytes={value_bytes} too small: {N} subfiles x {max_words} words would wrap"
        )
    rng = random.Random(f"camr-corpus:{seed}:{J}:{Q}:{N}:{max_words}")
    pool = _word_pool(max(2 * Q, 16))
    specs = []
    for j in range(1, J + 1):
        vocab = tuple(rng.sample(pool, Q))
        payloads = tuple(
            " ".join(rng.choices(pool, k=rng.randint(0, max_words))) for _ in range(N)
        )
        specs.append(JobSpec(j, payloads, vocab))
    return specs


def map_subfile(spec: JobSpec, n: int) -> list[IntermediateValue]:
    """Count each vocabulary word in subfile ``n`` (1-based)."""
    if not 1 <= n <= spec.N:
        raise JobError(f"subfile {n} out of range 1..{spec.N}")
    counts = Counter(spec.payloads[n - 1].split())
    return [
        IntermediateValue(f, spec.job, n, counts[w])
        for f, w in enumerate(spec.vocabulary, start=1)
    ]


Mergeable = Union[IntermediateValue, AggregateValue]


def aggregate(agg: Aggregator, values: Iterable[Mergeable]) -> AggregateValue:
    values = list(values)
    if not values:
        raise JobError("cannot aggregate an empty list without a (function, job) key")
    keys = {(v.function, v.job) for v in values}
    if len(keys) != 1:
        raise JobError(f"mixed (function, job) keys: {sorted(keys)}")
    subfiles: set[int] = set()
    ints = []
    for v in values:
        if isinstance(v, IntermediateValue):
            members, x = {v.subfile}, v.value
        else:
            members, x = set(v.subfiles), agg.decode(v.data)
        if subfiles & members:
            raise JobError(f"overlapping subfile sets: {sorted(subfiles & members)}")
        subfiles |= members
        ints.append(x)
    (function, job), = keys
    total = reduce(agg.combine, ints, agg.identity)
    return AggregateValue(function, job, frozenset(subfiles), agg.encode(total))


def oracle_reduce(specs: list[JobSpec], agg: Aggregator) -> dict[tuple[int, int], AggregateValue]:
    """Centralized ground truth: every function of every job over all subfiles."""
    out = {}
    for spec in specs:
        per_fn: dict[int, list[IntermediateValue]] = {}
        for n in range(1, spec.N + 1):
            for v in map_subfile(spec, n):
                per_fn.setdefault(v.function, []).append(v)
        for f, vals in per_fn.items():
            out[(f, spec.job)] = aggregate(agg, vals)
    return out


def corpus_records(specs: list[JobSpec]) -> Iterable[str]:
    """JSON lines, one per (job, subfile), for debugging dumps."""
    for spec in specs:
        for n in range(1, spec.N + 1):
            payload = spec.payloads[n - 1]
            yield json.dumps(
                {
                    "job": spec.job,
                    "subfile": n,
                    "sha256": hashlib.sha256(payload.encode()).hexdigest(),
                    "counts": [v.value for v in map_subfile(spec, n)],
                }
            )
