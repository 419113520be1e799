"""End-to-end pipeline: corpus -> placement -> map -> shuffle -> reduce -> oracle check."""

from __future__ import annotations

from dataclasses import dataclass

from camr.design import DesignParams, ResolvableDesign, build_design, owners_of_job
from camr.jobs import AGGREGATORS, AggregateValue, JobSpec, aggregate, generate_corpus, map_subfile, oracle_reduce
from camr.placement import PlacementPlan, place
from camr.shuffle import Server, ShuffleContext, ShuffleError, Tamper, TransmissionRecord, run_shuffle


def default_value_bytes(k: int, minimum: int = 8) -> int:
    """Smallest multiple of k-1 that is at least ``minimum``."""
    step = k - 1
    return -(-minimum // step) * step


@dataclass
class SimulationResult:
    design: ResolvableDesign
    plan: PlacementPlan
    corpus: list[JobSpec]
    servers: dict[int, Server]
    log: list[TransmissionRecord]
    outputs: dict[tuple[int, int], AggregateValue]
    oracle: dict[tuple[int, int], AggregateValue]
    value_bytes: int
    seed: int

    @property
    def correct(self) -> bool:
        return self.outputs == self.oracle

    def mismatches(self) -> list[tuple[int, int]]:
        return sorted(k for k in self.oracle if self.outputs.get(k) != self.oracle[k])


def map_phase(design, plan, corpus, agg) -> dict[int, Server]:
    """Each server maps every subfile it stores, for all Q = K functions."""
    servers = {}
    for s in design.servers:
        outputs = {}
        for j, n in sorted(plan.stored_subfiles(s)):
            for v in map_subfile(corpus[j - 1], n):
                outputs[(v.function, j, n)] = v.value
        servers[s] = Server(s, agg, outputs)
    return servers


def reduce_phase(design, plan, servers) -> dict[tuple[int, int], AggregateValue]:
    """U_k combines local batches and decoded aggregates into phi_k for every job.

    The pieces used for each (k, j) must partition the job's subfiles.
    """
    full = frozenset(range(1, plan.N + 1))
    outputs = {}
    for k, server in servers.items():
        for j in design.points:
            pieces = [v for key, v in server.inbox.items() if key[0] == k and key[1] == j]
            if k in owners_of_job(design, j):
                local = frozenset(n for n in full if server.has_subfile(j, n))
                key = (k, j, local)
                pieces.append(AggregateValue(k, j, local, server.compute(key)))
            covered = [n for p in pieces for n in p.subfiles]
            if len(covered) != len(set(covered)) or set(covered) != full:
                raise ShuffleError(
                    f"U_{k} holds subfiles {sorted(covered)} of job {j}, not a partition of 1..{plan.N}"
                )
            outputs[(k, j)] = aggregate(server.agg, pieces)
    return outputs


def simulate(
    q: int,
    k: int,
    gamma: int,
    value_bytes: int | None = None,
    seed: int = 0,
    aggregator: str = "sum",
    coded: bool = True,
    workers: int = 1,
    tamper: Tamper | None = None,
    max_words: int = 40,
) -> SimulationResult:
    params = DesignParams(q, k)
    if value_bytes is None:
        value_bytes = default_value_bytes(k)
    design = build_design(params)
    plan = place(design, gamma)
    corpus = generate_corpus(seed, params.J, params.K, plan.N, value_bytes, k=k, max_words=max_words)
    agg = AGGREGATORS[aggregator](value_bytes)
    servers = map_phase(design, plan, corpus, agg)
    ctx = ShuffleContext(design, plan, servers, value_bytes, coded=coded, tamper=tamper, workers=workers)
    log = run_shuffle(ctx)
    outputs = reduce_phase(design, plan, servers)
    return SimulationResult(
        design, plan, corpus, servers, log, outputs, oracle_reduce(corpus, agg), value_bytes, seed
    )
