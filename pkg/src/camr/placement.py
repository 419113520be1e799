"""Batch placement: each job's N = k*gamma subfiles split into k labeled batches."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from camr.design import ResolvableDesign, owners_of_job

log = logging.getLogger(__name__)


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class BatchId:
    job: int
    owner_label: int


@dataclass(frozen=True)
class PlacementPlan:
    design: ResolvableDesign
    gamma: int
    batches: dict[BatchId, tuple[int, ...]]
    server_store: dict[int, frozenset[BatchId]]

    @property
    def N(self) -> int:
        return self.design.params.k * self.gamma

    def stores(self, server: int, job: int, subfile: int) -> bool:
        return any(
            b.job == job and subfile in self.batches[b] for b in self.server_store[server]
        )

    def stored_subfiles(self, server: int) -> set[tuple[int, int]]:
        return {(b.job, n) for b in self.server_store[server] for n in self.batches[b]}


def place(design: ResolvableDesign, gamma: int) -> PlacementPlan:
    """Split every job into k batches and store each on all owners but its label.

    Owners are sorted ascending as o_1..o_k; batch t (subfiles (t-1)*gamma+1 ..
    t*gamma) carries label o_((t mod k) + 1).
    """
    if not isinstance(gamma, int) or gamma < 1:
        raise PlacementError(f"gamma must be an integer >= 1, got {gamma!r}")
    if gamma == 1:
        log.info("gamma=1: every batch holds a single subfile")
    k = design.params.k
    batches: dict[BatchId, tuple[int, ...]] = {}
    store: dict[int, set[BatchId]] = {s: set() for s in design.servers}
    for j in design.points:
        owners = owners_of_job(design, j)
        for t in range(1, k + 1):
            bid = BatchId(j, owners[t % k])
            batches[bid] = tuple(range((t - 1) * gamma + 1, t * gamma + 1))
            for o in owners:
                if o != bid.owner_label:
                    store[o].add(bid)
    return PlacementPlan(design, gamma, batches, {s: frozenset(b) for s, b in store.items()})


def batch_of(plan: PlacementPlan, job: int, owner_label: int) -> tuple[int, ...]:
    try:
        return plan.batches[BatchId(job, owner_label)]
    except KeyError:
        raise PlacementError(f"U_{owner_label} is not an owner of job {job}") from None


def storage_fraction(plan: PlacementPlan) -> Fraction:
    counts = {s: len(plan.stored_subfiles(s)) for s in plan.server_store}
    if len(set(counts.values())) != 1:
        raise PlacementError(f"servers store unequal amounts: {counts}")
    total = plan.design.params.J * plan.N
    return Fraction(next(iter(counts.values())), total)


def plan_to_dict(plan: PlacementPlan) -> dict:
    design = plan.design
    return {
        "gamma": plan.gamma,
        "N": plan.N,
        "jobs": [
            {
                "job": j,
                "owners": list(owners_of_job(design, j)),
                "batches": [
                    {"label": b.owner_label, "subfiles": list(plan.batches[b])}
                    for b in sorted(
                        (b for b in plan.batches if b.job == j),
                        key=lambda b: plan.batches[b],
                    )
                ],
            }
            for j in design.points
        ],
        "servers": [
            {
                "server": s,
                "stored": [
                    [b.job, b.owner_label]
                    for b in sorted(plan.server_store[s], key=lambda b: (b.job, b.owner_label))
                ],
            }
            for s in design.servers
        ],
    }
