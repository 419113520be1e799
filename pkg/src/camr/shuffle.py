"""Three-stage coded shuffle with real XOR packet arithmetic.

Function ``k`` of every job is reduced by server ``U_k`` (Q = K), so an
aggregate key ``(function, job, subfiles)`` with ``function == m`` is always
something ``U_m`` needs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from camr.design import ResolvableDesign, enumerate_stage2_groups, intersect_blocks, owners_of_job
from camr.jobs import AggregateValue, Aggregator
from camr.placement import PlacementPlan, batch_of

CODED = "coded-multicast"
UNICAST = "uncoded-unicast"

Key = tuple[int, int, frozenset]
Fetch = Callable[[int, Key], bytes]
Tamper = Callable[[int, int, bytes], bytes]


class ShuffleError(RuntimeError):
    pass


class MissingData(ShuffleError):
    pass


@dataclass(frozen=True)
class TransmissionRecord:
    stage: int
    sender: int
    receivers: tuple[int, ...]
    bits: int
    kind: str
    meta: dict = field(compare=True, hash=False)
    payload: bytes = b""

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "kind": self.kind,
            "sender": self.sender,
            "receivers": list(self.receivers),
            "bits": self.bits,
            "meta": self.meta,
            "payload": self.payload.hex(),
        }


class Server:
    """One machine: its own map outputs plus whatever it has decoded."""

    def __init__(self, sid: int, agg: Aggregator, map_outputs: Mapping[tuple[int, int, int], int]):
        self.sid = sid
        self.agg = agg
        self._map = dict(map_outputs)
        self.inbox: dict[Key, AggregateValue] = {}

    def has_subfile(self, job: int, subfile: int) -> bool:
        return (1, job, subfile) in self._map

    def compute(self, key: Key) -> bytes:
        """Aggregate ``key`` from local map outputs only."""
        function, job, subfiles = key
        total = self.agg.identity
        for n in sorted(subfiles):
            try:
                v = self._map[(function, job, n)]
            except KeyError:
                raise MissingData(
                    f"U_{self.sid} lacks the map output of function {function}, "
                    f"subfile {n} of job {job}"
                ) from None
            total = self.agg.combine(total, v)
        return self.agg.encode(total)

    def receive(self, key: Key, data: bytes) -> None:
        if key in self.inbox:
            raise ShuffleError(f"U_{self.sid} received {key} twice")
        function, job, subfiles = key
        self.inbox[key] = AggregateValue(function, job, subfiles, data)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def coded_exchange(
    group: Sequence[int],
    needs: Mapping[int, Key],
    fetch: Fetch,
    width: int,
    stage: int = 0,
    meta: dict | None = None,
    tamper: Tamper | None = None,
) -> tuple[dict[int, bytes], list[TransmissionRecord]]:
    """Deliver to each member of ``group`` the chunk ``needs[member]``.

    Every chunk is split into |G|-1 packets, packet i going to the i-th other
    member in ascending id order.  Each member broadcasts the XOR of the
    packets associated with it; receivers cancel the terms they can compute
    via ``fetch(receiver, key)`` and concatenate what remains.
    """
    group = tuple(sorted(group))
    g = len(group)
    if g < 2:
        raise ShuffleError("a coded exchange needs at least two machines")
    if set(needs) != set(group):
        raise ShuffleError(f"needs {sorted(needs)} do not match group {group}")
    if width % (g - 1):
        raise ShuffleError(f"value width {width} is not divisible by |G|-1 = {g - 1}")
    size = width // (g - 1)
    others = {kp: [m for m in group if m != kp] for kp in group}

    def packet(holder: int, kp: int, m: int) -> bytes:
        # packet of D_[kp] associated with machine m, as computed by `holder`
        try:
            chunk = fetch(holder, needs[kp])
        except MissingData as exc:
            raise ShuffleError(f"group {group}: U_{holder} cannot form D_[{kp}]: {exc}") from exc
        i = others[kp].index(m)
        return chunk[i * size:(i + 1) * size]

    broadcasts = {}
    for m in group:
        delta = bytes(size)
        for kp in others[m]:
            delta = _xor(delta, packet(m, kp, m))
        broadcasts[m] = delta

    records = [
        TransmissionRecord(stage, m, tuple(others[m]), 8 * size, CODED, dict(meta or {}), broadcasts[m])
        for m in group
    ]

    decoded = {}
    for r in group:
        pieces = []
        for m in others[r]:
            rx = broadcasts[m] if tamper is None else tamper(m, r, broadcasts[m])
            for kp in others[m]:
                if kp != r:
                    rx = _xor(rx, packet(r, kp, m))
            pieces.append(rx)
        decoded[r] = b"".join(pieces)
    return decoded, records


def uncoded_exchange(
    group: Sequence[int],
    needs: Mapping[int, Key],
    fetch: Fetch,
    width: int,
    stage: int = 0,
    meta: dict | None = None,
    tamper: Tamper | None = None,
) -> tuple[dict[int, bytes], list[TransmissionRecord]]:
    """Reference exchange without coding: the lowest-id holder unicasts each chunk whole."""
    group = tuple(sorted(group))
    decoded, records = {}, []
    for kp in group:
        sender = min(m for m in group if m != kp)
        try:
            data = fetch(sender, needs[kp])
        except MissingData as exc:
            raise ShuffleError(f"group {group}: {exc}") from exc
        records.append(TransmissionRecord(stage, sender, (kp,), 8 * width, UNICAST, dict(meta or {}), data))
        decoded[kp] = data if tamper is None else tamper(sender, kp, data)
    return decoded, records


@dataclass
class ShuffleContext:
    design: ResolvableDesign
    plan: PlacementPlan
    servers: dict[int, Server]
    width: int
    coded: bool = True
    tamper: Tamper | None = None
    workers: int = 1

    def fetch(self, sid: int, key: Key) -> bytes:
        return self.servers[sid].compute(key)

    def exchange(self, tasks):
        """Run (stage, group, needs, meta) tasks; deliver in task order."""
        engine = coded_exchange if self.coded else uncoded_exchange

        def run(task):
            stage, group, needs, meta = task
            return engine(group, needs, self.fetch, self.width, stage, meta, self.tamper)

        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                results = list(pool.map(run, tasks))
        else:
            results = [run(t) for t in tasks]
        log = []
        for (_, _, needs, _), (decoded, records) in zip(tasks, results):
            for sid, data in decoded.items():
                self.servers[sid].receive(needs[sid], data)
            log.extend(records)
        return log


def stage1_tasks(ctx: ShuffleContext) -> list:
    tasks = []
    for j in ctx.design.points:
        owners = owners_of_job(ctx.design, j)
        needs = {kp: (kp, j, frozenset(batch_of(ctx.plan, j, kp))) for kp in owners}
        tasks.append((1, owners, needs, {"job": j}))
    return tasks


def stage2_tasks(ctx: ShuffleContext) -> list:
    design = ctx.design
    tasks = []
    for group in enumerate_stage2_groups(design):
        needs = {}
        for kp in group:
            rest = [s for s in group if s != kp]
            common = intersect_blocks(design, rest)
            if len(common) != 1:
                raise ShuffleError(f"servers {rest} share {len(common)} jobs, expected exactly one")
            (j,) = common
            mates = [o for o in owners_of_job(design, j) if design.class_of(o) == design.class_of(kp)]
            if len(mates) != 1 or mates[0] == kp:
                raise ShuffleError(f"no unique class-mate owner of job {j} for U_{kp}")
            needs[kp] = (kp, j, frozenset(batch_of(ctx.plan, j, mates[0])))
        tasks.append((2, group, needs, {"group": list(group)}))
    return tasks


def stage1(ctx: ShuffleContext) -> list[TransmissionRecord]:
    return ctx.exchange(stage1_tasks(ctx))


def stage2(ctx: ShuffleContext) -> list[TransmissionRecord]:
    return ctx.exchange(stage2_tasks(ctx))


def stage3(ctx: ShuffleContext) -> list[TransmissionRecord]:
    """Intra-class unicasts: U_s sends U_m the aggregate of its k-1 stored batches."""
    design, plan = ctx.design, ctx.plan
    full = frozenset(range(1, plan.N + 1))
    log = []
    for cls in design.classes:
        for m in cls:
            for s in cls:
                if s == m:
                    continue
                for j in sorted(design.block(s).points):
                    if m in owners_of_job(design, j):
                        raise ShuffleError(f"U_{m} and U_{s} share class but both own job {j}")
                    key = (m, j, full - frozenset(batch_of(plan, j, s)))
                    try:
                        data = ctx.fetch(s, key)
                    except MissingData as exc:
                        raise ShuffleError(f"stage 3: {exc}") from exc
                    log.append(TransmissionRecord(3, s, (m,), 8 * ctx.width, UNICAST, {"job": j}, data))
                    ctx.servers[m].receive(key, data if ctx.tamper is None else ctx.tamper(s, m, data))
    return log


def run_shuffle(ctx: ShuffleContext) -> list[TransmissionRecord]:
    """Stages 1-3 in order; returns the transmission log and fills server inboxes."""
    return stage1(ctx) + stage2(ctx) + stage3(ctx)


def workers_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("CAMR_WORKERS", default)))
    except ValueError:
        return default
