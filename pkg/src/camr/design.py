"""Resolvable designs built from (k, k-1) single-parity-check codes over Z_q.

Points are job ids ``1..q**(k-1)``; blocks are servers ``1..k*q``.  Server
``U_i`` corresponds to block ``B[ceil(i/q), (i-1) mod q]``, i.e. class
``(i-1)//q + 1`` and symbol ``(i-1) % q``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

MAX_POINTS = 10**6


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class DesignParams:
    q: int
    k: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 2:
            raise DesignError(f"q must be an integer >= 2, got {self.q!r}")
        if not isinstance(self.k, int) or self.k < 2:
            raise DesignError(f"k must be an integer >= 2, got {self.k!r}")

    @property
    def K(self) -> int:
        return self.k * self.q

    @property
    def J(self) -> int:
        return self.q ** (self.k - 1)


def build_spc_matrix(params: DesignParams, max_points: int = MAX_POINTS) -> list[list[int]]:
    """Return the k x q^(k-1) codeword matrix T as a list of rows.

    Message vectors are enumerated lexicographically; column ``j-1`` holds the
    codeword for point ``j``.  The last coordinate is the mod-q sum of the rest.
    """
    q, k = params.q, params.k
    if q ** (k - 1) > max_points:
        raise DesignError(
            f"q^(k-1) = {q ** (k - 1)} points exceeds the ceiling of {max_points}"
        )
    rows: list[list[int]] = [[] for _ in range(k)]
    for u in itertools.product(range(q), repeat=k - 1):
        for i, sym in enumerate(u):
            rows[i].append(sym)
        rows[k - 1].append(sum(u) % q)
    return rows


@dataclass(frozen=True)
class Block:
    server: int
    class_index: int
    symbol: int
    points: frozenset[int]


def server_of(params: DesignParams, class_index: int, symbol: int) -> int:
    return (class_index - 1) * params.q + symbol + 1


def block_coords(params: DesignParams, server: int) -> tuple[int, int]:
    """(class index, symbol) of a server's block."""
    if not 1 <= server <= params.K:
        raise DesignError(f"server {server} out of range 1..{params.K}")
    return (server - 1) // params.q + 1, (server - 1) % params.q


@dataclass(frozen=True)
class ResolvableDesign:
    params: DesignParams
    matrix: tuple[tuple[int, ...], ...]
    blocks: tuple[Block, ...]

    @property
    def points(self) -> range:
        return range(1, self.params.J + 1)

    @property
    def servers(self) -> range:
        return range(1, self.params.K + 1)

    @cached_property
    def classes(self) -> tuple[tuple[int, ...], ...]:
        q = self.params.q
        return tuple(
            tuple(range((i - 1) * q + 1, i * q + 1)) for i in range(1, self.params.k + 1)
        )

    def block(self, server: int) -> Block:
        block_coords(self.params, server)
        return self.blocks[server - 1]

    def class_of(self, server: int) -> int:
        return block_coords(self.params, server)[0]

    def codeword(self, j: int) -> tuple[int, ...]:
        return tuple(row[j - 1] for row in self.matrix)

    @cached_property
    def _owners(self) -> dict[int, tuple[int, ...]]:
        return {
            j: tuple(server_of(self.params, i + 1, s) for i, s in enumerate(self.codeword(j)))
            for j in self.points
        }


def build_design(params: DesignParams, max_points: int = MAX_POINTS) -> ResolvableDesign:
    rows = build_spc_matrix(params, max_points)
    blocks = []
    for i in range(1, params.k + 1):
        row = rows[i - 1]
        for sym in range(params.q):
            pts = frozenset(j + 1 for j, t in enumerate(row) if t == sym)
            blocks.append(Block(server_of(params, i, sym), i, sym, pts))
    return ResolvableDesign(params, tuple(tuple(r) for r in rows), tuple(blocks))


def owners_of_job(design: ResolvableDesign, j: int) -> tuple[int, ...]:
    """Owner set X^(j): one server per parallel class, ascending."""
    if not 1 <= j <= design.params.J:
        raise DesignError(f"job {j} out of range 1..{design.params.J}")
    return design._owners[j]


def intersect_blocks(design: ResolvableDesign, servers) -> frozenset[int]:
    servers = list(servers)
    seen = set()
    for s in servers:
        c = design.class_of(s)
        if c in seen:
            raise DesignError(f"servers {sorted(servers)} include two blocks of class {c}")
        seen.add(c)
    if not servers:
        return frozenset(design.points)
    return frozenset.intersection(*(design.block(s).points for s in servers))


def enumerate_stage2_groups(design: ResolvableDesign) -> list[tuple[int, ...]]:
    """All k-tuples (one server per class) whose blocks share no point.

    A symbol tuple has empty intersection exactly when it is not a codeword,
    so these are the non-codewords in lexicographic order.
    """
    q, k = design.params.q, design.params.k
    groups = []
    for syms in itertools.product(range(q), repeat=k):
        if sum(syms[:-1]) % q != syms[-1]:
            groups.append(tuple(server_of(design.params, i + 1, s) for i, s in enumerate(syms)))
    return groups


def check_design(design: ResolvableDesign) -> list[str]:
    """Return a list of violated invariants (empty when the design is sound)."""
    problems = []
    q, k, J = design.params.q, design.params.k, design.params.J
    all_points = frozenset(design.points)
    if len(design.blocks) != k * q:
        problems.append(f"expected {k * q} blocks, found {len(design.blocks)}")
    for cls in design.classes:
        pts = [design.block(s).points for s in cls]
        if frozenset().union(*pts) != all_points or sum(map(len, pts)) != J:
            problems.append(f"class {design.class_of(cls[0])} is not a partition")
    for b in design.blocks:
        if len(b.points) != q ** (k - 2):
            problems.append(f"block of U_{b.server} has size {len(b.points)}")
    for j in design.points:
        owners = owners_of_job(design, j)
        if sorted(design.class_of(s) for s in owners) != list(range(1, k + 1)):
            problems.append(f"job {j} owners {owners} are not one per class")
    return problems


def design_to_dict(design: ResolvableDesign) -> dict:
    p = design.params
    return {
        "q": p.q,
        "k": p.k,
        "K": p.K,
        "J": p.J,
        "blocks": [
            {
                "server": b.server,
                "class": b.class_index,
                "symbol": b.symbol,
                "points": sorted(b.points),
            }
            for b in design.blocks
        ],
        "classes": [list(c) for c in design.classes],
        "owners": {str(j): list(owners_of_job(design, j)) for j in design.points},
    }
