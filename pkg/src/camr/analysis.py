"""Exact-rational communication loads, job-count minimums and load reports.

No floating point here: loads are ``Fraction`` and job counts are Python ints.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from camr.design import DesignParams


class LoadMismatch(AssertionError):
    pass


def fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def camr_loads(q: int, k: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Per-stage and total load (L1, L2, L3, L) of the three-stage scheme."""
    K = DesignParams(q, k).K
    l1 = Fraction(k, K * (k - 1))
    l2 = Fraction((q - 1) * k, K * (k - 1))
    l3 = Fraction(q - 1, q)
    total = Fraction(k * (q - 1) + 1, q * (k - 1))
    assert l1 + l2 + l3 == total, (q, k)
    return l1, l2, l3, total


def ccdc_load(mu: Fraction, K: int) -> Fraction:
    """Load of the compressed coded scheme at storage fraction ``mu``."""
    r = Fraction(mu) * K
    if r.denominator != 1 or not 1 <= r < K:
        raise ValueError(f"mu*K = {r} must be an integer in 1..K-1")
    return (1 - Fraction(mu)) * (r + 1) / r


def min_jobs(q: int, k: int) -> tuple[int, int]:
    """(J_camr, J_ccdc_min) = (q^(k-1), C(kq, k)); checks C(kq,k) >= q^k > q^(k-1)."""
    DesignParams(q, k)
    j_camr = q ** (k - 1)
    j_ccdc = comb(k * q, k)
    assert j_ccdc >= q**k > j_camr, (q, k)
    return j_camr, j_ccdc


def uncoded_stage_loads(q: int, k: int) -> tuple[Fraction, Fraction, Fraction]:
    """Per-stage load when every chunk is sent uncoded (simulator-defined baseline)."""
    K = DesignParams(q, k).K
    return Fraction(k, K), Fraction(q - 1, q), Fraction(q - 1, q)


def uncoded_baseline_load(q: int, k: int) -> Fraction:
    """Simulator-defined reference: aggregation allowed, no coding; k/K + 2(q-1)/q."""
    return sum(uncoded_stage_loads(q, k), Fraction(0))


@dataclass(frozen=True)
class LoadReport:
    q: int
    k: int
    gamma: int
    value_bytes: int
    seed: int
    measured: tuple[Fraction, Fraction, Fraction]
    analytic: tuple[Fraction, Fraction, Fraction]
    total: Fraction
    ccdc: Fraction
    baseline: Fraction
    j_camr: int
    j_ccdc_min: int
    correct: bool
    coded: bool = True

    @property
    def ok(self) -> bool:
        return self.correct and self.measured == self.analytic

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "k": self.k,
            "K": self.q * self.k,
            "J": self.q ** (self.k - 1),
            "N": self.k * self.gamma,
            "gamma": self.gamma,
            "value_bytes": self.value_bytes,
            "seed": self.seed,
            "coded": self.coded,
            "measured": {f"L{i}": fmt(x) for i, x in enumerate(self.measured, 1)},
            "analytic": {f"L{i}": fmt(x) for i, x in enumerate(self.analytic, 1)},
            "L_total": fmt(self.total),
            "L_ccdc": fmt(self.ccdc),
            "L_baseline": fmt(self.baseline),
            "baseline_note": "simulator-defined uncoded reference, not a published scheme",
            "J_camr": self.j_camr,
            "J_ccdc_min": self.j_ccdc_min,
            "correct": self.correct,
        }

    def csv_row(self) -> list[str]:
        return [
            str(self.q),
            str(self.k),
            str(self.gamma),
            *(fmt(x) for x in self.measured),
            fmt(self.total),
            fmt(self.ccdc),
            fmt(self.baseline),
            str(self.j_camr),
            str(self.j_ccdc_min),
            str(self.correct).lower(),
        ]

    def to_text(self) -> str:
        m = self.measured
        return "\n".join(
            [
                f"q={self.q} k={self.k} gamma={self.gamma} K={self.q * self.k} "
                f"J={self.j_camr} N={self.k * self.gamma} value_bytes={self.value_bytes} seed={self.seed}",
                f"stage loads (measured): {fmt(m[0])}, {fmt(m[1])}, {fmt(m[2])}",
                f"stage loads (analytic): {', '.join(fmt(x) for x in self.analytic)}",
                f"total load: {fmt(self.total)}",
                f"CCDC load at same storage: {fmt(self.ccdc)}",
                f"uncoded baseline (simulator-defined): {fmt(self.baseline)}",
                f"jobs needed: {self.j_camr} vs CCDC minimum {self.j_ccdc_min}",
                f"correct: {str(self.correct).lower()}",
            ]
        )


CSV_HEADER = [
    "q", "k", "gamma", "L1", "L2", "L3", "L_total",
    "L_ccdc", "L_baseline", "J_camr", "J_ccdc_min", "correct",
]


def to_csv(reports, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def measured_loads(log, q: int, k: int, value_bytes: int) -> tuple[Fraction, Fraction, Fraction]:
    """Bits per stage normalized by J*Q*B (B = 8*value_bytes bits)."""
    p = DesignParams(q, k)
    bits = [0, 0, 0]
    for rec in log:
        bits[rec.stage - 1] += rec.bits
    norm = p.J * p.K * 8 * value_bytes
    return tuple(Fraction(b, norm) for b in bits)


def reconcile(
    log,
    q: int,
    k: int,
    gamma: int,
    value_bytes: int,
    seed: int = 0,
    correct: bool = True,
    coded: bool = True,
    strict: bool = True,
) -> LoadReport:
    """Build a LoadReport; with ``strict`` raise on the first stage whose measured load diverges."""
    measured = measured_loads(log, q, k, value_bytes)
    l1, l2, l3, total = camr_loads(q, k)
    analytic = (l1, l2, l3) if coded else uncoded_stage_loads(q, k)
    if strict:
        for i, (m, a) in enumerate(zip(measured, analytic), 1):
            if m != a:
                raise LoadMismatch(f"stage {i}: measured load {fmt(m)} != analytic {fmt(a)}")
    K = q * k
    j_camr, j_ccdc = min_jobs(q, k)
    return LoadReport(
        q, k, gamma, value_bytes, seed,
        measured, analytic,
        sum(measured, Fraction(0)),
        ccdc_load(Fraction(k - 1, K), K),
        uncoded_baseline_load(q, k),
        j_camr, j_ccdc, correct, coded,
    )
