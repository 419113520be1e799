"""Exit criteria: exact reproduction, formula reconciliation, oracle agreement, properties."""

import itertools
import json
import time
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from camr.analysis import camr_loads, ccdc_load, measured_loads, min_jobs
from camr.cli import main
from camr.design import (
    DesignParams,
    build_design,
    enumerate_stage2_groups,
    intersect_blocks,
    owners_of_job,
)
from camr.jobs import max_aggregator, sum_aggregator
from camr.placement import batch_of, storage_fraction
from camr.shuffle import MissingData, coded_exchange
from camr.simulation import simulate

QS, KS, GAMMAS = (2, 3, 4, 5), (2, 3, 4), (1, 2, 3)
GRID = list(itertools.product(QS, KS, GAMMAS))
SEEDS = (11, 23, 37, 41, 59)
F = Fraction


def _alpha(res, job, function, subfiles):
    """Reference aggregate straight from the raw payload text."""
    spec = res.corpus[job - 1]
    word = spec.vocabulary[function - 1]
    total = sum(spec.payloads[n - 1].split().count(word) for n in subfiles)
    return total.to_bytes(res.value_bytes, "big")


def _xor(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def test_1_worked_example(criterion):
    start = time.perf_counter()
    res = simulate(2, 3, 2, value_bytes=8, seed=0)
    elapsed = time.perf_counter() - start
    d, plan = res.design, res.plan
    checks = {
        "loads": measured_loads(res.log, 2, 3, 8) == (F(1, 4), F(1, 4), F(1, 2)),
        "total": sum(measured_loads(res.log, 2, 3, 8)) == 1,
        "mu": storage_fraction(plan) == F(1, 3),
        "owners": [owners_of_job(d, j) for j in d.points] == [(1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)],
        "batches": [batch_of(plan, 1, u) for u in (3, 5, 1)] == [(1, 2), (3, 4), (5, 6)],
        "correct": res.correct,
        "runtime": elapsed < 1.0,
    }
    # stage-2 transmissions within group {U_1, U_3, U_6}
    a6, a3, a1 = _alpha(res, 1, 6, [3, 4]), _alpha(res, 2, 3, [1, 2]), _alpha(res, 3, 1, [5, 6])
    sent = {r.sender: r.payload for r in res.log if r.stage == 2 and r.meta["group"] == [1, 3, 6]}
    checks["table1_tx"] = sent == {1: _xor(a6[:4], a3[:4]), 3: _xor(a6[4:], a1[:4]), 6: _xor(a3[4:], a1[4:])}
    checks["table1_rx"] = (
        res.servers[1].inbox[(1, 3, frozenset({5, 6}))].data == a1
        and res.servers[3].inbox[(3, 2, frozenset({1, 2}))].data == a3
        and res.servers[6].inbox[(6, 1, frozenset({3, 4}))].data == a6
    )
    # values still needed after stage 2, delivered by stage 3
    table2 = {
        1: {3: {1, 2, 3, 4}, 4: {1, 2, 3, 4}}, 2: {1: {1, 2, 3, 4}, 2: {1, 2, 3, 4}},
        3: {2: {3, 4, 5, 6}, 4: {3, 4, 5, 6}}, 4: {1: {3, 4, 5, 6}, 3: {3, 4, 5, 6}},
        5: {2: {1, 2, 5, 6}, 3: {1, 2, 5, 6}}, 6: {1: {1, 2, 5, 6}, 4: {1, 2, 5, 6}},
    }
    got2, payloads_ok = {}, True
    for r in (r for r in res.log if r.stage == 3):
        (m,), j = r.receivers, r.meta["job"]
        subs = [s for (f, jj, s) in res.servers[m].inbox if f == m and jj == j and len(s) == 4]
        got2.setdefault(m, {})[j] = set(subs[0]) if len(subs) == 1 else None
        payloads_ok &= len(subs) == 1 and r.payload == _alpha(res, j, m, sorted(subs[0]))
    checks["table2"] = got2 == table2
    checks["table2_payloads"] = payloads_ok
    failed = [k for k, v in checks.items() if not v]
    criterion("1 worked example (q=2,k=3,gamma=2)", not failed,
              f"runtime={elapsed:.3f}s failed={failed}" if failed else f"runtime={elapsed:.3f}s")
    assert not failed


def test_2_formula_reconciliation(criterion):
    start = time.perf_counter()
    bad = []
    for q, k, gamma in GRID:
        res = simulate(q, k, gamma, seed=0)
        if measured_loads(res.log, q, k, res.value_bytes) != camr_loads(q, k)[:3]:
            bad.append((q, k, gamma))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    criterion("2 measured == analytic loads, 36 grid points", ok, f"runtime={elapsed:.1f}s mismatches={bad}")
    assert ok


def test_3_end_to_end_correctness(criterion):
    bad = []
    for (q, k, gamma), seed in itertools.product(GRID, SEEDS):
        res = simulate(q, k, gamma, seed=seed)
        if res.outputs != res.oracle or set(res.outputs) != {(f, j) for f in range(1, q * k + 1) for j in range(1, q ** (k - 1) + 1)}:
            bad.append((q, k, gamma, seed))
    criterion("3 reduce outputs == oracle, 36 points x 5 seeds", not bad, f"failures={bad}" if bad else "")
    assert not bad


def test_4_ccdc_equality(criterion):
    bad = [(q, k) for q, k, _ in GRID if ccdc_load(F(k - 1, q * k), q * k) != camr_loads(q, k)[3]]
    criterion("4 CCDC load == CAMR load at mu=(k-1)/K", not bad, f"failures={bad}" if bad else "")
    assert not bad


def test_5_job_counts(criterion, capsys):
    main(["compare", "--K", "100", "--format", "json"])
    rows100 = {r["k"]: (r["J_camr"], r["J_ccdc_min"]) for r in json.loads(capsys.readouterr().out)["rows"]}
    main(["compare", "--K", "6", "--format", "json"])
    rows6 = {r["k"]: (r["J_camr"], r["J_ccdc_min"]) for r in json.loads(capsys.readouterr().out)["rows"]}
    table = rows100.get(2) == (50, 4950) and rows100.get(4) == (15625, 3921225) and rows100.get(5) == (160000, 75287520)
    k6 = rows6.get(3) == (4, 20)
    chain = all(
        min_jobs(q, k)[1] >= q**k > q ** (k - 1) == min_jobs(q, k)[0] for q in QS for k in KS
    )
    ok = table and k6 and chain
    criterion("5 job-count table K=100, K=6 and bound chain", ok, f"table={table} K6={k6} chain={chain}")
    assert ok


# -- criterion 6: property suites ----------------------------------------------

def _design_ok(q, k):
    d = build_design(DesignParams(q, k))
    for cls in d.classes:
        blocks = [d.block(s).points for s in cls]
        if sum(map(len, blocks)) != d.params.J or frozenset().union(*blocks) != set(d.points):
            return False
    if any(len(b.points) != q ** (k - 2) for b in d.blocks):
        return False
    for classes in itertools.combinations(d.classes, k - 1):
        for servers in itertools.product(*classes):
            if len(intersect_blocks(d, servers)) != 1:
                return False
    return len(enumerate_stage2_groups(d)) == q ** (k - 1) * (q - 1)


def test_6a_design_invariants(criterion):
    bad = [(q, k) for q in QS for k in KS if not _design_ok(q, k)]
    criterion("6a design invariants over grid", not bad, f"failures={bad}" if bad else "")
    assert not bad


_agg_cases = 0


@settings(max_examples=500, deadline=None, database=None)
@given(st.sampled_from([sum_aggregator, max_aggregator]), st.integers(1, 9),
       st.integers(0, 2**72), st.integers(0, 2**72), st.integers(0, 2**72))
def _aggregator_laws(make, width, a, b, c):
    global _agg_cases
    agg = make(width)
    m = 1 << (8 * width)
    a, b, c = a % m, b % m, c % m
    assert agg.encode(agg.combine(a, agg.combine(b, c))) == agg.encode(agg.combine(agg.combine(a, b), c))
    assert agg.encode(agg.combine(a, b)) == agg.encode(agg.combine(b, a))
    _agg_cases += 1


def test_6b_aggregator_laws(criterion):
    try:
        _aggregator_laws()
        ok, detail = _agg_cases >= 500, f"cases={_agg_cases}"
    except AssertionError as exc:
        ok, detail = False, str(exc)
    criterion("6b aggregator associativity/commutativity (500 cases)", ok, detail)
    assert ok


_exchange_cases = 0

_groups = st.integers(2, 7).flatmap(
    lambda g: st.integers(1, 5).flatmap(
        lambda per: st.tuples(
            st.lists(st.integers(1, 100), min_size=g, max_size=g, unique=True),
            st.lists(st.binary(min_size=per * (g - 1), max_size=per * (g - 1)), min_size=g, max_size=g),
        )
    )
)


@settings(max_examples=500, deadline=None, database=None)
@given(_groups)
def _exchange_round_trip(case):
    global _exchange_cases
    servers, payloads = case
    group = tuple(sorted(servers))
    chunks = dict(zip(group, payloads))
    needs = {kp: kp for kp in group}

    def fetch(holder, key):
        if holder == key:
            raise MissingData(f"U_{holder} lacks its own chunk")
        return chunks[key]

    decoded, records = coded_exchange(group, needs, fetch, len(payloads[0]))
    assert decoded == chunks
    assert sum(r.bits for r in records) * (len(group) - 1) == 8 * len(payloads[0]) * len(group)
    _exchange_cases += 1


def test_6c_coded_exchange_round_trip(criterion):
    try:
        _exchange_round_trip()
        ok, detail = _exchange_cases >= 500, f"cases={_exchange_cases}"
    except AssertionError as exc:
        ok, detail = False, str(exc)
    criterion("6c coded exchange round trip (500 cases)", ok, detail)
    assert ok


def test_6d_determinism(criterion):
    same = True
    for q, k, gamma in [(2, 3, 2), (3, 4, 1), (5, 2, 3)]:
        a = simulate(q, k, gamma, seed=7)
        b = simulate(q, k, gamma, seed=7, workers=4)
        la = "".join(json.dumps(r.to_dict()) + "\n" for r in a.log).encode()
        lb = "".join(json.dumps(r.to_dict()) + "\n" for r in b.log).encode()
        same &= la == lb
    criterion("6d determinism (same seed, byte-identical logs)", same)
    assert same
