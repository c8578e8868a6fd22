"""Acceptance criteria, one PASS/FAIL line each.

Criteria that cannot be met as stated are strict xfails: they still run the
full check and print FAIL with the measured values.
"""

import time

import numpy as np
import pytest

from srg65 import fixtures
from srg65 import pipeline as P
from srg65 import residue_search as rs
from srg65.blocks import CycMatrix, PolyMatrix, compact, expand
from srg65.cyclotomic import PolyResidue, crt_reconstruct, format_poly, reduce_residue
from srg65.enumeration import assemble_core, check_integer_equation, enumerate_space, naive_filter
from srg65.gf2 import AffineSpaceGF2, build_constraints, build_gauge, mod2_residual, solve_affine
from srg65.srg import BorderedForm, SrgParams, assemble_adjacency, canonical_border, check_srg, conference_matrix

FIRST = CycMatrix(1, fixtures.C1_FIRST)
SECOND = CycMatrix(1, fixtures.C1_SECOND)
CHAIN = fixtures.example_chain()


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        return ok

    return emit


@pytest.fixture(scope="module")
def full_runs(tmp_path_factory):
    """Two complete default pipeline runs (main branch, gauged 2^32 enumeration)."""
    runs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"run{k}")
        t0 = time.perf_counter()
        summary = P.run_pipeline(P.PipelineConfig(out))
        runs.append((out, summary, time.perf_counter() - t0))
    return runs


# 1 ---------------------------------------------------------------------------


def test_1a_stage_c1(report):
    t0 = time.perf_counter()
    c1s = rs.search_c1()
    dt = time.perf_counter() - t0
    ok = len(c1s) == 4 and FIRST in c1s and SECOND in c1s and dt < 10
    assert report("1a", ok, f"stage c1 emits {len(c1s)} matrices, both printed ones present: {FIRST in c1s and SECOND in c1s} ({dt:.2f} s)")


def test_1b_stage_cm1(report):
    counts = {}
    for name, c1 in (("first", FIRST), ("second", SECOND)):
        red = rs.search_cm1(c1)
        counts[name] = (len(red.raw), len(red.reduced))
    has_printed = CHAIN[2] in rs.search_cm1(SECOND).raw
    ok = all(c == (32, 10) for c in counts.values()) and has_printed
    assert report("1b", ok, f"stage cm1 raw/orbit-reduced per C(1): {counts}; printed C(-1) present: {has_printed}")


def ci_aggregations(c1):
    red = rs.search_cm1(c1)
    per = {v: rs.search_ci(c1, v) for v in red.raw}
    kept = [per[v] for v in red.reduced]
    return {
        "sum over kept C(-1)": sum(map(len, kept)),
        "distinct over kept C(-1)": len({w for ws in kept for w in ws}),
        "sum over all 32 C(-1)": sum(map(len, per.values())),
    }


@pytest.mark.xfail(strict=True, reason="C(i) totals 1422/1224 are not reproduced by either aggregation; see the decisions ledger")
def test_1c_stage_ci_totals(report):
    t0 = time.perf_counter()
    first, second = ci_aggregations(FIRST), ci_aggregations(SECOND)
    dt = time.perf_counter() - t0
    eq8 = CHAIN[4] in rs.search_ci(SECOND, CHAIN[2])
    ok = any(first[k] == 1422 and second[k] == 1224 for k in first)
    report("1c", ok, f"stage ci totals target 1422/1224; first {first}; second {second}; printed C(i) present: {eq8} ({dt:.1f} s)")
    assert ok


# 2 ---------------------------------------------------------------------------


def test_2_crt_exactness(report):
    t0 = time.perf_counter()
    cx = rs.reconstruct_cx(*(CHAIN[d] for d in (1, 2, 4, 8)))
    dt = time.perf_counter() - t0
    got = {k: format_poly(cx.entry(*k)) for k in fixtures.CX_EXAMPLE_TEXT}
    mismatched = [k for k in got if got[k] != fixtures.CX_EXAMPLE_TEXT[k]]
    ok = not mismatched and dt < 1
    assert report("2", ok, f"reconstruct_cx reproduces {10 - len(mismatched)}/10 printed polynomials exactly ({dt * 1e3:.1f} ms)")


# 3 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="16 of the 160 C(zeta_8) candidates of the main branch lift to zeta_16; see the decisions ledger")
def test_3_lift_emptiness(report):
    t0 = time.perf_counter()
    printed = len(rs.lift_zeta16(rs.reconstruct_cx(*(CHAIN[d] for d in (1, 2, 4, 8)))))
    counts = []
    for u in rs.search_cz8(SECOND, CHAIN[2], CHAIN[4]):
        counts.append(len(rs.lift_zeta16(rs.reconstruct_cx(SECOND, CHAIN[2], CHAIN[4], u))))
    dt = time.perf_counter() - t0
    nonempty = sum(c > 0 for c in counts)
    ok = printed == 0 and nonempty == 0 and dt < 3600
    report("3", ok, f"lift_zeta16: printed chain {printed} candidates; {nonempty} of {len(counts)} main branch chains "
                    f"have lifts ({sum(counts)} candidates in total) ({dt:.0f} s)")
    assert ok


# 4 ---------------------------------------------------------------------------


def test_4_affine_dimensions(report, printed_d):
    t0 = time.perf_counter()
    free = solve_affine(printed_d, build_constraints(printed_d))
    gauged = solve_affine(printed_d, build_constraints(printed_d, build_gauge(printed_d)))
    dt = time.perf_counter() - t0
    ok = free.dimension == 62 and gauged.dimension == 32 and dt < 1
    assert report("4", ok, f"affine dimension {free.dimension} ungauged, {gauged.dimension} gauged ({dt * 1e3:.0f} ms)")


# 5 ---------------------------------------------------------------------------


def test_5_fast_integer_equation(report, printed_d):
    t0 = time.perf_counter()
    ok_e, _ = check_integer_equation(fixtures.printed_e(), printed_d)
    dt = time.perf_counter() - t0
    assert report("5 (fast tier)", ok_e and dt < 1, f"printed E satisfies the integer equation: {ok_e} ({dt * 1e3:.1f} ms)")


@pytest.mark.slow
def test_5_full_enumeration(report, full_runs):
    out, summary, dt = full_runs[0]
    chain = summary["chains"][0]
    idx = chain["printed_index"]
    ok = idx is not None and dt < 8 * 3600
    assert report("5 (long tier)", ok, f"gauged 2^32 enumeration: {chain['survivors']} survivors, printed E among them: "
                                     f"{idx is not None} (whole pipeline {dt:.0f} s)")


# 6 ---------------------------------------------------------------------------


def test_6_final_artifact(report, printed_d):
    t0 = time.perf_counter()
    a = assemble_adjacency(BorderedForm(canonical_border(), assemble_core(fixtures.printed_e(), printed_d)))
    same = bool(np.array_equal(a, fixtures.printed_adjacency()))
    srg = check_srg(a, SrgParams(65, 32, 15, 16)).ok
    s = conference_matrix(a)
    conf = bool(np.array_equal(s @ s, 65 * np.eye(66, dtype=np.int64)))
    dt = time.perf_counter() - t0
    ok = same and srg and conf and dt < 1
    assert report("6", ok, f"assembled A equals printed: {same}; srg(65,32,15,16): {srg}; S^2 = 65 I: {conf} ({dt * 1e3:.0f} ms)")


# 7 ---------------------------------------------------------------------------


def test_7_demos(report):
    t0 = time.perf_counter()
    pet, hs = P.run_demo("petersen"), P.run_demo("hs50")
    dt = time.perf_counter() - t0
    ok = pet.ok and hs.ok and dt < 1
    assert report("7", ok, f"Petersen srg(10,3,0,1): {pet.ok}; Hoffman-Singleton srg(50,7,0,1): {hs.ok} ({dt * 1e3:.0f} ms)")


# 8 ---------------------------------------------------------------------------


def test_8a_compaction_properties(report, rng):
    n, bad = 1000, 0
    for _ in range(n):
        l, m = int(rng.integers(1, 4)), int(rng.integers(1, 9))
        p = PolyMatrix(m, rng.integers(-3, 4, size=(l, l, m)))
        q = PolyMatrix(m, rng.integers(-3, 4, size=(l, l, m)))
        ep, eq = expand(p), expand(q)
        if compact(ep, l, m) != p or not np.array_equal(expand(p @ q), ep @ eq) or not np.array_equal(expand(p + q), ep + eq):
            bad += 1
    assert report("8a", bad == 0, f"compaction/expansion round-trip and homomorphism: {n - bad}/{n} random instances")


def test_8b_crt_round_trip(report, rng):
    n, bad = 1000, 0
    for _ in range(n):
        f = PolyResidue(16, tuple(int(v) for v in rng.integers(0, 2, 16)))
        if crt_reconstruct(*(reduce_residue(f, d) for d in (1, 2, 4, 8))) != f.fold(8):
            bad += 1
    assert report("8b", bad == 0, f"CRT round-trip on random 0/1 length-16 polynomials: {n - bad}/{n}")


def _toy(rng, n):
    d = np.triu(rng.integers(0, 3, size=(n, n)), 1)
    d = d + d.T
    e = np.triu(rng.integers(0, 2, size=(n, n)) * (d == 1), 1) + np.triu(d == 2, 1)
    e = e + e.T
    return d, (e @ d + d @ e + e + d) % 2


def test_8c_gf2_oracle(report, rng):
    n_inst, bad = 120, 0
    for _ in range(n_inst):
        d, h = _toy(rng, int(rng.integers(2, 7)))
        cmap = build_constraints(d, build_gauge(d) if rng.integers(2) else [])
        space = solve_affine(d, cmap, h)
        free = cmap.free_positions()
        oracle = set()
        for bits in range(1 << len(free)):
            e = AffineSpaceGF2(len(d), tuple(free), tuple(zip(*np.nonzero(np.triu(d == 2, 1)))), 0, ()).decode(bits)
            if not mod2_residual(e, d, h).any():
                oracle.add(bits)
        got = set(space.points()) if space.feasible else set()
        bad += got != oracle
    assert report("8c", bad == 0, f"GF(2) solver equals exhaustive oracle on {n_inst - bad}/{n_inst} toy instances of order <= 6")


def test_8d_enumerator_oracle(report, gauged_space, printed_d):
    c = gauged_space.coordinates(fixtures.printed_e())
    low = 16
    sub = AffineSpaceGF2(gauged_space.order, gauged_space.var_index, gauged_space.forced_one,
                         gauged_space.point(c >> low << low), gauged_space.basis[:low])
    want = [r.key() for r in naive_filter(sub, printed_d)]
    got = [r.key() for r in enumerate_space(sub, printed_d, shards=4)]
    ok = got == want and len(want) >= 1
    assert report("8d", ok, f"enumerator equals naive filter on a 2^{low}-point space ({len(got)} survivors each)")


@pytest.mark.slow
def test_8e_determinism(report, full_runs):
    def files(root):
        return {p.relative_to(root): p.read_bytes() for p in root.rglob("*") if p.is_file() and p.name != "timings.json"}

    (a, sa, _), (b, sb, _) = full_runs
    fa, fb = files(a), files(b)
    ok = fa == fb and sa == sb
    assert report("8e", ok, f"two full pipeline runs: {len(fa)} files, byte-identical: {fa == fb}")
