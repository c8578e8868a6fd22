import numpy as np
import pytest

from srg65 import fixtures
from srg65.errors import ConstraintError, InconsistentInputError
from srg65.gf2 import (
    FORCED0,
    FORCED1,
    FREE,
    AffineSpaceGF2,
    build_constraints,
    build_gauge,
    expand_to_D,
    gauge_rank,
    mod2_residual,
    solve_affine,
)


def random_instance(rng, n, planted):
    d = rng.integers(0, 3, size=(n, n))
    d = np.triu(d, 1)
    d = d + d.T
    d[np.diag_indices(n)] = rng.integers(0, 2, n)
    if planted:
        # choose H so that a random admissible E solves the system
        e = np.triu(rng.integers(0, 2, size=(n, n)) * (d == 1), 1) + np.triu(d == 2, 1)
        e = e + e.T
        return d, (e @ d + d @ e + e + d) % 2
    h = rng.integers(0, 2, size=(n, n))
    return d, np.triu(h) + np.triu(h, 1).T


def exhaustive(d, h, cmap):
    free = cmap.free_positions()
    base = np.zeros_like(d)
    base[cmap.state == FORCED1] = 1
    sols = set()
    for bits in range(1 << len(free)):
        e = base.copy()
        for k, (i, j) in enumerate(free):
            if bits >> k & 1:
                e[i, j] = e[j, i] = 1
        if not mod2_residual(e, d, h).any():
            sols.add(bits)
    return sols


def test_printed_d(printed_d):
    assert set(np.unique(printed_d)) <= {0, 1, 2}
    assert (printed_d[:16].sum(axis=1) == 31).all()
    assert (printed_d[16:].sum(axis=1) == 32).all()


def test_expand_rejects_bad_cx():
    cx = fixtures.example_cx()
    bad = type(cx)(8, np.where(np.arange(8) == 0, 1, 0) + cx.coeffs * 0)
    with pytest.raises(InconsistentInputError):
        expand_to_D(bad)


def test_dimensions(printed_d):
    free = solve_affine(printed_d, build_constraints(printed_d))
    gauge = build_gauge(printed_d)
    gauged = solve_affine(printed_d, build_constraints(printed_d, gauge))
    assert free.dimension == 62
    assert gauged.dimension == 32
    assert len(gauge) == 30
    assert gauge_rank(printed_d) == 30


def test_gauged_solutions_are_ungauged_solutions(printed_d, gauged_space, rng):
    for c in rng.integers(0, 2**32, 50):
        e = gauged_space.decode(gauged_space.point(int(c)))
        assert not mod2_residual(e, printed_d).any()
        for i, j in build_gauge(printed_d):
            assert e[i, j] == 0


def test_printed_e_is_in_space(printed_d, gauged_space):
    assert gauged_space.coordinates(fixtures.printed_e()) is not None


def test_constraint_map(printed_d):
    cmap = build_constraints(printed_d)
    st = cmap.state
    assert (st[printed_d == 0] == FORCED0).all()
    assert (st[printed_d == 2] == FORCED1).all()
    assert (np.diag(st) == FORCED0).all()
    assert (st[(printed_d == 1) & ~np.eye(32, dtype=bool)] == FREE).all()
    assert np.array_equal(st, st.T)


@pytest.mark.parametrize(
    "row, expected",
    [([0, 0, 0], []), ([0, 2, 1], [])],
    ids=["no-ones", "first-one-after-diagonal"],
)
def test_gauge_trivial_rows(row, expected):
    d = np.zeros((3, 3), np.int64)
    d[0] = d[:, 0] = row
    assert [p for p in build_gauge(d) if p[0] == 0] == expected


def test_diagonal_two_is_a_constraint_error():
    d = np.zeros((3, 3), np.int64)
    d[1, 1] = 2
    with pytest.raises(ConstraintError):
        build_constraints(d)


def test_infeasible_is_a_result_not_an_exception():
    d = np.zeros((2, 2), np.int64)
    h = np.array([[1, 0], [0, 0]])
    space = solve_affine(d, build_constraints(d), h)
    assert not space.feasible
    back = AffineSpaceGF2.loads(space.dumps())
    assert not back.feasible and list(back.points()) == []


def test_against_exhaustive_oracle(rng):
    feasible = 0
    for trial in range(150):
        n = int(rng.integers(2, 7))
        d, h = random_instance(rng, n, planted=trial % 3 != 0)
        gauge = build_gauge(d) if trial % 2 else []
        try:
            cmap = build_constraints(d, gauge)
        except ConstraintError:
            continue
        space = solve_affine(d, cmap, h)
        oracle = exhaustive(d, h, cmap)
        if not space.feasible:
            assert oracle == set()
            continue
        feasible += 1
        got = set(space.points())
        assert len(got) == 1 << space.dimension
        assert got == oracle
    assert feasible >= 50


def test_basis_is_independent(gauged_space):
    rows = list(gauged_space.basis)
    rank = 0
    for bit in range(gauged_space.num_free_vars):
        pivot = next((r for r in rows if r >> bit & 1), None)
        if pivot is None:
            continue
        rows.remove(pivot)
        rows = [r ^ pivot if r >> bit & 1 else r for r in rows]
        rank += 1
    assert rank == gauged_space.dimension


def test_deterministic_and_serialisable(printed_d, gauged_space, tmp_path):
    again = solve_affine(printed_d, build_constraints(printed_d, build_gauge(printed_d)))
    assert again == gauged_space
    path = tmp_path / "space.txt"
    gauged_space.save(path)
    assert AffineSpaceGF2.load(path) == gauged_space
