import numpy as np
import pytest

from srg65 import fixtures
from srg65.blocks import PolyMatrix
from srg65.cyclotomic import PolyResidue
from srg65.enumeration import (
    EnumShard,
    Enumerator,
    assemble_core,
    check_integer_equation,
    enumerate_space,
    format_survivors,
    naive_filter,
    parse_survivors,
)
from srg65.errors import ContractError, InconsistentInputError
from srg65.gf2 import AffineSpaceGF2, build_constraints, solve_affine
from srg65.srg import BorderedForm, assemble_adjacency, build_H, canonical_border

LOW = 16


@pytest.fixture(scope="module")
def slice_space(gauged_space):
    """The 2^16 points of the gauged space sharing the printed E's top coordinates."""
    c = gauged_space.coordinates(fixtures.printed_e())
    prefix = c >> LOW << LOW
    return AffineSpaceGF2(
        gauged_space.order, gauged_space.var_index, gauged_space.forced_one,
        gauged_space.point(prefix), gauged_space.basis[:LOW],
    )


def keys(results):
    return [r.key() for r in results]


def toy(rng, n):
    """Random order-n instance whose integer equation has a planted 0/1 solution."""
    while True:
        e = np.triu(rng.integers(0, 2, size=(n, n)), 1)
        e = e + e.T
        f = np.triu(rng.integers(0, 2, size=(n, n)), 1)
        f = f + f.T
        d = e + f
        h = -(2 * e @ e - e @ d - d @ e + e - d)
        space = solve_affine(d, build_constraints(d), h % 2)
        if space.feasible:
            return d, h, space


def test_printed_e_satisfies_integer_equation(printed_d):
    assert check_integer_equation(fixtures.printed_e(), printed_d) == (True, None)


def test_single_flips_break_the_equation(printed_d, rng):
    e0 = fixtures.printed_e()
    free = np.argwhere(np.triu(printed_d == 1, 1))
    for k in rng.choice(len(free), 120, replace=False):
        i, j = free[k]
        e = e0.copy()
        e[i, j] ^= 1
        e[j, i] ^= 1
        ok, bad = check_integer_equation(e, printed_d)
        assert not ok and bad is not None


def test_forced_entries_only_fail(printed_d):
    e = (printed_d == 2).astype(np.int64)
    ok, bad = check_integer_equation(e, printed_d)
    assert not ok
    assert bad.row >= 1 and bad.col >= 1


def test_assemble_core_matches_printed(printed_d):
    core = assemble_core(fixtures.printed_e(), printed_d)
    assert not np.diag(core).any()
    assert np.array_equal(core, core.T)
    a = assemble_adjacency(BorderedForm(canonical_border(), core))
    assert np.array_equal(a, fixtures.printed_adjacency())


def test_core_congruence_mod_x2(printed_d):
    e = fixtures.printed_e()
    ct = PolyMatrix(2, np.stack([e, printed_d - e], axis=-1))
    rhs = PolyMatrix.scalar(32, 2, 16) + PolyMatrix.constant_entries(build_H(16), PolyResidue.all_ones(2))
    assert ct @ ct + ct == rhs


def test_assemble_rejects_bad_difference(printed_d):
    with pytest.raises(InconsistentInputError):
        assemble_core(np.zeros_like(printed_d), printed_d)


@pytest.mark.parametrize("total, ok", [(1, True), (8, True), (3, False), (0, False)])
def test_shard_counts(total, ok):
    if ok:
        shards = [EnumShard(i, total, 10) for i in range(total)]
        coords = sorted(s.coordinates(t) for s in shards for t in range(s.steps))
        assert coords == list(range(1 << 10))
    else:
        with pytest.raises(ContractError):
            EnumShard(0, total, 10)


def test_infeasible_space_is_empty():
    d = np.zeros((2, 2), np.int64)
    space = solve_affine(d, build_constraints(d), np.array([[1, 0], [0, 0]]))
    assert enumerate_space(space, d, np.array([[1, 0], [0, 0]])) == []


def test_toy_instances_match_naive_filter(rng):
    for _ in range(40):
        n = int(rng.integers(3, 7))
        d, h, space = toy(rng, n)
        want = naive_filter(space, d, h)
        assert want, "planted solution must survive"
        for shards in (1, 2):
            if shards <= 1 << space.dimension:
                assert keys(enumerate_space(space, d, h, shards=shards)) == keys(want)


def test_slice_matches_naive_filter(slice_space, printed_d):
    want = naive_filter(slice_space, printed_d)
    got = enumerate_space(slice_space, printed_d, shards=4)
    assert keys(got) == keys(want)
    assert any(np.array_equal(r.e, fixtures.printed_e()) for r in got)


def test_shard_count_does_not_change_output(slice_space, printed_d):
    outs = [format_survivors(enumerate_space(slice_space, printed_d, shards=s)) for s in (1, 2, 16)]
    assert outs[0] == outs[1] == outs[2]
    assert keys(parse_survivors(outs[0])) == keys(enumerate_space(slice_space, printed_d))


def test_gray_walk_matches_recomputation(printed_enumerator):
    en = printed_enumerator
    e = en.base.copy()
    for s in range(1, 1 << 11):
        e ^= en.basis[(s & -s).bit_length() - 1]
        want = en.e_of(s ^ s >> 1)
        masks = (want.astype(np.uint64) << np.arange(32, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)
        assert np.array_equal(e, masks)


def test_checkpoint_resume(slice_space, printed_d, tmp_path):
    en = Enumerator(slice_space, printed_d)
    shard = EnumShard(0, 1, slice_space.dimension)
    ckpt = tmp_path / "ck.json"
    full = [r.coords for r in en.run(shard, chunk=1 << 10)]
    lines = []
    it = en.run(shard, ckpt, lines.append, chunk=1 << 10)
    for _ in range(3):  # interrupt partway through
        if not lines or len(lines) < 20:
            next(it, None)
    it.close()
    resumed = [r.coords for r in en.run(shard, ckpt, chunk=1 << 10)]
    assert sorted(resumed) == sorted(full)
    assert lines and lines[0].startswith("shard 0: steps ")


def test_chunking_is_invisible(slice_space, printed_d):
    en = Enumerator(slice_space, printed_d)
    shard = EnumShard(0, 1, slice_space.dimension)
    a = [r.coords for r in en.run(shard, chunk=1 << 16)]
    b = [r.coords for r in en.run(shard, chunk=777)]
    assert a == b


def test_emitted_matrices_are_valid(slice_space, printed_d):
    for r in enumerate_space(slice_space, printed_d):
        e = r.e
        assert np.array_equal(e, e.T) and not np.diag(e).any()
        assert (e[printed_d == 0] == 0).all() and (e[printed_d == 2] == 1).all()
        assert check_integer_equation(e, printed_d)[0]
