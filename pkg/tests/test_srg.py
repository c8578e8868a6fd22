import numpy as np
import pytest

from srg65 import fixtures
from srg65.errors import ContractError, InconsistentInputError
from srg65.srg import (
    BorderedForm,
    SrgParams,
    assemble_adjacency,
    build_H,
    canonical_border,
    check_bordered,
    check_conference,
    check_srg,
    conference_matrix,
)

P65 = SrgParams(65, 32, 15, 16)


def cycle(n):
    a = np.zeros((n, n), np.int64)
    for i in range(n):
        a[i, (i + 1) % n] = a[(i + 1) % n, i] = 1
    return a


@pytest.mark.parametrize(
    "a, params, ok",
    [
        (fixtures.petersen(), SrgParams(10, 3, 0, 1), True),
        (cycle(5), SrgParams(5, 2, 0, 1), True),
        (np.ones((10, 10), np.int64) - np.eye(10, dtype=np.int64), SrgParams(10, 3, 0, 1), False),
    ],
)
def test_check_srg(a, params, ok):
    assert check_srg(a, params).ok is ok


def test_degree_violation_is_reported():
    rep = check_srg(np.ones((10, 10), np.int64) - np.eye(10, dtype=np.int64), SrgParams(10, 3, 0, 1))
    assert rep.first.identity == "regular"
    assert (rep.first.row, rep.first.expected, rep.first.actual) == (1, 3, 9)


def test_infeasible_params():
    with pytest.raises(ContractError):
        SrgParams(10, 3, 1, 1)
    assert SrgParams.parse("65, 32, 15, 16") == P65


def test_build_h():
    assert build_H(2).tolist() == [[15, 15, 16, 16]] * 2 + [[16] * 4] * 2
    b = canonical_border()[None, :]
    assert np.array_equal(build_H(32), 16 - b.T @ b)
    assert np.array_equal(build_H(16, 2), 2 * build_H(16))


def test_printed_matrix_properties():
    a = fixtures.printed_adjacency()
    assert check_srg(a, P65).ok
    assert (a.sum(axis=1) == 32).all()
    common = a @ a
    off = ~np.eye(65, dtype=bool)
    assert np.array_equal(common[off], np.where(a[off] == 1, 15, 16))


def test_bordered_printed():
    bf = BorderedForm.from_adjacency(fixtures.printed_adjacency())
    assert check_bordered(bf).ok
    assert np.array_equal(assemble_adjacency(bf), fixtures.printed_adjacency())


def test_bordered_failures():
    assert not check_bordered(BorderedForm(canonical_border(), np.zeros((64, 64), np.int64))).ok
    core = fixtures.printed_adjacency()[1:, 1:].copy()
    core[3, 40] ^= 1
    core[40, 3] ^= 1
    rep = check_bordered(BorderedForm(canonical_border(), core))
    assert not rep.ok and rep.first.col in (4, 41)
    with pytest.raises(InconsistentInputError):
        assemble_adjacency(BorderedForm(canonical_border(), core))


def test_permuted_core_is_still_srg(rng):
    a = fixtures.printed_adjacency()
    # permute within the neighbourhood and within the non-neighbourhood of vertex 1
    perm = np.concatenate([[0], 1 + rng.permutation(32), 33 + rng.permutation(32)])
    b = a[np.ix_(perm, perm)]
    assert check_srg(b, P65).ok
    assert check_bordered(BorderedForm.from_adjacency(b)).ok


def test_conference_matrix():
    s = conference_matrix(fixtures.printed_adjacency())
    assert s.shape == (66, 66)
    assert not np.diag(s).any()
    assert np.array_equal(s, s.T)
    assert np.array_equal(s @ s, 65 * np.eye(66, dtype=np.int64))
    assert check_conference(s).ok
    s[1, 2] = s[2, 1] = -s[1, 2]
    assert not check_conference(s).ok
