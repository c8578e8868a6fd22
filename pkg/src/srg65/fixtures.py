"""Matrices published with the construction, embedded as fixtures.

Each loader verifies its fixture before returning it, so a corrupted data
file fails loudly at load time.
"""

from __future__ import annotations

from functools import cache
from importlib import resources

import numpy as np

from .blocks import CycMatrix, PolyMatrix, parse_matrix
from .cyclotomic import PolyResidue, conj_transpose_check
from .srg import SrgParams, check_srg


class FixtureError(RuntimeError):
    pass


def _data(name: str) -> np.ndarray:
    return parse_matrix(resources.files("srg65.data").joinpath(name).read_text())


def _ensure(cond: bool, what: str) -> None:
    if not cond:
        raise FixtureError(f"fixture {what} failed verification")


@cache
def petersen() -> np.ndarray:
    a = _data("petersen.txt")
    _ensure(bool(check_srg(a, SrgParams(10, 3, 0, 1))), "petersen")
    return a


PETERSEN_COMPACT = PolyMatrix.from_entries([
    [PolyResidue.from_terms(5, {1: 1, 4: 1}), PolyResidue.constant(5, 1)],
    [PolyResidue.constant(5, 1), PolyResidue.from_terms(5, {2: 1, 3: 1})],
])


def _xpoly(*powers: int) -> list[int]:
    c = [0] * 5
    for p in powers:
        c[p] += 1
    return c


@cache
def hoffman_singleton_bivariate() -> np.ndarray:
    """B(x, y) as an array (2, 2, 5, 5): [i, j, y-power] -> x-coefficients."""
    zero = _xpoly()
    return np.array([
        [
            [_xpoly(1, 4), zero, zero, zero, zero],
            [_xpoly(0), _xpoly(1), _xpoly(4), _xpoly(4), _xpoly(1)],
        ],
        [
            [_xpoly(0), _xpoly(4), _xpoly(1), _xpoly(1), _xpoly(4)],
            [_xpoly(2, 3), zero, zero, zero, zero],
        ],
    ], dtype=np.int64)


# first and second of the two C(1) matrices kept after discarding 3<->4 swaps
C1_FIRST = np.array([[7, 8, 6, 10], [8, 7, 10, 6], [6, 10, 8, 8], [10, 6, 8, 8]])
C1_SECOND = np.array([[9, 6, 7, 9], [6, 9, 9, 7], [7, 9, 6, 10], [9, 7, 10, 6]])

# the example branch below C1_SECOND
CM1_EXAMPLE = np.array([[1, -2, -3, -1], [-2, 1, -1, -3], [-3, -1, -2, 2], [-1, -3, 2, -2]])

# C(i) as (real, imaginary) pairs
_CI = [
    [(1, 0), (-2, 0), (0, -1), (0, -3)],
    [(-2, 0), (1, 0), (0, -3), (0, -1)],
    [(0, 1), (0, 3), (-2, 0), (2, 0)],
    [(0, 3), (0, 1), (2, 0), (-2, 0)],
]

# C(zeta_8) in the basis 1, z, z^2, z^3
_CZ8 = [
    [(-1, -2, 0, 2), (0, 0, 2, 0), (-1, 0, 1, -1), (0, 1, 0, 0)],
    [(0, 0, -2, 0), (-1, 2, 0, -2), (0, -1, 0, 0), (1, 0, -1, -1)],
    [(-1, 1, -1, 0), (0, 0, 0, 1), (0, 2, 0, -2), (0, 0, -2, 0)],
    [(0, 0, 0, -1), (1, 1, 1, 0), (0, 0, 2, 0), (0, -2, 0, 2)],
]

# the ten upper-triangle entries of C(x) mod x^8 - 1, as printed
CX_EXAMPLE_TEXT = {
    (0, 0): "1 + x^2 + 2 x^3 + 2 x^4 + 2 x^5 + x^6",
    (0, 1): "x + 2 x^2 + x^3 + x^5 + x^7",
    (0, 2): "x + x^2 + x^3 + x^4 + x^5 + 2 x^7",
    (0, 3): "1 + x + x^2 + 2 x^3 + x^4 + x^6 + 2 x^7",
    (1, 1): "1 + 2 x + x^2 + 2 x^4 + x^6 + 2 x^7",
    (1, 2): "1 + x^2 + 2 x^3 + x^4 + x^5 + x^6 + 2 x^7",
    (1, 3): "1 + x + x^3 + x^5 + x^6 + 2 x^7",
    (2, 2): "2 x + x^2 + x^6 + 2 x^7",
    (2, 3): "2 + x + x^3 + 2 x^4 + x^5 + 2 x^6 + x^7",
    (3, 3): "x^2 + 2 x^3 + 2 x^5 + x^6",
}


@cache
def example_chain() -> dict[int, CycMatrix]:
    """The published residue chain: levels 1, 2, 4, 8."""
    chain = {
        1: CycMatrix(1, C1_SECOND),
        2: CycMatrix(2, CM1_EXAMPLE),
        4: CycMatrix(4, np.array(_CI)),
        8: CycMatrix(8, np.array(_CZ8)),
    }
    for level, m in chain.items():
        _ensure(conj_transpose_check(m), f"chain level {level}")
    return chain


def parse_poly_text(text: str, modulus: int) -> PolyResidue:
    """Inverse of ``format_poly`` for non-negative coefficients."""
    terms: dict[int, int] = {}
    for term in text.split(" + "):
        parts = term.split(" ")
        coef, mono = (int(parts[0]), parts[1]) if len(parts) == 2 else (1, parts[0])
        if mono.isdigit():
            terms[0] = terms.get(0, 0) + int(mono)
            continue
        power = 1 if mono == "x" else int(mono.split("^")[1])
        terms[power] = terms.get(power, 0) + coef
    return PolyResidue.from_terms(modulus, terms)


@cache
def example_cx() -> PolyMatrix:
    """The printed C(x) mod x^8 - 1, completed by C_ji(x) = C_ij(x^7)."""
    entries = [[None] * 4 for _ in range(4)]
    for (i, j), text in CX_EXAMPLE_TEXT.items():
        f = parse_poly_text(text, 8)
        entries[i][j] = f
        entries[j][i] = f.substitute_power(7)
    return PolyMatrix.from_entries(entries)


@cache
def printed_e() -> np.ndarray:
    e = _data("e32.txt")
    _ensure(e.shape == (32, 32) and np.array_equal(e, e.T) and not np.diag(e).any(), "E")
    return e


@cache
def printed_adjacency() -> np.ndarray:
    a = _data("adjacency65.txt")
    _ensure(bool(check_srg(a, SrgParams(65, 32, 15, 16))), "adjacency65")
    return a
