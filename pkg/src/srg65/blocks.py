"""Matrices of circulant blocks and their compacted polynomial forms.

Integer matrices are plain ``numpy`` int64 arrays.  A block matrix with
l x l circulant blocks of order m compacts to a ``PolyMatrix`` of order l over
Z[x]/(x^m - 1); evaluating that at a root of unity gives a ``CycMatrix``.

Layout convention: block (I, J) occupies rows I*m .. I*m + m - 1, and row r of
a block is the coefficient vector rotated right by r, i.e.
``M[I*m + r, J*m + s] = coeff[(s - r) % m]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cyclotomic import CycElem, PolyResidue, phi
from .errors import ContractError

_INT_LIMIT = 2**62


def _guard(a: np.ndarray, b: np.ndarray, terms: int) -> None:
    bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * terms
    if bound >= _INT_LIMIT:
        raise OverflowError("matrix product may exceed int64 range")


def cyclic_convolve(a: np.ndarray, b: np.ndarray, sign: int = 1) -> np.ndarray:
    """Matrix product of (l, l, n) coefficient arrays with x^n = sign."""
    n = a.shape[2]
    _guard(a, b, a.shape[1] * n)
    out = np.zeros((a.shape[0], b.shape[1], n), dtype=np.int64)
    for shift in range(n):
        rolled = np.roll(b, shift, axis=2)
        if sign != 1:
            rolled[:, :, :shift] *= sign
        out += np.einsum("it,tjk->ijk", a[:, :, shift], rolled)
    return out


@dataclass(frozen=True, eq=False)
class PolyMatrix:
    """Square matrix over Z[x]/(x^m - 1); ``coeffs[i, j, k]`` is the x^k coefficient of entry (i, j)."""

    modulus: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.int64)
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[2] != self.modulus:
            raise ContractError(f"bad PolyMatrix shape {c.shape} for modulus {self.modulus}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[PolyResidue]]) -> PolyMatrix:
        m = entries[0][0].modulus
        if any(e.modulus != m for row in entries for e in row):
            raise ContractError("entries have mixed moduli")
        return cls(m, np.array([[e.coeffs for e in row] for row in entries]))

    @classmethod
    def identity(cls, order: int, modulus: int) -> PolyMatrix:
        c = np.zeros((order, order, modulus), dtype=np.int64)
        c[np.arange(order), np.arange(order), 0] = 1
        return cls(modulus, c)

    @classmethod
    def scalar(cls, order: int, modulus: int, value: int) -> PolyMatrix:
        return cls.identity(order, modulus) * value

    @classmethod
    def constant_entries(cls, matrix: np.ndarray, poly: PolyResidue) -> PolyMatrix:
        """The matrix whose (i, j) entry is matrix[i, j] * poly."""
        matrix = np.asarray(matrix, dtype=np.int64)
        return cls(poly.modulus, matrix[:, :, None] * np.array(poly.coeffs, dtype=np.int64))

    def entry(self, i: int, j: int) -> PolyResidue:
        return PolyResidue(self.modulus, tuple(self.coeffs[i, j]))

    def entries(self) -> list[list[PolyResidue]]:
        return [[self.entry(i, j) for j in range(self.order)] for i in range(self.order)]

    def _same(self, other: PolyMatrix) -> None:
        if not isinstance(other, PolyMatrix) or other.modulus != self.modulus or other.order != self.order:
            raise ContractError("PolyMatrix order or modulus mismatch")

    def __add__(self, other: PolyMatrix) -> PolyMatrix:
        self._same(other)
        return PolyMatrix(self.modulus, self.coeffs + other.coeffs)

    def __sub__(self, other: PolyMatrix) -> PolyMatrix:
        self._same(other)
        return PolyMatrix(self.modulus, self.coeffs - other.coeffs)

    def __mul__(self, k: int) -> PolyMatrix:
        return PolyMatrix(self.modulus, self.coeffs * int(k))

    __rmul__ = __mul__

    def __matmul__(self, other: PolyMatrix) -> PolyMatrix:
        self._same(other)
        return PolyMatrix(self.modulus, cyclic_convolve(self.coeffs, other.coeffs))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolyMatrix)
            and other.modulus == self.modulus
            and np.array_equal(other.coeffs, self.coeffs)
        )

    def __hash__(self):
        return hash((self.modulus, self.coeffs.tobytes()))

    def fold(self, modulus: int) -> PolyMatrix:
        """Reduce every entry modulo x^n - 1, n | m."""
        if self.modulus % modulus:
            raise ContractError(f"{modulus} does not divide {self.modulus}")
        c = self.coeffs.reshape(self.order, self.order, -1, modulus).sum(axis=2)
        return PolyMatrix(modulus, c)

    def evaluate(self, level: int) -> CycMatrix:
        """Entrywise image in Z[zeta_level]."""
        from .cyclotomic import reduce_residue

        return CycMatrix.from_entries(
            [[reduce_residue(e, level) for e in row] for row in self.entries()]
        )

    def transpose(self) -> PolyMatrix:
        return PolyMatrix(self.modulus, self.coeffs.transpose(1, 0, 2))


@dataclass(frozen=True, eq=False)
class CycMatrix:
    """Square matrix over Z[zeta_level]; ``coeffs[i, j]`` is the power-basis vector of entry (i, j)."""

    level: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.int64)
        if c.ndim == 2:
            c = c[:, :, None]
        if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[2] != phi(self.level):
            raise ContractError(f"bad CycMatrix shape {c.shape} for level {self.level}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[CycElem]]) -> CycMatrix:
        level = entries[0][0].level
        if any(e.level != level for row in entries for e in row):
            raise ContractError("entries have mixed levels")
        return cls(level, np.array([[e.coeffs for e in row] for row in entries]))

    @classmethod
    def identity(cls, order: int, level: int) -> CycMatrix:
        c = np.zeros((order, order, phi(level)), dtype=np.int64)
        c[np.arange(order), np.arange(order), 0] = 1
        return cls(level, c)

    def entry(self, i: int, j: int) -> CycElem:
        return CycElem(self.level, tuple(self.coeffs[i, j]))

    def entries(self) -> list[list[CycElem]]:
        return [[self.entry(i, j) for j in range(self.order)] for i in range(self.order)]

    def _same(self, other: CycMatrix) -> None:
        if not isinstance(other, CycMatrix) or other.level != self.level or other.order != self.order:
            raise ContractError("CycMatrix order or level mismatch")

    def __add__(self, other: CycMatrix) -> CycMatrix:
        self._same(other)
        return CycMatrix(self.level, self.coeffs + other.coeffs)

    def __sub__(self, other: CycMatrix) -> CycMatrix:
        self._same(other)
        return CycMatrix(self.level, self.coeffs - other.coeffs)

    def __mul__(self, k: int) -> CycMatrix:
        return CycMatrix(self.level, self.coeffs * int(k))

    __rmul__ = __mul__

    def __matmul__(self, other: CycMatrix) -> CycMatrix:
        self._same(other)
        sign = -1 if self.level > 2 else 1
        return CycMatrix(self.level, cyclic_convolve(self.coeffs, other.coeffs, sign=sign))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CycMatrix)
            and other.level == self.level
            and np.array_equal(other.coeffs, self.coeffs)
        )

    def __hash__(self):
        return hash((self.level, self.coeffs.tobytes()))

    def conj(self) -> CycMatrix:
        """Entrywise zeta -> zeta^-1."""
        c = self.coeffs
        if self.level <= 2:
            return self
        out = np.zeros_like(c)
        out[:, :, 0] = c[:, :, 0]
        out[:, :, 1:] = -c[:, :, :0:-1]
        return CycMatrix(self.level, out)

    def transpose(self) -> CycMatrix:
        return CycMatrix(self.level, self.coeffs.transpose(1, 0, 2))

    def permute(self, perm: Sequence[int]) -> CycMatrix:
        """Simultaneous row/column permutation: result[a, b] = self[perm[a], perm[b]]."""
        p = np.asarray(perm)
        return CycMatrix(self.level, self.coeffs[np.ix_(p, p)])

    def key(self) -> tuple[int, ...]:
        """Canonical sort key: entries row-major, coefficients ascending."""
        return tuple(int(v) for v in self.coeffs.ravel())

    def scalar_values(self) -> np.ndarray:
        """Levels 1 and 2 hold plain integers; return them as an l x l array."""
        if self.level > 2:
            raise ContractError("scalar view only exists at levels 1 and 2")
        return np.array(self.coeffs[:, :, 0])


def compact(matrix: np.ndarray, l: int, m: int) -> PolyMatrix:
    """Compact an lm x lm matrix of circulant m x m blocks to an l x l PolyMatrix."""
    matrix = np.asarray(matrix, dtype=np.int64)
    if matrix.shape != (l * m, l * m):
        raise ContractError(f"expected a {l * m} x {l * m} matrix, got {matrix.shape}")
    coeffs = np.zeros((l, l, m), dtype=np.int64)
    idx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
    for bi in range(l):
        for bj in range(l):
            block = matrix[bi * m:(bi + 1) * m, bj * m:(bj + 1) * m]
            row0 = block[0]
            if not np.array_equal(block, row0[idx]):
                raise ContractError(f"block ({bi}, {bj}) is not circulant")
            coeffs[bi, bj] = row0
    return PolyMatrix(m, coeffs)


def _expand_coeffs(coeffs: np.ndarray) -> np.ndarray:
    l, _, m = coeffs.shape[:3]
    idx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
    blocks = coeffs[:, :, idx]  # (l, l, m, m, ...)
    rest = coeffs.shape[3:]
    return blocks.transpose(0, 2, 1, 3, *range(4, 4 + len(rest))).reshape(l * m, l * m, *rest)


def expand(p: PolyMatrix) -> np.ndarray:
    """Expand a PolyMatrix to its lm x lm integer matrix of circulant blocks."""
    return _expand_coeffs(p.coeffs)


def expand_bivariate(coeffs) -> np.ndarray:
    """Expand a matrix over Z[x, y]/(x^mx - 1, y^my - 1) in two rounds, y first.

    ``coeffs[i][j][k]`` is the x-coefficient vector multiplying y^k in entry
    (i, j), so the array has shape (l, l, my, mx).
    """
    c = np.asarray(coeffs, dtype=np.int64)
    if c.ndim != 4:
        raise ContractError("bivariate coefficients must have shape (l, l, my, mx)")
    over_x = PolyMatrix(c.shape[3], _expand_coeffs(c))
    return expand(over_x)


def poly_symmetry_check(p: PolyMatrix) -> bool:
    """True iff P_ji(x) = P_ij(x^(m-1)) for all i, j, i.e. expand(p) is symmetric."""
    m = p.modulus
    reflected = p.coeffs[:, :, (-np.arange(m)) % m]
    return bool(np.array_equal(p.coeffs.transpose(1, 0, 2), reflected))


def format_matrix(matrix: np.ndarray) -> str:
    """0/1 matrices as digit rows, anything else as space-separated integers."""
    matrix = np.asarray(matrix)
    if np.isin(matrix, (0, 1)).all():
        return "\n".join("".join(str(int(v)) for v in row) for row in matrix) + "\n"
    return "\n".join(" ".join(str(int(v)) for v in row) for row in matrix) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if " " in line or line.startswith("-"):
            rows.append([int(t) for t in line.split()])
        else:
            rows.append([int(ch) for ch in line])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows are empty or ragged")
    return np.array(rows, dtype=np.int64)


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def write_matrix(path, matrix: np.ndarray) -> None:
    Path(path).write_text(format_matrix(matrix))
