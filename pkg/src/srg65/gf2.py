"""The order-32 instance: expand C(x) mod x^8 - 1 to D and linearise over GF(2).

Writing C~(x) = E + (D - E) x mod x^2 - 1, the integer condition on E is

    2 E^2 - E D - D E + E - D + H_32 = 0,

whose reduction mod 2, E D + D E + E + D + H_32 = 0, is linear in E.  Entry
constraints: E_ij = 0 where D_ij = 0, E_ij = 1 where D_ij = 2, E_ii = 0, and
E symmetric.  Unknowns are the upper-triangle entries with D_ij = 1.

Bit vectors are Python ints (bit k = variable k); XOR on them is word-wide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .blocks import PolyMatrix, expand
from .errors import ConstraintError, InconsistentInputError
from .srg import build_H

FORCED0, FORCED1, FREE = 0, 1, 2


def expand_to_D(cx: PolyMatrix) -> np.ndarray:
    """Expand C(x) mod x^8 - 1 to the symmetric 32 x 32 matrix D, checking D^2 + D = 16 I + 2 H_32."""
    if ((cx.coeffs < 0) | (cx.coeffs > 2)).any():
        raise InconsistentInputError("C(x) coefficients must lie in {0, 1, 2}")
    d = expand(cx)
    n = d.shape[0]
    if not np.array_equal(d, d.T):
        raise InconsistentInputError("D is not symmetric")
    if not np.array_equal(d @ d + d, 16 * np.eye(n, dtype=np.int64) + build_H(n // 2, 2)):
        raise InconsistentInputError("D fails D^2 + D = 16 I + 2 H")
    return d


def build_gauge(d: np.ndarray) -> list[tuple[int, int]]:
    """Pairs (i, g(i)) with g(i) = min{j : D_ij = 1} < i, 0-based.

    Multiplying row and column i of C~(x) by x flips row/column i of E on
    the D = 1 pattern, so E_{i, g(i)} may be taken to be 0.
    """
    pairs = []
    for i, row in enumerate(np.asarray(d)):
        ones = np.flatnonzero(row == 1)
        if len(ones) and ones[0] < i:
            pairs.append((i, int(ones[0])))
    return pairs


@dataclass(frozen=True, eq=False)
class EConstraintMap:
    """Per-entry state of E (FORCED0, FORCED1 or FREE), symmetric."""

    state: np.ndarray
    gauge: tuple[tuple[int, int], ...] = ()

    @property
    def order(self) -> int:
        return self.state.shape[0]

    def free_positions(self) -> list[tuple[int, int]]:
        n = self.order
        return [(i, j) for i in range(n) for j in range(i + 1, n) if self.state[i, j] == FREE]


def build_constraints(d: np.ndarray, gauge: Sequence[tuple[int, int]] = ()) -> EConstraintMap:
    d = np.asarray(d, dtype=np.int64)
    n = d.shape[0]
    if not np.array_equal(d, d.T) or not np.isin(d, (0, 1, 2)).all():
        raise ConstraintError("D must be symmetric with entries in {0, 1, 2}")
    diag2 = np.flatnonzero(np.diag(d) == 2)
    if len(diag2):
        i = int(diag2[0])
        raise ConstraintError(f"D[{i}, {i}] = 2 forces E[{i}, {i}] = 1 against the zero diagonal")
    state = np.full((n, n), FREE, dtype=np.int8)
    state[d == 0] = FORCED0
    state[d == 2] = FORCED1
    state[np.arange(n), np.arange(n)] = FORCED0
    for i, j in gauge:
        if state[i, j] == FORCED1:
            raise ConstraintError(f"gauge pins E[{i}, {j}] = 0 but D forces it to 1")
        state[i, j] = state[j, i] = FORCED0
    state.setflags(write=False)
    return EConstraintMap(state, tuple((int(i), int(j)) for i, j in gauge))


@dataclass(frozen=True)
class AffineSpaceGF2:
    """particular + span(basis) over GF(2), in the coordinates ``var_index``."""

    order: int
    var_index: tuple[tuple[int, int], ...]
    forced_one: tuple[tuple[int, int], ...]
    particular: int
    basis: tuple[int, ...]
    feasible: bool = True

    @property
    def num_free_vars(self) -> int:
        return len(self.var_index)

    @property
    def dimension(self) -> int:
        return len(self.basis) if self.feasible else -1

    def point(self, coords: int) -> int:
        """Variable bits of the point with basis coordinates ``coords``."""
        v = self.particular
        k = 0
        while coords:
            if coords & 1:
                v ^= self.basis[k]
            coords >>= 1
            k += 1
        return v

    def decode(self, bits: int) -> np.ndarray:
        """The 0/1 matrix E for a variable assignment."""
        e = np.zeros((self.order, self.order), dtype=np.int64)
        for i, j in self.forced_one:
            e[i, j] = e[j, i] = 1
        for k, (i, j) in enumerate(self.var_index):
            if bits >> k & 1:
                e[i, j] = e[j, i] = 1
        return e

    def encode(self, e: np.ndarray) -> int:
        return sum(1 << k for k, (i, j) in enumerate(self.var_index) if e[i, j])

    def coordinates(self, e: np.ndarray) -> int | None:
        """Basis coordinates of E, or None when E is not in the space."""
        target = self.encode(e) ^ self.particular
        pivots = _pivot_bits(self.basis)
        coords = 0
        for k, p in enumerate(pivots):
            if target >> p & 1:
                target ^= self.basis[k]
                coords |= 1 << k
        return coords if target == 0 else None

    def points(self) -> Iterator[int]:
        if not self.feasible:
            return
        for c in range(1 << self.dimension):
            yield self.point(c)

    # text format ----------------------------------------------------------

    def dumps(self) -> str:
        width = max(1, (self.num_free_vars + 3) // 4)
        lines = [
            "# srg65 affine space over GF(2)",
            f"order {self.order}",
            f"num_free_vars {self.num_free_vars}",
            f"dimension {self.dimension}",
            f"feasible {int(self.feasible)}",
            "var_index " + " ".join(f"{i},{j}" for i, j in self.var_index),
            "forced_one " + " ".join(f"{i},{j}" for i, j in self.forced_one),
            f"particular {self.particular:0{width}x}",
        ]
        lines += [f"basis {b:0{width}x}" for b in self.basis]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> AffineSpaceGF2:
        fields: dict[str, list[str]] = {}
        basis = []
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            key, _, rest = line.partition(" ")
            if key == "basis":
                basis.append(int(rest, 16))
            else:
                fields[key] = rest.split()
        pairs = lambda key: tuple(tuple(int(t) for t in p.split(",")) for p in fields.get(key, []))
        space = cls(
            order=int(fields["order"][0]),
            var_index=pairs("var_index"),
            forced_one=pairs("forced_one"),
            particular=int(fields["particular"][0], 16),
            basis=tuple(basis),
            feasible=bool(int(fields["feasible"][0])),
        )
        if space.num_free_vars != int(fields["num_free_vars"][0]) or (
            space.feasible and space.dimension != int(fields["dimension"][0])
        ):
            raise ValueError("affine space header does not match its body")
        return space

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> AffineSpaceGF2:
        return cls.loads(Path(path).read_text())


def _pivot_bits(basis: Sequence[int]) -> list[int]:
    # each basis vector owns exactly one free variable: its lowest bit not shared by others
    pivots = []
    for k, b in enumerate(basis):
        others = 0
        for m, c in enumerate(basis):
            if m != k:
                others |= c
        own = b & ~others
        pivots.append((own & -own).bit_length() - 1)
    return pivots


@dataclass
class LinearSystem:
    """Rows of (variable mask, constant) meaning mask . x = constant."""

    num_vars: int
    rows: list[tuple[int, int]] = field(default_factory=list)


def mod2_system(d: np.ndarray, constraints: EConstraintMap, h: np.ndarray | None = None) -> tuple[LinearSystem, list, list]:
    """Equations (E D + D E + E + D + H)_ij = 0 mod 2 for i <= j."""
    d = np.asarray(d, dtype=np.int64)
    n = d.shape[0]
    h = build_H(n // 2) if h is None else np.asarray(h, dtype=np.int64)
    var_index = constraints.free_positions()
    var_of = {}
    for k, (i, j) in enumerate(var_index):
        var_of[(i, j)] = var_of[(j, i)] = k
    forced_one = [(i, j) for i in range(n) for j in range(i + 1, n) if constraints.state[i, j] == FORCED1]
    st = constraints.state

    def entry(i: int, j: int) -> tuple[int, int]:
        s = st[i, j]
        if s == FREE:
            return 1 << var_of[(i, j)], 0
        return 0, int(s == FORCED1)

    odd = (d % 2).astype(bool)
    system = LinearSystem(len(var_index))
    for i in range(n):
        for j in range(i, n):
            mask, const = 0, int(d[i, j] + h[i, j]) & 1
            for k in np.flatnonzero(odd[:, j]):
                m, c = entry(i, int(k))
                mask ^= m
                const ^= c
            for k in np.flatnonzero(odd[i, :]):
                m, c = entry(int(k), j)
                mask ^= m
                const ^= c
            m, c = entry(i, j)
            mask ^= m
            const ^= c
            system.rows.append((mask, const))
    return system, var_index, forced_one


def solve_affine(d: np.ndarray, constraints: EConstraintMap, h: np.ndarray | None = None) -> AffineSpaceGF2:
    """Solve the mod-2 system; returns an infeasible space (``feasible=False``) when inconsistent."""
    system, var_index, forced_one = mod2_system(d, constraints, h)
    n = np.asarray(d).shape[0]
    nv = system.num_vars
    rows = [list(r) for r in system.rows]
    r0 = 0
    for col in range(nv):
        bit = 1 << col
        hit = next((r for r in range(r0, len(rows)) if rows[r][0] & bit), None)
        if hit is None:
            continue
        rows[r0], rows[hit] = rows[hit], rows[r0]
        pm, pc = rows[r0]
        for r in range(len(rows)):
            if r != r0 and rows[r][0] & bit:
                rows[r][0] ^= pm
                rows[r][1] ^= pc
        r0 += 1
    feasible = all(not (m == 0 and c) for m, c in rows)
    if not feasible:
        return AffineSpaceGF2(n, tuple(var_index), tuple(forced_one), 0, (), feasible=False)
    pivots = {}
    for m, c in rows[:r0]:
        p = (m & -m).bit_length() - 1
        pivots[p] = (m, c)
    free_vars = [v for v in range(nv) if v not in pivots]
    particular = 0
    for p, (_, c) in pivots.items():
        if c:
            particular |= 1 << p
    basis = []
    for f in free_vars:
        vec = 1 << f
        for p, (m, _) in pivots.items():
            if m >> f & 1:
                vec |= 1 << p
        basis.append(vec)
    return AffineSpaceGF2(n, tuple(var_index), tuple(forced_one), particular, tuple(basis))


def mod2_residual(e: np.ndarray, d: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """(E D + D E + E + D + H) mod 2."""
    e, d = np.asarray(e, dtype=np.int64), np.asarray(d, dtype=np.int64)
    h = build_H(d.shape[0] // 2) if h is None else h
    return (e @ d + d @ e + e + d + h) % 2


def gauge_rank(d: np.ndarray) -> int:
    """Number of independent constraints the gauge adds (ungauged minus gauged dimension)."""
    free = solve_affine(d, build_constraints(d))
    gauged = solve_affine(d, build_constraints(d, build_gauge(d)))
    return free.dimension - gauged.dimension
