"""Exact arithmetic in Z[x]/(x^m - 1) and in the cyclotomic quotients Z[x]/Phi_d.

Only levels d dividing 16 are supported.  For d >= 2 a power of two,
Phi_d(x) = x^(d/2) + 1, so elements of Z[zeta_d] are stored in the power basis
{1, zeta, ..., zeta^(d/2 - 1)} and multiply by negacyclic convolution.  Level 1
is evaluation at x = 1 and level 2 evaluation at x = -1.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ContractError, InconsistentInputError

LEVELS = (1, 2, 4, 8, 16)


def phi(level: int) -> int:
    """Euler phi of a level, i.e. the basis length of Z[zeta_level]."""
    _check_level(level)
    return 1 if level == 1 else level // 2


def _check_level(level: int) -> None:
    if level not in LEVELS:
        raise ContractError(f"unsupported cyclotomic level {level}; expected one of {LEVELS}")


@dataclass(frozen=True)
class PolyResidue:
    """A polynomial modulo x^m - 1; ``coeffs[j]`` is the coefficient of x^j."""

    modulus: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.modulus < 1:
            raise ContractError("modulus must be positive")
        coeffs = tuple(int(c) for c in self.coeffs)
        if len(coeffs) != self.modulus:
            raise ContractError(
                f"expected {self.modulus} coefficients, got {len(coeffs)}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_terms(cls, modulus: int, terms: dict[int, int]) -> PolyResidue:
        coeffs = [0] * modulus
        for power, c in terms.items():
            coeffs[power % modulus] += c
        return cls(modulus, tuple(coeffs))

    @classmethod
    def constant(cls, modulus: int, value: int) -> PolyResidue:
        return cls.from_terms(modulus, {0: value})

    @classmethod
    def all_ones(cls, modulus: int) -> PolyResidue:
        """The polynomial c_m(x) = 1 + x + ... + x^(m-1)."""
        return cls(modulus, (1,) * modulus)

    def _same(self, other: PolyResidue) -> None:
        if not isinstance(other, PolyResidue) or other.modulus != self.modulus:
            raise ContractError("polynomial residues have different moduli")

    def __add__(self, other: PolyResidue) -> PolyResidue:
        self._same(other)
        return PolyResidue(self.modulus, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: PolyResidue) -> PolyResidue:
        self._same(other)
        return PolyResidue(self.modulus, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> PolyResidue:
        return PolyResidue(self.modulus, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return PolyResidue(self.modulus, tuple(other * a for a in self.coeffs))
        return poly_mul(self, other)

    __rmul__ = __mul__

    def substitute_power(self, k: int) -> PolyResidue:
        """Return f(x^k) mod x^m - 1."""
        m = self.modulus
        out = [0] * m
        for j, c in enumerate(self.coeffs):
            out[(j * k) % m] += c
        return PolyResidue(m, tuple(out))

    def fold(self, modulus: int) -> PolyResidue:
        """Reduce modulo x^n - 1 for a divisor n of the current modulus."""
        if self.modulus % modulus:
            raise ContractError(f"{modulus} does not divide {self.modulus}")
        out = [0] * modulus
        for j, c in enumerate(self.coeffs):
            out[j % modulus] += c
        return PolyResidue(modulus, tuple(out))

    def reduce(self, level: int) -> CycElem:
        return reduce_residue(self, level)

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.coeffs)

    @classmethod
    def parse(cls, text: str) -> PolyResidue:
        coeffs = tuple(int(t) for t in text.split(","))
        return cls(len(coeffs), coeffs)


@dataclass(frozen=True)
class CycElem:
    """An element of Z[zeta_level] in the power basis, ascending powers."""

    level: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        n = phi(self.level)
        coeffs = tuple(int(c) for c in self.coeffs)
        if len(coeffs) != n:
            raise ContractError(f"level {self.level} needs {n} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, level: int, value: int) -> CycElem:
        return cls(level, (value,) + (0,) * (phi(level) - 1))

    @classmethod
    def zeta_power(cls, level: int, k: int) -> CycElem:
        """zeta_level^k, reduced into the power basis."""
        if level == 1:
            return cls(1, (1,))
        if level == 2:
            return cls(2, ((-1) ** (k % 2),))
        n = phi(level)
        k %= level
        coeffs = [0] * n
        coeffs[k % n] = -1 if k >= n else 1
        return cls(level, tuple(coeffs))

    def _same(self, other: CycElem) -> None:
        if not isinstance(other, CycElem) or other.level != self.level:
            raise ContractError("cyclotomic elements live at different levels")

    def __add__(self, other: CycElem) -> CycElem:
        self._same(other)
        return CycElem(self.level, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: CycElem) -> CycElem:
        self._same(other)
        return CycElem(self.level, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> CycElem:
        return CycElem(self.level, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, int):
            return CycElem(self.level, tuple(other * a for a in self.coeffs))
        return cyc_mul(self, other)

    __rmul__ = __mul__

    def conj(self) -> CycElem:
        return conj(self)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def embed(self, k: int = 1) -> complex:
        """Image under zeta -> exp(2 pi i k / level)."""
        z = cmath.exp(2j * cmath.pi * k / self.level)
        return sum(c * z**j for j, c in enumerate(self.coeffs))

    def __str__(self) -> str:
        return f"{self.level}:" + ",".join(str(c) for c in self.coeffs)

    @classmethod
    def parse(cls, text: str) -> CycElem:
        level, _, body = text.partition(":")
        return cls(int(level), tuple(int(t) for t in body.split(",")))


def poly_mul(a: PolyResidue, b: PolyResidue) -> PolyResidue:
    """Cyclic convolution: a * b mod x^m - 1."""
    a._same(b)
    m = a.modulus
    out = [0] * m
    for i, ai in enumerate(a.coeffs):
        if ai:
            for j, bj in enumerate(b.coeffs):
                out[(i + j) % m] += ai * bj
    return PolyResidue(m, tuple(out))


def cyc_mul(a: CycElem, b: CycElem) -> CycElem:
    """Product in Z[zeta_d]; negacyclic for d >= 4 since zeta^(d/2) = -1."""
    a._same(b)
    n = len(a.coeffs)
    out = [0] * n
    for i, ai in enumerate(a.coeffs):
        if ai:
            for j, bj in enumerate(b.coeffs):
                k = i + j
                if k >= n:
                    out[k - n] -= ai * bj
                else:
                    out[k] += ai * bj
    return CycElem(a.level, tuple(out))


def conj(a: CycElem) -> CycElem:
    """Galois conjugation zeta -> zeta^-1."""
    if a.level <= 2:
        return a
    n = len(a.coeffs)
    out = [0] * n
    out[0] = a.coeffs[0]
    # zeta^-j = -zeta^(n-j) for 0 < j < n
    for j in range(1, n):
        out[n - j] = -a.coeffs[j]
    return CycElem(a.level, tuple(out))


def reduce_residue(f: PolyResidue, level: int) -> CycElem:
    """Image of f in Z[x]/Phi_level; needs level | modulus."""
    _check_level(level)
    if f.modulus % level:
        raise ContractError(f"Phi_{level} does not divide x^{f.modulus} - 1")
    if level == 1:
        return CycElem(1, (sum(f.coeffs),))
    if level == 2:
        return CycElem(2, (sum(c if j % 2 == 0 else -c for j, c in enumerate(f.coeffs)),))
    n = level // 2
    out = [0] * n
    for j, c in enumerate(f.coeffs):
        if (j // n) % 2:
            out[j % n] -= c
        else:
            out[j % n] += c
    return CycElem(level, tuple(out))


def _mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def _ramanujan_sum(d: int, j: int) -> int:
    """Sum of zeta^j over primitive d-th roots of unity."""
    g = _gcd(d, j)
    return sum(_mobius(d // e) * e for e in range(1, g + 1) if g % e == 0)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _idempotent_numerators(m: int) -> dict[int, tuple[int, ...]]:
    # m * e_d has coefficient sum over primitive d-th roots zeta of zeta^-j at x^j
    return {
        d: tuple(_ramanujan_sum(d, j) for j in range(m))
        for d in range(1, m + 1)
        if m % d == 0
    }


_IDEMPOTENTS = {m: _idempotent_numerators(m) for m in (1, 2, 4, 8, 16)}


def crt_reconstruct(*residues: CycElem) -> PolyResidue:
    """Recover f mod x^m - 1 from its images at every level d | m, m = the top level.

    Residues must be given in ascending level order 1, 2, 4, ..., m.  A
    non-integral lift means the residues cannot come from an integer
    polynomial and raises InconsistentInputError.
    """
    levels = tuple(r.level for r in residues)
    m = levels[-1] if levels else 0
    expected = tuple(d for d in LEVELS if d <= m)
    if levels != expected:
        raise ContractError(f"need residues at levels {expected}, got {levels}")
    numer = [0] * m
    for r in residues:
        idem = _IDEMPOTENTS[m][r.level]
        for i, c in enumerate(r.coeffs):
            if c:
                for j, e in enumerate(idem):
                    numer[(i + j) % m] += c * e
    coeffs = []
    for v in numer:
        q = Fraction(v, m)
        if q.denominator != 1:
            raise InconsistentInputError(
                f"residues {[str(r) for r in residues]} do not lift to an integer polynomial"
            )
        coeffs.append(int(q))
    return PolyResidue(m, tuple(coeffs))


def format_poly(f: PolyResidue, var: str = "x") -> str:
    """Human form such as ``1 + x^2 + 2 x^3``."""
    return _format_terms(f.coeffs, var)


def format_cyc(a: CycElem) -> str:
    """Human form such as ``-1 - 2 z8 + 2 z8^3``."""
    if a.level <= 2:
        return str(a.coeffs[0])
    return _format_terms(a.coeffs, f"z{a.level}")


def _format_terms(coeffs: Sequence[int], var: str) -> str:
    parts: list[str] = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        mono = "" if j == 0 else (var if j == 1 else f"{var}^{j}")
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag} {mono}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts) if parts else "0"


def conj_transpose_check(matrix) -> bool:
    """True iff the transpose of ``matrix`` equals its entrywise conjugate.

    Accepts a CycMatrix or any square nested sequence of CycElem.
    """
    rows = matrix.entries() if hasattr(matrix, "entries") else matrix
    n = len(rows)
    return all(
        rows[j][i] == conj(rows[i][j]) for i in range(n) for j in range(n)
    )
