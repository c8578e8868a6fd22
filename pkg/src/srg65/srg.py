"""Strongly regular graph identities, the bordered form, and conference matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InconsistentInputError


@dataclass(frozen=True)
class SrgParams:
    v: int
    k: int
    lam: int
    mu: int

    def __post_init__(self):
        if min(self.v, self.k, self.lam, self.mu) < 0:
            raise ContractError("SRG parameters must be non-negative")
        if self.k * (self.k - self.lam - 1) != (self.v - self.k - 1) * self.mu:
            raise ContractError(f"infeasible SRG parameters {self}")

    @classmethod
    def parse(cls, text: str) -> SrgParams:
        parts = [int(t) for t in text.replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError("expected v,k,lambda,mu")
        return cls(*parts)

    def __str__(self) -> str:
        return f"({self.v},{self.k},{self.lam},{self.mu})"


@dataclass(frozen=True)
class Violation:
    identity: str
    row: int  # 1-based
    col: int  # 1-based
    expected: int
    actual: int

    def __str__(self) -> str:
        return (
            f"{self.identity} fails at ({self.row}, {self.col}): "
            f"expected {self.expected}, got {self.actual}"
        )


@dataclass(frozen=True)
class Report:
    ok: bool
    first: Violation | None = None
    failures: int = 0
    notes: tuple[str, ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return f"{self.first} ({self.failures} failing entries in total)"


class _Collector:
    def __init__(self):
        self.first: Violation | None = None
        self.failures = 0

    def compare(self, name: str, actual: np.ndarray, expected: np.ndarray, offset=(1, 1)) -> None:
        actual = np.atleast_2d(actual)
        expected = np.broadcast_to(expected, actual.shape)
        bad = np.argwhere(actual != expected)
        if len(bad) == 0:
            return
        self.failures += len(bad)
        if self.first is None:
            i, j = bad[0]
            self.first = Violation(
                name, int(i) + offset[0], int(j) + offset[1], int(expected[i, j]), int(actual[i, j])
            )

    def report(self) -> Report:
        return Report(self.failures == 0, self.first, self.failures)


def check_srg(a: np.ndarray, p: SrgParams) -> Report:
    """Check that ``a`` is the adjacency matrix of an srg with parameters ``p``.

    Tests, in order: 0/1 entries, symmetry, zero diagonal,
    A J = k J, and A^2 + (mu - lambda) A = (k - mu) I + mu J.
    """
    a = np.asarray(a, dtype=np.int64)
    if a.shape != (p.v, p.v):
        raise ContractError(f"expected a {p.v} x {p.v} matrix, got {a.shape}")
    col = _Collector()
    col.compare("binary", np.isin(a, (0, 1)).astype(np.int64), np.ones_like(a))
    col.compare("symmetric", a, a.T)
    col.compare("zero-diagonal", np.diag(a)[None, :], np.zeros((1, p.v), dtype=np.int64))
    col.compare("regular", a.sum(axis=1)[:, None], np.full((p.v, 1), p.k))
    lhs = a @ a + (p.mu - p.lam) * a
    rhs = (p.k - p.mu) * np.eye(p.v, dtype=np.int64) + p.mu
    col.compare("srg-identity", lhs, rhs)
    return col.report()


def build_H(n: int, scale: int = 1) -> np.ndarray:
    """Block matrix [[15 J_n, 16 J_n], [16 J_n, 16 J_n]] of order 2n, times ``scale``."""
    if n < 1:
        raise ContractError("n must be positive")
    h = np.full((2 * n, 2 * n), 16, dtype=np.int64)
    h[:n, :n] = 15
    return h * scale


def canonical_border(n: int = 64) -> np.ndarray:
    b = np.zeros(n, dtype=np.int64)
    b[: n // 2] = 1
    return b


@dataclass(frozen=True, eq=False)
class BorderedForm:
    """Adjacency matrix split as [[0, border], [border^T, core]]."""

    border: np.ndarray
    core: np.ndarray

    def __post_init__(self):
        border = np.asarray(self.border, dtype=np.int64)
        core = np.asarray(self.core, dtype=np.int64)
        n = len(border)
        if n != 64 or core.shape != (n, n):
            raise ContractError("expected a length-64 border and a 64 x 64 core")
        if not np.array_equal(border, canonical_border(n)):
            raise ContractError("border must be 32 ones followed by 32 zeros")
        object.__setattr__(self, "border", border)
        object.__setattr__(self, "core", core)

    @classmethod
    def from_adjacency(cls, a: np.ndarray) -> BorderedForm:
        a = np.asarray(a, dtype=np.int64)
        return cls(a[0, 1:], a[1:, 1:])


def check_bordered(bf: BorderedForm) -> Report:
    """Check the block equalities of A^2 + A = 16 I + 16 J for a 64 + 1 bordered form.

    Row/column numbers in the report index the core (1-based).
    """
    b, c = bf.border, bf.core
    n = len(b)
    half = n // 2
    col = _Collector()
    col.compare("border-norm", np.array([[b @ b]]), np.array([[half]]))
    top = c[:half].sum(axis=0)
    # neighbours of vertex 1 see 15 common neighbours with it, the rest 16
    expected_top = np.where(np.arange(n) < half, 15, 16)
    col.compare("upper-column-sums", top[None, :], expected_top[None, :])
    col.compare("lower-column-sums", c[half:].sum(axis=0)[None, :], np.full((1, n), 16))
    h = build_H(half)
    col.compare("core-identity", c @ c + c, 16 * np.eye(n, dtype=np.int64) + h)
    return col.report()


def assemble_adjacency(bf: BorderedForm) -> np.ndarray:
    rep = check_bordered(bf)
    if not rep:
        raise InconsistentInputError(f"bordered form is invalid: {rep}")
    n = len(bf.border)
    a = np.zeros((n + 1, n + 1), dtype=np.int64)
    a[0, 1:] = bf.border
    a[1:, 0] = bf.border
    a[1:, 1:] = bf.core
    return a


def conference_matrix(a: np.ndarray) -> np.ndarray:
    """Symmetric conference matrix of order v + 1 from a conference-graph adjacency matrix."""
    a = np.asarray(a, dtype=np.int64)
    v = a.shape[0]
    s = np.zeros((v + 1, v + 1), dtype=np.int64)
    s[0, 1:] = 1
    s[1:, 0] = 1
    s[1:, 1:] = 1 - 2 * a
    s[np.arange(1, v + 1), np.arange(1, v + 1)] = 0
    return s


def check_conference(s: np.ndarray) -> Report:
    s = np.asarray(s, dtype=np.int64)
    n = s.shape[0]
    col = _Collector()
    off = ~np.eye(n, dtype=bool)
    col.compare("zero-diagonal", np.diag(s)[None, :], np.zeros((1, n), dtype=np.int64))
    col.compare("unit-off-diagonal", (np.abs(s) == 1).astype(np.int64) * off, off.astype(np.int64))
    col.compare("symmetric", s, s.T)
    col.compare("square", s @ s, (n - 1) * np.eye(n, dtype=np.int64))
    return col.report()
