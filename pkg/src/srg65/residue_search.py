"""Staged search for the images of C(x) at 1, -1, i, zeta_8 (and zeta_16).

C(x) is a 4 x 4 matrix over Z[x]/(x^16 - 1) with 0/1 coefficients and

    C(x)^2 + C(x) = 16 I + c_16(x) H_4.

At level d the image X = C(zeta_d) satisfies X^2 + X = 16 I + c_16(zeta_d) H_4
and X^T = conj(X).  Every stage is the same problem: find all "Hermitian"
4 x 4 matrices over Z[zeta_d] solving that equation, where each entry ranges
over a finite envelope derived from the lower levels.  The solver fills one
row at a time; within a row it expands entry by entry and prunes with the
diagonal norm identity and the off-diagonal identities against earlier rows,
evaluated in every complex embedding.  Survivors are then checked exactly.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .blocks import CycMatrix, PolyMatrix
from .cyclotomic import PolyResidue, conj_transpose_check, crt_reconstruct, phi, reduce_residue
from .errors import InconsistentInputError
from .srg import build_H

log = logging.getLogger(__name__)

H4 = build_H(2)
ORDER = 4
_EPS = 1e-6
_CHUNK = 1 << 21


def stage_rhs(level: int) -> CycMatrix:
    """16 I_4 + c_16(zeta_level) H_4."""
    c16 = reduce_residue(PolyResidue.all_ones(16), level)
    rhs = np.zeros((ORDER, ORDER, phi(level)), dtype=np.int64)
    rhs[:, :, :] = H4[:, :, None] * np.array(c16.coeffs)
    rhs[np.arange(ORDER), np.arange(ORDER), 0] += 16
    return CycMatrix(level, rhs)


class _Ring:
    """Batched arithmetic on (N, n) coefficient arrays at one level."""

    def __init__(self, level: int):
        self.level = level
        n = self.n = phi(level)
        t = np.zeros((n, n, n), dtype=np.int64)
        for i in range(n):
            for j in range(n):
                k = i + j
                if k < n:
                    t[i, j, k] = 1
                else:
                    t[i, j, k - n] = -1 if level > 2 else 1
        self.table = t
        if level <= 2:
            self.emb = np.ones((1, 1), dtype=complex)
        else:
            # one embedding per complex-conjugate pair
            ks = [k for k in range(1, level // 2, 2)]
            w = np.exp(2j * np.pi / level)
            self.emb = np.array([[w ** (k * j) for k in ks] for j in range(n)])

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(np.atleast_2d(a), np.atleast_2d(b))
        return np.einsum("ni,nj,ijk->nk", a, b, self.table)

    def conj(self, a: np.ndarray) -> np.ndarray:
        if self.level <= 2:
            return a
        out = np.empty_like(a)
        out[..., 0] = a[..., 0]
        out[..., 1:] = -a[..., :0:-1]
        return out

    def embed(self, a: np.ndarray) -> np.ndarray:
        return a @ self.emb

    def self_conjugate(self, a: np.ndarray) -> np.ndarray:
        """Mask of rows fixed by conjugation."""
        return (self.conj(a) == a).all(axis=-1)


@dataclass
class Envelope:
    """Admissible values for the upper-triangle entries of a stage matrix."""

    level: int
    candidates: dict[tuple[int, int], np.ndarray]
    reason: str | None = None

    @property
    def degenerate(self) -> bool:
        return self.reason is not None or any(len(c) == 0 for c in self.candidates.values())

    def size(self) -> int:
        return int(np.prod([len(c) for c in self.candidates.values()], dtype=object))


def _span(half: int) -> range:
    return range(-half, half + 1, 2)


def zeta8_coordinates(s: int) -> range:
    """Values of d_j - d_{j+4} given d_j + d_{j+4} = s with both in {0, 1, 2}."""
    return _span(min(s, 4 - s))


def zeta16_coordinates(d: int) -> tuple[int, ...]:
    """Values of f_j - f_{j+8} given f_j + f_{j+8} = d with both in {0, 1}."""
    return (-1, 1) if d == 1 else (0,)


def envelope_c1() -> Envelope:
    """Non-negative entries of C(1): at most 16 coefficients, 15 on the diagonal."""
    cands = {}
    for i in range(ORDER):
        for j in range(i, ORDER):
            top = 15 if i == j else 16
            cands[(i, j)] = np.arange(top + 1, dtype=np.int64)[:, None]
    return Envelope(1, cands)


def envelope_cm1(c1: CycMatrix) -> Envelope:
    """f(-1) runs from -f(1) to f(1) in steps of 2."""
    a = c1.scalar_values()
    cands = {
        (i, j): np.array(list(_span(int(a[i, j]))), dtype=np.int64)[:, None]
        for i in range(ORDER)
        for j in range(i, ORDER)
    }
    return Envelope(2, cands)


def envelope_ci(c1: CycMatrix, cm1: CycMatrix) -> Envelope:
    """f(i) = u + v i with u in span((a+b)/2) and v in span((a-b)/2)."""
    a, b = c1.scalar_values(), cm1.scalar_values()
    cands = {}
    for i in range(ORDER):
        for j in range(i, ORDER):
            s, t = int(a[i, j]), int(b[i, j])
            if (s + t) % 2 or abs(t) > s:
                return Envelope(4, {}, f"entry ({i}, {j}): f(1)={s}, f(-1)={t} incompatible")
            vals = [(u, v) for u in _span((s + t) // 2) for v in _span((s - t) // 2)]
            if i == j:
                vals = [(u, v) for u, v in vals if v == 0]
            cands[(i, j)] = np.array(vals, dtype=np.int64).reshape(-1, 2)
    return Envelope(4, cands)


def envelope_cz8(c1: CycMatrix, cm1: CycMatrix, ci: CycMatrix) -> Envelope:
    """Coefficient envelope at zeta_8 from the known image mod x^4 - 1.

    With f mod x^8 - 1 = sum d_j x^j, d_j in {0, 1, 2}, the lower levels fix
    s_j = d_j + d_{j+4}; the zeta_8 coordinate e_j = d_j - d_{j+4} satisfies
    |e_j| <= min(s_j, 4 - s_j) with e_j = s_j mod 2.
    """
    ring = _Ring(8)
    cands = {}
    for i in range(ORDER):
        for j in range(i, ORDER):
            try:
                s = crt_reconstruct(c1.entry(i, j), cm1.entry(i, j), ci.entry(i, j)).coeffs
            except InconsistentInputError as exc:
                return Envelope(8, {}, f"entry ({i}, {j}): {exc}")
            if any(v < 0 or v > 4 for v in s):
                return Envelope(8, {}, f"entry ({i}, {j}): coefficient sums {s} outside [0, 4]")
            vals = np.array(
                list(itertools.product(*[zeta8_coordinates(v) for v in s])), dtype=np.int64
            ).reshape(-1, 4)
            if i == j:
                vals = vals[ring.self_conjugate(vals)]
            cands[(i, j)] = vals
    return Envelope(8, cands)


def envelope_z16(cx: PolyMatrix) -> Envelope:
    """Coefficient envelope at zeta_16 from C(x) mod x^8 - 1.

    Coordinate j is f_j - f_{j+8}: forced to 0 when d_j is 0 or 2, +-1 when d_j is 1.
    """
    ring = _Ring(16)
    cands = {}
    for i in range(ORDER):
        for j in range(i, ORDER):
            d = cx.coeffs[i, j]
            if ((d < 0) | (d > 2)).any():
                return Envelope(16, {}, f"entry ({i}, {j}): coefficients {d.tolist()} outside [0, 2]")
            vals = np.array(list(itertools.product(*[zeta16_coordinates(v) for v in d])), dtype=np.int64).reshape(-1, 8)
            if i == j:
                vals = vals[ring.self_conjugate(vals)]
            cands[(i, j)] = vals
    return Envelope(16, cands)


def _search_row(x: np.ndarray, r: int, rhs: np.ndarray, env: Envelope, ring: _Ring) -> np.ndarray:
    """All completions of row r (entries r..L-1) consistent with rows 0..r-1."""
    L, n = x.shape[0], ring.n
    js = list(range(r, L))
    cands = [env.candidates[(r, j)] for j in js]
    known = list(range(r))

    target = rhs[r, r].copy()
    for j in known:
        target -= ring.mul(x[r, j], ring.conj(x[r, j]))[0]
    goals = []
    for k in known:
        g = rhs[k, r] - x[k, r]
        for j in known:
            g = g - ring.mul(x[k, j], x[j, r])[0]
        goals.append(g)
    goals = np.array(goals, dtype=np.int64).reshape(len(known), n)

    emb_target = ring.embed(target).real
    emb_goals = ring.embed(goals) if known else np.zeros((0, ring.emb.shape[1]))

    # per-candidate contributions
    norms = [cands[0] + ring.mul(cands[0], cands[0])]
    norms += [ring.mul(c, ring.conj(c)) for c in cands[1:]]
    emb_norms = [ring.embed(v).real for v in norms]
    emb_abs = [np.abs(ring.embed(c)) for c in cands]
    offs = []  # offs[t][k]: contribution of candidate to off-diagonal equation k
    for t, c in enumerate(cands):
        if t == 0:
            offs.append([ring.mul(x[k, r], c) for k in known])
        else:
            offs.append([ring.mul(x[k, js[t]], ring.conj(c)) for k in known])

    # remaining-capacity bounds after the first t entries are placed
    steps = len(js)
    norm_cap = np.zeros((steps + 1, emb_target.shape[0]))
    for t in range(steps - 1, 0, -1):
        norm_cap[t] = norm_cap[t + 1] + emb_norms[t].max(axis=0)
    off_cap = np.zeros((steps + 1, len(known), emb_target.shape[0]))
    for t in range(steps - 1, 0, -1):
        for ki, k in enumerate(known):
            off_cap[t, ki] = off_cap[t + 1, ki] + np.abs(ring.embed(x[k, js[t]])) * emb_abs[t].max(axis=0)

    sel = np.arange(len(cands[0]))[:, None]
    acc_norm = norms[0]
    acc_off = np.stack(offs[0], axis=1) if known else np.zeros((len(sel), 0, n), dtype=np.int64)

    for t in range(steps):
        if t > 0:
            c = len(cands[t])
            pieces = []
            for start in range(0, len(sel), max(1, _CHUNK // max(c, 1))):
                stop = start + max(1, _CHUNK // max(c, 1))
                s_sel = sel[start:stop]
                m = len(s_sel)
                new_sel = np.concatenate(
                    [np.repeat(s_sel, c, axis=0), np.tile(np.arange(c), m)[:, None]], axis=1
                )
                new_norm = (acc_norm[start:stop, None, :] + norms[t][None, :, :]).reshape(-1, n)
                if known:
                    add = np.stack(offs[t], axis=1)  # (c, k, n)
                    new_off = (acc_off[start:stop, None] + add[None]).reshape(-1, len(known), n)
                else:
                    new_off = np.zeros((m * c, 0, n), dtype=np.int64)
                keep = _prune(new_norm, new_off, t + 1, emb_target, emb_goals, norm_cap, off_cap, ring)
                pieces.append((new_sel[keep], new_norm[keep], new_off[keep]))
            sel = np.concatenate([p[0] for p in pieces]) if pieces else sel[:0]
            acc_norm = np.concatenate([p[1] for p in pieces]) if pieces else acc_norm[:0]
            acc_off = np.concatenate([p[2] for p in pieces]) if pieces else acc_off[:0]
        else:
            keep = _prune(acc_norm, acc_off, 1, emb_target, emb_goals, norm_cap, off_cap, ring)
            sel, acc_norm, acc_off = sel[keep], acc_norm[keep], acc_off[keep]
        if len(sel) == 0:
            return np.zeros((0, steps, n), dtype=np.int64)

    exact = (acc_norm == target).all(axis=1)
    if known:
        exact &= (acc_off == goals[None]).all(axis=(1, 2))
    sel = sel[exact]
    return np.stack([cands[t][sel[:, t]] for t in range(steps)], axis=1)


def _prune(acc_norm, acc_off, placed, emb_target, emb_goals, norm_cap, off_cap, ring) -> np.ndarray:
    rest = emb_target[None, :] - ring.embed(acc_norm).real
    keep = (rest >= -_EPS).all(axis=1) & (rest <= norm_cap[placed][None, :] + _EPS).all(axis=1)
    if acc_off.shape[1]:
        gap = np.abs(emb_goals[None] - ring.embed(acc_off))
        keep &= (gap <= off_cap[placed][None] + _EPS).all(axis=(1, 2))
    return keep


def solve_hermitian(env: Envelope, rhs: CycMatrix | None = None) -> list[CycMatrix]:
    """All X with X^2 + X = rhs, X^T = conj(X), upper entries drawn from ``env``.

    Results are re-verified with ``CycMatrix`` arithmetic and returned in
    canonical (row-major coefficient) order.
    """
    level = env.level
    if env.degenerate:
        return []
    rhs = rhs if rhs is not None else stage_rhs(level)
    ring = _Ring(level)
    rhs_c = np.asarray(rhs.coeffs)
    found: list[np.ndarray] = []

    def rec(x: np.ndarray, r: int) -> None:
        if r == ORDER:
            found.append(x.copy())
            return
        rows = _search_row(x, r, rhs_c, env, ring)
        for row in rows:
            x[r, r:] = row
            x[r + 1:, r] = ring.conj(row[1:])
            rec(x, r + 1)
        x[r, r:] = 0
        x[r + 1:, r] = 0

    rec(np.zeros((ORDER, ORDER, ring.n), dtype=np.int64), 0)
    out = []
    for coeffs in found:
        m = CycMatrix(level, coeffs)
        if not (m @ m + m == rhs and conj_transpose_check(m)):
            raise AssertionError("search emitted a matrix failing its stage equation")
        out.append(m)
    out.sort(key=CycMatrix.key)
    return out


# ---------------------------------------------------------------------------
# stages


def search_c1() -> list[CycMatrix]:
    """All admissible C(1): symmetric, non-negative, C^2 + C = 16 I + 16 H_4."""
    return solve_hermitian(envelope_c1())


def h4_stabilizer() -> list[tuple[int, ...]]:
    return [
        p for p in itertools.permutations(range(ORDER))
        if np.array_equal(H4[np.ix_(p, p)], H4)
    ]


@dataclass(frozen=True)
class OrbitReduction:
    raw: tuple[CycMatrix, ...]
    reduced: tuple[CycMatrix, ...]
    group: tuple[tuple[int, ...], ...]

    def orbit(self, m: CycMatrix) -> set[CycMatrix]:
        return {m.permute(p) for p in self.group}


def orbit_reduce(raw: Sequence[CycMatrix], candidates_group: Iterable[tuple[int, ...]]) -> OrbitReduction:
    """Keep the smallest member of each orbit under the permutations preserving ``raw`` as a set."""
    raw_set = set(raw)
    group = tuple(p for p in candidates_group if all(m.permute(p) in raw_set for m in raw))
    reduced = [m for m in raw if m.key() == min(m.permute(p).key() for p in group)]
    return OrbitReduction(tuple(raw), tuple(sorted(reduced, key=CycMatrix.key)), group)


def search_cm1(c1: CycMatrix) -> OrbitReduction:
    """All admissible C(-1) below ``c1``, plus orbit representatives."""
    raw = solve_hermitian(envelope_cm1(c1))
    return orbit_reduce(raw, h4_stabilizer())


def search_ci(c1: CycMatrix, cm1: CycMatrix) -> list[CycMatrix]:
    env = envelope_ci(c1, cm1)
    if env.degenerate:
        log.info("dropping chain at C(i): %s", env.reason)
    return solve_hermitian(env)


def search_cz8(c1: CycMatrix, cm1: CycMatrix, ci: CycMatrix) -> list[CycMatrix]:
    env = envelope_cz8(c1, cm1, ci)
    if env.degenerate:
        log.info("dropping chain at C(zeta_8): %s", env.reason)
    return solve_hermitian(env)


def reconstruct_cx(c1: CycMatrix, cm1: CycMatrix, ci: CycMatrix, cz8: CycMatrix) -> PolyMatrix:
    """C(x) mod x^8 - 1 from its four residues, checked against the stage congruence."""
    entries = [
        [
            crt_reconstruct(c1.entry(i, j), cm1.entry(i, j), ci.entry(i, j), cz8.entry(i, j))
            for j in range(ORDER)
        ]
        for i in range(ORDER)
    ]
    cx = PolyMatrix.from_entries(entries)
    if ((cx.coeffs < 0) | (cx.coeffs > 2)).any():
        raise InconsistentInputError("reconstructed C(x) has coefficients outside {0, 1, 2}")
    rhs = PolyMatrix.scalar(ORDER, 8, 16) + PolyMatrix.constant_entries(H4, PolyResidue.all_ones(8) * 2)
    if cx @ cx + cx != rhs:
        raise InconsistentInputError("reconstructed C(x) fails C^2 + C = 16 I + 2 c_8 H_4 mod x^8 - 1")
    return cx


def lift_zeta16(cx: PolyMatrix) -> list[CycMatrix]:
    """All candidate C(zeta_16) compatible with C(x) mod x^8 - 1."""
    env = envelope_z16(cx)
    if env.degenerate:
        log.info("no zeta_16 envelope: %s", env.reason)
    return solve_hermitian(env)


def reconstruct_x16(c1: CycMatrix, cm1: CycMatrix, ci: CycMatrix, cz8: CycMatrix, cz16: CycMatrix) -> PolyMatrix:
    """C(x) mod x^16 - 1 from a complete chain and one of its zeta_16 lifts."""
    levels = (c1, cm1, ci, cz8, cz16)
    return PolyMatrix.from_entries([
        [crt_reconstruct(*(m.entry(i, j) for m in levels)) for j in range(ORDER)]
        for i in range(ORDER)
    ])


# ---------------------------------------------------------------------------
# residue chains and candidate files

STAGES = ("c1", "cm1", "ci", "cz8")
STAGE_LEVEL = {"c1": 1, "cm1": 2, "ci": 4, "cz8": 8, "lift16": 16}


@dataclass(frozen=True)
class ResidueChain:
    """A compatible prefix (C(1), C(-1), C(i), C(zeta_8)) with lineage ids."""

    levels: tuple[CycMatrix, ...]
    ids: tuple[str, ...]

    def __post_init__(self):
        want = [STAGE_LEVEL[s] for s in STAGES[: len(self.levels)]]
        if [m.level for m in self.levels] != want:
            raise InconsistentInputError(f"chain levels {[m.level for m in self.levels]} != {want}")

    @property
    def id(self) -> str:
        return self.ids[-1]

    @property
    def parent_id(self) -> str | None:
        return self.ids[-2] if len(self.ids) > 1 else None

    @property
    def top(self) -> CycMatrix:
        return self.levels[-1]

    def extend(self, m: CycMatrix, index: int) -> ResidueChain:
        stage = STAGES[len(self.levels)]
        return ResidueChain(self.levels + (m,), self.ids + (f"{self.id}/{stage}-{index}",))

    def to_record(self, **extra) -> dict:
        rec = {
            "id": self.id,
            "parent_id": self.parent_id,
            "level": self.top.level,
            "entries": self.top.coeffs.tolist(),
            "ancestors": [m.coeffs.tolist() for m in self.levels[:-1]],
        }
        rec.update(extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> ResidueChain:
        mats = [
            CycMatrix(STAGE_LEVEL[STAGES[i]], np.array(e)) for i, e in enumerate(rec["ancestors"])
        ]
        mats.append(CycMatrix(rec["level"], np.array(rec["entries"])))
        parts = rec["id"].split("/")
        ids = tuple("/".join(parts[: i + 1]) for i in range(len(parts)))
        return cls(tuple(mats), ids)


def root_chains() -> list[ResidueChain]:
    return [ResidueChain((m,), (f"c1-{i}",)) for i, m in enumerate(search_c1())]


@dataclass
class StageResult:
    """Children of one parent chain; ``kept`` flags orbit representatives at C(-1)."""

    parent: ResidueChain
    children: list[ResidueChain]
    kept: list[bool] = field(default_factory=list)


def extend_chain(chain: ResidueChain) -> StageResult:
    c = chain.levels
    stage = STAGES[len(c)]
    if stage == "cm1":
        red = search_cm1(c[0])
        reps = set(red.reduced)
        kids = [chain.extend(m, i) for i, m in enumerate(red.raw)]
        return StageResult(chain, kids, [m in reps for m in red.raw])
    if stage == "ci":
        found = search_ci(*c)
    elif stage == "cz8":
        found = search_cz8(*c)
    else:
        raise ValueError(f"chain {chain.id} is already complete")
    return StageResult(chain, [chain.extend(m, i) for i, m in enumerate(found)], [True] * len(found))


def write_chains(path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            n += 1
    return n


def read_chains(path, kept_only: bool = False) -> list[ResidueChain]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if kept_only and not rec.get("kept", True):
            continue
        out.append(ResidueChain.from_record(rec))
    return out

