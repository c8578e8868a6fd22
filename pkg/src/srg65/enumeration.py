"""Enumerate the gauged affine space and keep the E that satisfy the integer equation

    2 E^2 - E D - D E + E - D + H = 0.

E is held as one bit mask per row.  A step of the Gray-code walk XORs one
basis vector's row masks into E, and each entry of the left-hand side is
evaluated on demand from popcounts:

    (E^2)_ij = |E_i & E_j|,   (E D)_ij = |E_i & D1_j| + 2 |E_i & D2_j|,

with D1 / D2 the masks of the entries equal to 1 / 2.  Entries are tested in
order of decreasing violation frequency, so a failing point usually costs a
handful of popcounts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
from numba import njit, types
from numba.extending import intrinsic

from .errors import ContractError, InconsistentInputError
from .gf2 import AffineSpaceGF2
from .srg import build_H

log = logging.getLogger(__name__)

SPOT_CHECK = 1 << 20
CALIBRATION = 1 << 20
_CHUNK = 1 << 24
_CAPACITY = 1 << 12


@intrinsic
def _popcount(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@njit(cache=True)
def _entry(e, d1, d2, k, i, j):
    ei, ej = e[i], e[j]
    f = 2 * np.int64(_popcount(ei & ej))
    f -= np.int64(_popcount(ei & d1[j])) + 2 * np.int64(_popcount(ei & d2[j]))
    f -= np.int64(_popcount(ej & d1[i])) + 2 * np.int64(_popcount(ej & d2[i]))
    f += np.int64((ei >> np.uint64(j)) & np.uint64(1))
    return f + k[i, j]


@njit(cache=True)
def _load(e, base, basis, coords):
    e[:] = base
    for b in range(basis.shape[0]):
        if (coords >> np.uint64(b)) & np.uint64(1):
            e ^= basis[b]


@njit(cache=True)
def _ctz(x):
    n = 0
    while (x & np.uint64(1)) == 0:
        x >>= np.uint64(1)
        n += 1
    return n


@njit(cache=True)
def _walk(base, basis, d1, d2, k, ci, cj, prefix, inner, s0, s1, out):
    """Walk Gray steps [s0, s1) of the shard; returns (next step, survivors, status).

    status: 0 finished, 1 output buffer full, 2 spot-check mismatch.
    """
    n = base.shape[0]
    e = np.empty(n, dtype=np.uint64)
    scratch = np.empty(n, dtype=np.uint64)
    high = np.uint64(prefix) << np.uint64(inner)
    s = np.uint64(s0)
    _load(e, base, basis, high | (s ^ (s >> np.uint64(1))))
    found = 0
    m = ci.shape[0]
    while s < np.uint64(s1):
        if (s & np.uint64(SPOT_CHECK - 1)) == 0:
            _load(scratch, base, basis, high | (s ^ (s >> np.uint64(1))))
            for r in range(n):
                if scratch[r] != e[r]:
                    return s, found, 2
        ok = True
        for t in range(m):
            if _entry(e, d1, d2, k, ci[t], cj[t]) != 0:
                ok = False
                break
        if ok:
            if found == out.shape[0]:
                return s, found, 1
            out[found] = high | (s ^ (s >> np.uint64(1)))
            found += 1
        s += np.uint64(1)
        if s < np.uint64(1) << np.uint64(inner):
            e ^= basis[_ctz(s)]
    return s, found, 0


@njit(cache=True)
def _violation_counts(base, basis, d1, d2, k, ci, cj, steps):
    n = base.shape[0]
    e = base.copy()
    counts = np.zeros(ci.shape[0], dtype=np.int64)
    for s in range(steps):
        for t in range(ci.shape[0]):
            if _entry(e, d1, d2, k, ci[t], cj[t]) != 0:
                counts[t] += 1
        if s + 1 < steps:
            e ^= basis[_ctz(np.uint64(s + 1))]
    return counts


def _row_masks(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    weights = np.uint64(1) << np.arange(n, dtype=np.uint64)
    return (m.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


@dataclass(frozen=True)
class EnumShard:
    """Points whose top ``prefix_bits`` basis coordinates equal ``index``."""

    index: int
    total: int
    dimension: int

    def __post_init__(self):
        if self.total < 1 or self.total & (self.total - 1):
            raise ContractError("the shard count must be a power of two")
        if not 0 <= self.index < self.total:
            raise ContractError(f"shard index {self.index} out of range for {self.total} shards")
        if self.prefix_bits > max(self.dimension, 0):
            raise ContractError(f"{self.total} shards exceed a space of dimension {self.dimension}")

    @property
    def prefix_bits(self) -> int:
        return self.total.bit_length() - 1

    @property
    def inner_bits(self) -> int:
        return self.dimension - self.prefix_bits

    @property
    def steps(self) -> int:
        return 1 << self.inner_bits

    def coordinates(self, step: int) -> int:
        return self.index << self.inner_bits | (step ^ step >> 1)


@dataclass(frozen=True, eq=False)
class EMatrixResult:
    e: np.ndarray
    shard: int
    coords: int

    def key(self) -> bytes:
        return self.e.astype(np.uint8).tobytes()


@dataclass(frozen=True)
class FirstViolation:
    row: int  # 1-based
    col: int
    value: int


def integer_residual(e: np.ndarray, d: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    e, d = np.asarray(e, dtype=np.int64), np.asarray(d, dtype=np.int64)
    h = build_H(d.shape[0] // 2) if h is None else np.asarray(h, dtype=np.int64)
    return 2 * e @ e - e @ d - d @ e + e - d + h


def check_integer_equation(e: np.ndarray, d: np.ndarray, h: np.ndarray | None = None) -> tuple[bool, FirstViolation | None]:
    r = integer_residual(e, d, h)
    bad = np.argwhere(r != 0)
    if len(bad) == 0:
        return True, None
    i, j = bad[0]
    return False, FirstViolation(int(i) + 1, int(j) + 1, int(r[i, j]))


def assemble_core(e: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Expand C~(x) = E + (D - E) x mod x^2 - 1 to 64 x 64: blocks [[e, f], [f, e]] per entry."""
    e, d = np.asarray(e, dtype=np.int64), np.asarray(d, dtype=np.int64)
    f = d - e
    if not np.isin(f, (0, 1)).all() or not np.isin(e, (0, 1)).all():
        raise InconsistentInputError("E and D - E must be 0/1 matrices")
    n = e.shape[0]
    core = np.empty((2 * n, 2 * n), dtype=np.int64)
    core[0::2, 0::2] = e
    core[1::2, 1::2] = e
    core[0::2, 1::2] = f
    core[1::2, 0::2] = f
    return core


class Enumerator:
    """Precomputed bit masks for one (space, D) pair."""

    def __init__(self, space: AffineSpaceGF2, d: np.ndarray, h: np.ndarray | None = None, order=None):
        d = np.asarray(d, dtype=np.int64)
        n = d.shape[0]
        if space.feasible and space.order != n:
            raise ContractError("space and D have different orders")
        if n > 64:
            raise ContractError("orders above 64 do not fit the row masks")
        self.space, self.d = space, d
        self.h = build_H(n // 2) if h is None else np.asarray(h, dtype=np.int64)
        self.base = _row_masks(space.decode(space.particular)) if space.feasible else np.zeros(n, np.uint64)
        self.basis = np.array(
            [_row_masks(space.decode(b) ^ space.decode(0)) for b in space.basis], dtype=np.uint64
        ).reshape(len(space.basis), n)
        self.d1 = _row_masks(d == 1)
        self.d2 = _row_masks(d == 2)
        self.k = self.h - d
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        self.order = self.calibrate(pairs) if order is None else list(order)
        self.ci = np.array([p[0] for p in self.order], dtype=np.int64)
        self.cj = np.array([p[1] for p in self.order], dtype=np.int64)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def calibrate(self, pairs) -> list[tuple[int, int]]:
        """Order entries by how often they fail on the first Gray steps (most often first)."""
        if not self.space.feasible:
            return pairs
        ci = np.array([p[0] for p in pairs], dtype=np.int64)
        cj = np.array([p[1] for p in pairs], dtype=np.int64)
        steps = min(CALIBRATION, 1 << self.dimension)
        counts = _violation_counts(self.base, self.basis, self.d1, self.d2, self.k, ci, cj, steps)
        ranked = sorted(range(len(pairs)), key=lambda t: (-counts[t], t))
        return [pairs[t] for t in ranked]

    def checksum(self) -> str:
        h = hashlib.sha256(self.space.dumps().encode())
        h.update(self.d.tobytes())
        h.update(self.h.tobytes())
        return h.hexdigest()[:16]

    def e_of(self, coords: int) -> np.ndarray:
        return self.space.decode(self.space.point(coords))

    def run(
        self,
        shard: EnumShard,
        checkpoint: Path | None = None,
        progress: Callable[[str], None] | None = None,
        chunk: int = _CHUNK,
    ) -> Iterator[EMatrixResult]:
        """Survivors of one shard, resuming from ``checkpoint`` when it holds a matching state."""
        if not self.space.feasible:
            return
        state = {"shard": shard.index, "total": shard.total, "space": self.checksum(), "step": 0, "survivors": []}
        if checkpoint is not None and checkpoint.exists():
            saved = json.loads(checkpoint.read_text())
            if {k: saved.get(k) for k in ("shard", "total", "space")} != {k: state[k] for k in ("shard", "total", "space")}:
                raise ContractError(f"checkpoint {checkpoint} belongs to a different run")
            state = saved
        for c in state["survivors"]:
            yield EMatrixResult(self.e_of(c), shard.index, c)
        out = np.empty(_CAPACITY, dtype=np.uint64)
        step, total = state["step"], shard.steps
        t0, start = time.perf_counter(), step
        while step < total:
            stop = min(total, step + chunk)
            nxt, found, status = _walk(
                self.base, self.basis, self.d1, self.d2, self.k, self.ci, self.cj,
                shard.index, shard.inner_bits, step, stop, out,
            )
            if status == 2:
                raise RuntimeError(f"incremental E diverged from recomputation at step {int(nxt)}")
            new = [int(c) for c in out[:found]]
            step = int(nxt)
            state["step"] = step
            state["survivors"] += new
            for c in new:
                yield EMatrixResult(self.e_of(c), shard.index, c)
            if checkpoint is not None:
                checkpoint.write_text(json.dumps(state))
            if progress is not None:
                rate = (step - start) / max(time.perf_counter() - t0, 1e-9)
                progress(f"shard {shard.index}: steps {step}, survivors {len(state['survivors'])}, rate {rate:.0f}/s")


def _run_shard(args) -> list[tuple[int, int]]:
    space_text, d, h, order, index, total, ckpt_dir, report = args
    space = AffineSpaceGF2.loads(space_text)
    en = Enumerator(space, d, h, order=order)
    shard = EnumShard(index, total, space.dimension)
    ckpt = None if ckpt_dir is None else Path(ckpt_dir) / f"shard-{index}-of-{total}.json"
    progress = print if report else None
    return [(r.shard, r.coords) for r in en.run(shard, ckpt, progress)]


def enumerate_space(
    space: AffineSpaceGF2,
    d: np.ndarray,
    h: np.ndarray | None = None,
    shards: int = 1,
    workers: int = 1,
    checkpoint_dir: Path | None = None,
    only: list[int] | None = None,
    report: bool = False,
) -> list[EMatrixResult]:
    """All survivors (or those of the shards in ``only``), sorted by E bytes."""
    if not space.feasible:
        return []
    en = Enumerator(space, d, h)
    indices = list(range(shards)) if only is None else list(only)
    for i in indices:
        EnumShard(i, shards, space.dimension)
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(space.dumps(), en.d, en.h, en.order, i, shards, checkpoint_dir, report) for i in indices]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            hits = [x for part in pool.map(_run_shard, jobs) for x in part]
    else:
        hits = [x for job in jobs for x in _run_shard(job)]
    results = [EMatrixResult(en.e_of(c), s, c) for s, c in hits]
    results.sort(key=EMatrixResult.key)
    keys = [r.key() for r in results]
    if len(set(keys)) != len(keys):
        raise RuntimeError("two coordinate vectors decoded to the same E")
    return results


def naive_filter(space: AffineSpaceGF2, d: np.ndarray, h: np.ndarray | None = None) -> list[EMatrixResult]:
    """Decode every point and test the integer equation directly."""
    if not space.feasible:
        return []
    out = []
    for c in range(1 << space.dimension):
        e = space.decode(space.point(c))
        if check_integer_equation(e, d, h)[0]:
            out.append(EMatrixResult(e, 0, c))
    out.sort(key=EMatrixResult.key)
    return out


def format_survivors(results: list[EMatrixResult]) -> str:
    blocks = []
    for r in results:
        rows = "\n".join("".join(str(int(v)) for v in row) for row in r.e)
        blocks.append(f"# coords {r.coords:x}\n{rows}\n")
    return "\n".join(blocks)


def parse_survivors(text: str) -> list[EMatrixResult]:
    out = []
    for block in text.strip().split("\n\n"):
        if not block.strip():
            continue
        head, *rows = block.strip().splitlines()
        parts = head.split()
        e = np.array([[int(c) for c in row] for row in rows], dtype=np.int64)
        out.append(EMatrixResult(e, 0, int(parts[2], 16)))
    return out
