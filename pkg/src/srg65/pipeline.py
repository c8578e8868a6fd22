"""End-to-end reproduction: residue stages, GF(2) solve, enumeration, assembly, checks."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures
from . import residue_search as rs
from .blocks import CycMatrix, PolyMatrix, compact, expand, expand_bivariate, format_matrix
from .cyclotomic import PolyResidue, format_poly
from .enumeration import assemble_core, check_integer_equation, enumerate_space, format_survivors
from .errors import ContractError, InconsistentInputError
from .gf2 import build_constraints, build_gauge, expand_to_D, solve_affine
from .srg import (
    BorderedForm,
    Report,
    SrgParams,
    assemble_adjacency,
    canonical_border,
    check_bordered,
    check_conference,
    check_srg,
    conference_matrix,
)

log = logging.getLogger(__name__)

PIPELINE_STAGES = ("c1", "cm1", "ci", "cz8", "reconstruct", "gf2", "enumerate", "assemble")
SRG65 = SrgParams(65, 32, 15, 16)


class PipelineHalt(RuntimeError):
    def __init__(self, stage: str, detail: str = "no candidates"):
        super().__init__(f"pipeline halted at stage {stage}: {detail}")
        self.stage = stage


# ---------------------------------------------------------------------------
# demos


@dataclass
class DemoReport:
    name: str
    checks: list[tuple[str, bool]]
    srg: Report

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.checks) and self.srg.ok

    def lines(self) -> list[str]:
        out = [f"{self.name}: {what}: {'pass' if ok else 'FAIL'}" for what, ok in self.checks]
        out.append(f"{self.name}: srg check: {'pass' if self.srg.ok else 'FAIL ' + str(self.srg)}")
        return out


def run_demo(name: str) -> DemoReport:
    if name == "petersen":
        a = fixtures.petersen()
        b = compact(a, 2, 5)
        rhs = PolyMatrix.scalar(2, 5, 2) + PolyMatrix.constant_entries(np.ones((2, 2), np.int64), PolyResidue.all_ones(5))
        checks = [
            ("compaction matches the pentagon/pentagram form", b == fixtures.PETERSEN_COMPACT),
            ("expansion round-trips", np.array_equal(expand(b), a)),
            ("B^2 + B = 2 I + c_5 J mod x^5 - 1", b @ b + b == rhs),
        ]
        return DemoReport(name, checks, check_srg(a, SrgParams(10, 3, 0, 1)))
    if name == "hs50":
        a = expand_bivariate(fixtures.hoffman_singleton_bivariate())
        checks = [("B^2 + B = 6 I + J", np.array_equal(a @ a + a, 6 * np.eye(50, dtype=np.int64) + 1))]
        return DemoReport(name, checks, check_srg(a, SrgParams(50, 7, 0, 1)))
    raise ContractError(f"unknown demo {name!r} (choose petersen or hs50)")


# ---------------------------------------------------------------------------
# cx files


def cx_record(chain_id: str, cx: PolyMatrix) -> dict:
    n = cx.coeffs.shape[0]
    return {
        "id": chain_id,
        "modulus": cx.modulus,
        "coeffs": cx.coeffs.tolist(),
        "text": {f"{i + 1},{j + 1}": format_poly(cx.entry(i, j)) for i in range(n) for j in range(i, n)},
    }


def cx_from_record(rec: dict) -> PolyMatrix:
    return PolyMatrix(rec["modulus"], np.array(rec["coeffs"], dtype=np.int64))


def reconstruct_chain(chain: rs.ResidueChain) -> PolyMatrix:
    if len(chain.levels) != 4:
        raise ContractError(f"chain {chain.id} is not complete to level 8")
    return rs.reconstruct_cx(*chain.levels)


# ---------------------------------------------------------------------------
# the main branch


def printed_chain() -> rs.ResidueChain:
    """The published chain with ids as the stage search assigns them."""
    chain = next(c for c in rs.root_chains() if c.top == CycMatrix(1, fixtures.C1_SECOND))
    for level in (2, 4, 8):
        target = fixtures.example_chain()[level]
        res = rs.extend_chain(chain)
        chain = next(c for c in res.children if c.top == target)
    return chain


# ---------------------------------------------------------------------------
# full pipeline


@dataclass
class PipelineConfig:
    out_dir: Path
    until: str = "assemble"
    shards: int = 16
    workers: int = 1
    full: bool = False
    lift16: bool = False
    ungauged: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.until not in PIPELINE_STAGES:
            raise ContractError(f"unknown stage {self.until!r}; expected one of {', '.join(PIPELINE_STAGES)}")
        if self.shards < 1 or self.workers < 1:
            raise ContractError("shard and worker counts must be at least 1")

    def wants(self, stage: str) -> bool:
        return PIPELINE_STAGES.index(stage) <= PIPELINE_STAGES.index(self.until)


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class _Run:
    cfg: PipelineConfig
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def write(self, name: str, text: str) -> Path:
        path = self.cfg.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files[name] = _sha(path)
        return path

    def write_jsonl(self, name: str, records) -> int:
        lines = [json.dumps(r, separators=(",", ":")) for r in records]
        self.write(name, "".join(line + "\n" for line in lines))
        return len(lines)

    def timed(self, key: str, t0: float) -> None:
        self.timings[key] = round(time.perf_counter() - t0, 3)


def _stage_searches(run: _Run, follow: rs.ResidueChain | None) -> list[rs.ResidueChain]:
    """Run the residue stages; ``follow`` picks one branch, None follows every kept candidate."""
    cfg = run.cfg
    t0 = time.perf_counter()
    frontier = rs.root_chains()
    run.write_jsonl("stage_c1.jsonl", [c.to_record() for c in frontier])
    run.timed("c1", t0)
    run.summary["stages"] = {"c1": {"candidates": len(frontier)}}
    for depth, stage in enumerate(rs.STAGES[1:], start=1):
        if not frontier:
            raise PipelineHalt(rs.STAGES[depth - 1])
        if not cfg.wants(stage):
            return frontier
        if follow is not None:
            frontier = [c for c in frontier if c.ids[-1] == follow.ids[depth - 1]]
        t0 = time.perf_counter()
        records, nxt, per_parent = [], [], {}
        for chain in frontier:
            res = rs.extend_chain(chain)
            per_parent[chain.id] = {"raw": len(res.children), "kept": sum(res.kept)}
            for child, kept in zip(res.children, res.kept):
                records.append(child.to_record(kept=kept))
                if kept:
                    nxt.append(child)
        run.write_jsonl(f"stage_{stage}.jsonl", records)
        run.timed(stage, t0)
        run.summary["stages"][stage] = {"candidates": len(records), "per_parent": per_parent}
        frontier = nxt
    if not frontier:
        raise PipelineHalt("cz8")
    if follow is not None:
        frontier = [c for c in frontier if c.id == follow.id]
    return frontier


def _lift16(run: _Run, chains: list[rs.ResidueChain]) -> None:
    t0 = time.perf_counter()
    records = []
    for chain in chains:
        try:
            cx = reconstruct_chain(chain)
        except InconsistentInputError as exc:  # inconsistent residues cannot lift
            records.append({"id": chain.id, "candidates": 0, "reason": str(exc)})
            continue
        records.append({"id": chain.id, "candidates": len(rs.lift_zeta16(cx))})
    run.write_jsonl("lift16.jsonl", records)
    run.timed("lift16", t0)
    run.summary["lift16"] = {"chains": len(records), "candidates": sum(r["candidates"] for r in records)}


def _solve_chain(run: _Run, tag: str, chain: rs.ResidueChain) -> dict:
    cfg = run.cfg
    out: dict = {"id": chain.id}
    t0 = time.perf_counter()
    try:
        cx = reconstruct_chain(chain)
    except InconsistentInputError as exc:
        out["dropped"] = str(exc)
        return out
    run.write_jsonl(f"{tag}/cx.jsonl", [cx_record(chain.id, cx)])
    run.timed(f"{tag}/reconstruct", t0)
    if not cfg.wants("gf2"):
        return out

    t0 = time.perf_counter()
    d = expand_to_D(cx)
    run.write(f"{tag}/D.txt", format_matrix(d))
    ungauged = solve_affine(d, build_constraints(d))
    gauge = [] if cfg.ungauged else build_gauge(d)
    space = solve_affine(d, build_constraints(d, gauge))
    run.write(f"{tag}/affine.txt", space.dumps())
    run.timed(f"{tag}/gf2", t0)
    out.update(free_vars=space.num_free_vars, dimension_ungauged=ungauged.dimension,
               dimension=space.dimension, gauge_pins=len(gauge))
    if not cfg.wants("enumerate"):
        return out
    if not space.feasible:
        raise PipelineHalt("gf2", f"chain {chain.id} has no mod-2 solutions")

    t0 = time.perf_counter()
    shards = min(cfg.shards, 1 << space.dimension)
    shards = 1 << (shards.bit_length() - 1)
    survivors = enumerate_space(space, d, shards=shards, workers=cfg.workers)
    run.write(f"{tag}/survivors.txt", format_survivors(survivors))
    run.timed(f"{tag}/enumerate", t0)
    out["survivors"] = len(survivors)
    if not cfg.wants("assemble"):
        return out
    if not survivors:
        raise PipelineHalt("enumerate", f"chain {chain.id} has no integer solutions")

    t0 = time.perf_counter()
    graphs = []
    for k, r in enumerate(survivors):
        ok, bad = check_integer_equation(r.e, d)
        if not ok:
            raise RuntimeError(f"survivor {k} fails the integer equation at {bad}")
        a = assemble_adjacency(BorderedForm(canonical_border(), assemble_core(r.e, d)))
        s = conference_matrix(a)
        srg, conf = check_srg(a, SRG65), check_conference(s)
        run.write(f"{tag}/adjacency-{k}.txt", format_matrix(a))
        run.write(f"{tag}/conference-{k}.txt", format_matrix(s))
        graphs.append({
            "srg": srg.ok,
            "conference": conf.ok,
            "matches_printed": bool(np.array_equal(a, fixtures.printed_adjacency())),
        })
    run.timed(f"{tag}/assemble", t0)
    out["graphs"] = graphs
    out["printed_index"] = next((k for k, g in enumerate(graphs) if g["matches_printed"]), None)
    return out


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run the configured prefix of the pipeline; returns the summary (also written to summary.json)."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg)
    run.summary["config"] = {
        "until": cfg.until, "shards": cfg.shards, "full": cfg.full,
        "lift16": cfg.lift16, "ungauged": cfg.ungauged,
    }
    follow = None if cfg.full else printed_chain()
    chains = _stage_searches(run, follow)
    if cfg.lift16 and cfg.wants("cz8"):
        lift_from = chains
        if follow is not None:
            # every cz8 candidate of the main branch, not only the printed one
            lift_from = [
                c for c in rs.read_chains(cfg.out_dir / "stage_cz8.jsonl")
                if c.parent_id == follow.parent_id
            ]
        _lift16(run, lift_from)
    if cfg.wants("reconstruct") and len(chains[0].levels) == 4:
        results = []
        for k, chain in enumerate(sorted(chains, key=lambda c: c.id)):
            results.append(_solve_chain(run, f"chain-{k:03d}", chain))
        run.summary["chains"] = results
    run.summary["files"] = dict(sorted(run.files.items()))
    (cfg.out_dir / "summary.json").write_text(json.dumps(run.summary, indent=2, sort_keys=True) + "\n")
    (cfg.out_dir / "timings.json").write_text(json.dumps(run.timings, indent=2) + "\n")
    return run.summary


# ---------------------------------------------------------------------------
# published matrices


def verify_paper_artifacts(a: np.ndarray | None = None) -> list[tuple[str, bool, str]]:
    """(check, ok, detail) for the printed E and A; pass ``a`` to check a modified adjacency matrix."""
    a = fixtures.printed_adjacency() if a is None else np.asarray(a, dtype=np.int64)
    d = expand_to_D(fixtures.example_cx())
    ok_e, bad = check_integer_equation(fixtures.printed_e(), d)
    out = [("E satisfies 2E^2 - ED - DE + E - D + H = 0", ok_e, "" if ok_e else str(bad))]
    srg = check_srg(a, SRG65)
    out.append(("A is srg(65,32,15,16)", srg.ok, str(srg)))
    if np.array_equal(a[0, 1:], canonical_border()) and a[0, 0] == 0:
        rep = check_bordered(BorderedForm.from_adjacency(a))
        out.append(("A has bordered form with valid block sums", rep.ok, str(rep)))
    else:
        out.append(("A has bordered form with valid block sums", False, "first row is not the canonical border"))
    conf = check_conference(conference_matrix(a))
    out.append(("conference matrix S of A has S^2 = 65 I", conf.ok, str(conf)))
    return out
