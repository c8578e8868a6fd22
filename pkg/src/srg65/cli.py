"""Command-line interface.  Exit codes: 0 success, 1 verification failure, 2 usage error."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as P
from . import residue_search as rs
from .blocks import read_matrix, write_matrix
from .enumeration import (
    EnumShard,
    assemble_core,
    check_integer_equation,
    enumerate_space,
    format_survivors,
    parse_survivors,
)
from .errors import ConstraintError, ContractError, InconsistentInputError
from .gf2 import AffineSpaceGF2, build_constraints, build_gauge, expand_to_D, solve_affine
from .srg import (
    BorderedForm,
    SrgParams,
    assemble_adjacency,
    canonical_border,
    check_conference,
    check_srg,
    conference_matrix,
)

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _say(*lines: str) -> None:
    for line in lines:
        print(line)


def _load_cx(path: str, chain_id: str | None):
    recs = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    if chain_id is not None:
        recs = [r for r in recs if r["id"] == chain_id]
    if not recs:
        raise UsageError(f"no C(x) record{' with id ' + chain_id if chain_id else ''} in {path}")
    return recs[0]["id"], P.cx_from_record(recs[0])


# ---------------------------------------------------------------------------
# subcommands


def cmd_demo(args) -> int:
    rep = P.run_demo(args.name)
    _say(*rep.lines())
    return OK if rep.ok else FAILED


def cmd_stage(args) -> int:
    if args.stage == "c1":
        if args.input:
            raise UsageError("stage c1 takes no input file")
        records = [c.to_record() for c in rs.root_chains()]
    else:
        if not args.input:
            raise UsageError(f"stage {args.stage} needs --in")
        parents = rs.read_chains(args.input, kept_only=True)
        want = rs.STAGES.index(args.stage)
        if any(len(c.levels) != want for c in parents):
            raise UsageError(f"--in must hold stage {rs.STAGES[want - 1]} candidates")
        records = []
        for chain in parents:
            res = rs.extend_chain(chain)
            records += [k.to_record(kept=kept) for k, kept in zip(res.children, res.kept)]
            _say(f"{chain.id}: {len(res.children)} candidates, {sum(res.kept)} kept")
    n = rs.write_chains(args.out, records)
    _say(f"stage {args.stage}: {n} candidates written to {args.out}")
    return OK


def cmd_reconstruct(args) -> int:
    chains = rs.read_chains(args.input, kept_only=True)
    records, dropped = [], 0
    for chain in chains:
        try:
            records.append(P.cx_record(chain.id, P.reconstruct_chain(chain)))
        except InconsistentInputError as exc:
            dropped += 1
            logging.info("%s dropped: %s", chain.id, exc)
    rs.write_chains(args.out, records)
    _say(f"reconstructed {len(records)} of {len(chains)} chains ({dropped} inconsistent)")
    for rec in records[: args.show]:
        _say(rec["id"], *(f"  C{k} = {v}" for k, v in rec["text"].items()))
    return OK


def cmd_lift16(args) -> int:
    total = 0
    for chain in rs.read_chains(args.input, kept_only=True):
        try:
            n = len(rs.lift_zeta16(P.reconstruct_chain(chain)))
        except InconsistentInputError:
            n = 0
        total += n
        _say(f"{chain.id}: {n} candidates")
    _say(f"lift16: {total} candidates in total")
    return OK


def cmd_solve_gf2(args) -> int:
    chain_id, cx = _load_cx(args.cx, args.id)
    d = expand_to_D(cx)
    gauge = [] if args.no_gauge else build_gauge(d)
    space = solve_affine(d, build_constraints(d, gauge))
    space.save(args.out)
    if args.d_out:
        write_matrix(args.d_out, d)
    if not space.feasible:
        _say(f"{chain_id}: infeasible")
        return FAILED
    _say(f"{chain_id}: {space.num_free_vars} free variables, {len(gauge)} gauge pins, dimension {space.dimension}")
    return OK


def cmd_enumerate(args) -> int:
    space = AffineSpaceGF2.load(args.space)
    d = read_matrix(args.d)
    if space.feasible:
        EnumShard(args.shard or 0, args.shards, space.dimension)
    only = None if args.shard is None else [args.shard]
    results = enumerate_space(
        space, d, shards=args.shards, workers=args.workers,
        checkpoint_dir=Path(args.checkpoint) if args.checkpoint else None, only=only, report=True,
    )
    Path(args.out).write_text(format_survivors(results))
    _say(f"survivors: {len(results)}")
    return OK


def cmd_assemble(args) -> int:
    d = read_matrix(args.d)
    if args.e_matrix:
        e = read_matrix(args.e_matrix)
    else:
        found = parse_survivors(Path(args.survivors).read_text())
        if not 0 <= args.index < len(found):
            raise UsageError(f"survivor index {args.index} out of range ({len(found)} survivors)")
        e = found[args.index].e
    ok, bad = check_integer_equation(e, d)
    if not ok:
        _say(f"E fails the integer equation at ({bad.row}, {bad.col}): residual {bad.value}")
        return FAILED
    a = assemble_adjacency(BorderedForm(canonical_border(), assemble_core(e, d)))
    write_matrix(args.out, a)
    _say(f"wrote {a.shape[0]} x {a.shape[1]} adjacency matrix to {args.out}")
    return OK


def cmd_verify_srg(args) -> int:
    a = read_matrix(args.input)
    rep = check_srg(a, SrgParams.parse(args.params))
    _say(f"srg{SrgParams.parse(args.params)}: {rep}")
    return OK if rep.ok else FAILED


def cmd_conference(args) -> int:
    s = conference_matrix(read_matrix(args.input))
    if args.out:
        write_matrix(args.out, s)
    rep = check_conference(s)
    _say(f"conference matrix of order {s.shape[0]}: S^2 = {s.shape[0] - 1} I: {rep}")
    return OK if rep.ok else FAILED


def cmd_run(args) -> int:
    cfg = P.PipelineConfig(
        Path(args.out), until=args.until, shards=args.shards, workers=args.workers,
        full=args.full, lift16=args.lift16, ungauged=args.ungauged,
    )
    try:
        summary = P.run_pipeline(cfg)
    except P.PipelineHalt as exc:
        _say(str(exc))
        return FAILED
    _say(json.dumps({k: v for k, v in summary.items() if k != "files"}, indent=2, sort_keys=True))
    graphs = [g for c in summary.get("chains", []) for g in c.get("graphs", [])]
    return OK if all(g["srg"] and g["conference"] for g in graphs) else FAILED


def cmd_verify_artifacts(args) -> int:
    a = read_matrix(args.adjacency) if args.adjacency else None
    results = P.verify_paper_artifacts(a)
    for what, ok, detail in results:
        _say(f"{what}: pass" if ok else f"{what}: FAIL ({detail})")
    return OK if all(ok for _, ok, _ in results) else FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srg65", description="Cyclotomic residue search for srg(65,32,15,16).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("demo", help="Petersen and Hoffman-Singleton warm-ups")
    s.add_argument("name", choices=["petersen", "hs50"])
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("stage", help="run one residue stage")
    s.add_argument("stage", choices=list(rs.STAGES))
    s.add_argument("--in", dest="input")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stage)

    s = sub.add_parser("reconstruct", help="C(x) mod x^8 - 1 from complete chains")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--show", type=int, default=1, help="print this many reconstructions")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("lift16", help="try to lift complete chains to zeta_16")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_lift16)

    s = sub.add_parser("solve-gf2", help="affine space of E mod 2")
    s.add_argument("--cx", required=True, help="JSON Lines file from reconstruct")
    s.add_argument("--id", help="chain id (default: first record)")
    s.add_argument("--no-gauge", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--d-out", help="also write D here")
    s.set_defaults(func=cmd_solve_gf2)

    s = sub.add_parser("enumerate", help="filter the affine space by the integer equation")
    s.add_argument("--space", required=True)
    s.add_argument("--d", required=True)
    s.add_argument("--shards", type=int, default=1)
    s.add_argument("--shard", type=int, help="run only this shard")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--checkpoint")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("assemble", help="65 x 65 adjacency matrix from E and D")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--e", dest="e_matrix")
    g.add_argument("--survivors")
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--d", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_assemble)

    s = sub.add_parser("verify-srg", help="check an adjacency matrix")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--params", default="65,32,15,16")
    s.set_defaults(func=cmd_verify_srg)

    s = sub.add_parser("conference", help="conference matrix of a conference graph")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_conference)

    s = sub.add_parser("run", help="end-to-end reproduction")
    s.add_argument("--out", required=True)
    s.add_argument("--until", default="assemble", choices=list(P.PIPELINE_STAGES))
    s.add_argument("--shards", type=int, default=16)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--full", action="store_true", help="follow every kept branch")
    s.add_argument("--lift16", action="store_true")
    s.add_argument("--ungauged", action="store_true", help="enumerate without gauge pins (2^62 points)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("verify-paper-artifacts", help="check the published E and A")
    s.add_argument("--adjacency", help="check this matrix instead of the embedded one")
    s.set_defaults(func=cmd_verify_artifacts)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InconsistentInputError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return FAILED
    except (UsageError, ContractError, ConstraintError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
