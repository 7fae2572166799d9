"""Command-line entry point.

Exit codes: 0 the property holds, 1 it fails, 2 usage or resource error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .autiso import automorphisms, census, is_rigid, isomorphic
from .core import PartialMap, StructureError, encode, reduct, restrict
from .efgames import BudgetExceeded, GameConfig, ef_certificate_check, ef_decide, default_budget
from .families import (
    FamilyError,
    GoodSequence,
    GoodSequenceError,
    TruncationParams,
    build_good_sequence,
    verify_good_sequence,
)
from .paperstructs import (
    BuiltStructure,
    IndexSet,
    SampleError,
    build_M1,
    build_M2,
    build_MZ,
    build_N1,
    build_N2,
    load_structure,
    sample_X,
)
from .pipeline import STAGES, PipelineConfig, run_pipeline

OK, FAIL, USAGE = 0, 1, 2
DEFAULT_FIXTURE = "tests/fixtures/p0_expected.json"


class UsageError(Exception):
    pass


def default_params() -> TruncationParams:
    text = resources.files("backforth").joinpath("params/p0.json").read_text()
    return TruncationParams.from_dict(json.loads(text))


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}") from None


def _load_params(path: str | None) -> TruncationParams:
    if path is None:
        return default_params()
    try:
        return TruncationParams.from_dict(_read_json(path))
    except (FamilyError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_family(path: str) -> GoodSequence:
    try:
        return GoodSequence.from_document(_read_json(path))
    except FamilyError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_structure(path: str):
    doc = _read_json(path)
    try:
        return load_structure(doc), doc
    except StructureError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _dump(doc, out=None) -> None:
    _emit(json.dumps(doc, indent=2), out)


# -- commands ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    p = _load_params(args.params)
    try:
        G = build_good_sequence(p)
    except GoodSequenceError as exc:
        print(f"gen: {exc}", file=sys.stderr)
        if args.keep_failed:
            _emit(exc.sequence.to_json(), args.out)
        return FAIL
    _emit(G.to_json(), args.out)
    return OK


def cmd_verify_family(args) -> int:
    G = _load_family(args.family)
    report = verify_good_sequence(G, budget=args.budget, sample_size=args.samples)
    _dump(report.to_dict(), args.out)
    return OK if report.passed else FAIL


def cmd_build(args) -> int:
    G = _load_family(args.family)
    which = args.which
    try:
        if which == "N1":
            B = build_N1(G)
        elif which == "N2":
            B = build_N2(G)
        elif which in ("M1", "M2"):
            X = IndexSet.from_document(_read_json(args.index)) if args.index else sample_X(G, args.cprime, seed=G.params.seed)
            B = build_M1(G, X) if which == "M1" else build_M2(G, X)
        else:
            if not args.index:
                raise UsageError("build MZ needs --index")
            B = build_MZ(G, IndexSet.from_document(_read_json(args.index)))
    except SampleError as exc:
        print(f"build: {exc}", file=sys.stderr)
        return FAIL
    except StructureError as exc:
        raise UsageError(str(exc)) from None
    _emit(B.to_json() if args.layout else encode(B.structure), args.out)
    return OK


def cmd_reduct(args) -> int:
    S, doc = _load_structure(args.input)
    try:
        R = reduct(S, args.m)
    except StructureError as exc:
        raise UsageError(str(exc)) from None
    if "layout" in doc:
        _emit(BuiltStructure(R, BuiltStructure.from_document(doc).layout).to_json(), args.out)
    else:
        _emit(encode(R), args.out)
    return OK


def _parse_ids(text: str) -> list:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected a list of integer ids, got {text!r}") from None


def cmd_restrict(args) -> int:
    S, _ = _load_structure(args.input)
    try:
        sub, renum = restrict(S, _parse_ids(args.keep))
    except StructureError as exc:
        raise UsageError(str(exc)) from None
    if args.renumbering:
        Path(args.renumbering).write_text(json.dumps({str(k): v for k, v in renum.items()}) + "\n")
    _emit(encode(sub), args.out)
    return OK


def _parse_pins(items) -> PartialMap:
    pairs = []
    for item in items or []:
        try:
            a, b = item.split(":")
            pairs.append((int(a), int(b)))
        except ValueError:
            raise UsageError(f"--pin expects srcId:dstId, got {item!r}") from None
    try:
        return PartialMap.of(pairs)
    except StructureError as exc:
        raise UsageError(f"--pin: {exc}") from None


def cmd_ef(args) -> int:
    S, _ = _load_structure(args.a)
    T, _ = _load_structure(args.b)
    cfg = GameConfig(args.rounds, _parse_pins(args.pin))
    try:
        res = ef_decide(S, T, cfg, budget=args.budget, certificate=not args.no_certificate)
    except StructureError as exc:
        raise UsageError(str(exc)) from None
    doc = res.to_document() if not args.no_certificate else {"winner": res.winner, "rounds": res.rounds, "stats": res.stats}
    if args.check and not args.no_certificate:
        doc["certificateValid"] = ef_certificate_check(S, T, cfg, res)
    _dump(doc, args.out)
    return OK if res.duplicator_wins else FAIL


def cmd_aut(args) -> int:
    S, _ = _load_structure(args.input)
    _dump(automorphisms(S, args.limit).to_document(), args.out)
    return OK


def cmd_rigid(args) -> int:
    S, _ = _load_structure(args.input)
    rigid = is_rigid(S)
    _dump({"rigid": rigid}, args.out)
    return OK if rigid else FAIL


def cmd_iso(args) -> int:
    S, _ = _load_structure(args.a)
    T, _ = _load_structure(args.b)
    f = isomorphic(S, T)
    doc = {"isomorphic": f is not None}
    if f is not None:
        doc["map"] = {str(k): v for k, v in sorted(f.items())}
    _dump(doc, args.out)
    return OK if f is not None else FAIL


def cmd_census(args) -> int:
    G = _load_family(args.family)
    raw = _read_json(args.zs)
    if not isinstance(raw, list):
        raise UsageError(f"{args.zs}: expected a list of index sets")
    try:
        res = census(G, [IndexSet.from_document(d) for d in raw], args.creq)
    except StructureError as exc:
        raise UsageError(str(exc)) from None
    _dump(res.to_document(), args.out)
    return OK if res.off_diagonal_distinct and res.diagonal_isomorphic else FAIL


def cmd_verify_paper(args) -> int:
    p = _load_params(args.params)
    cfg = PipelineConfig(rounds=args.rounds, budget=args.budget, parallel=args.parallel)
    report = run_pipeline(p, cfg, args.stage or None)
    if args.regen_fixtures:
        path = Path(args.regen_fixtures)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}", file=sys.stderr)
    _dump(report.to_document(), args.out)
    for s in report.stages:
        print(f"{s.name:<11} {'PASS' if s.passed else 'FAIL'}  {s.seconds:7.2f}s", file=sys.stderr)
    return OK if report.passed else FAIL


# -- parser --------------------------------------------------------------------------

def _budget(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget must be an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("budget must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="backforth", description="Finite back-and-forth and rigidity workbench.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="build a good independent sequence")
    g.add_argument("--params", help="parameter JSON (default: bundled P0)")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--keep-failed", action="store_true", help="write the last attempt even when verification fails")
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify-family", help="verify a good-sequence file")
    v.add_argument("--family", required=True)
    v.add_argument("--budget", type=_budget, default=10**7, help="exhaustive enumeration cap")
    v.add_argument("--samples", type=_budget, default=10**5)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify_family)

    b = sub.add_parser("build", help="build N1, N2, M1, M2 or MZ from a good sequence")
    b.add_argument("--family", required=True)
    b.add_argument("--which", required=True, choices=["N1", "N2", "M1", "M2", "MZ"])
    b.add_argument("--index", help="index set JSON {ordinaries, includeOmega}")
    b.add_argument("--cprime", type=int, default=1, help="copies kept when sampling X")
    b.add_argument("--layout", action="store_true", help="include the id layout in the output")
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("reduct", help="keep relations R_0..R_m")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--m", type=int, required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduct)

    rs = sub.add_parser("restrict", help="induced substructure")
    rs.add_argument("--in", dest="input", required=True)
    rs.add_argument("--keep", required=True, help="ids to keep, comma or space separated")
    rs.add_argument("--renumbering", help="write the old->new id map here")
    rs.add_argument("--out")
    rs.set_defaults(func=cmd_restrict)

    e = sub.add_parser("ef", help="decide an r-round back-and-forth game")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--rounds", type=int, required=True)
    e.add_argument("--pin", action="append", help="srcId:dstId, repeatable")
    e.add_argument("--budget", type=_budget, default=None)
    e.add_argument("--no-certificate", action="store_true")
    e.add_argument("--check", action="store_true", help="replay the certificate")
    e.add_argument("--out")
    e.set_defaults(func=cmd_ef)

    a = sub.add_parser("aut", help="count automorphisms")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--limit", type=_budget, default=1000)
    a.add_argument("--out")
    a.set_defaults(func=cmd_aut)

    rg = sub.add_parser("rigid", help="exit 0 iff the structure is rigid")
    rg.add_argument("--in", dest="input", required=True)
    rg.add_argument("--out")
    rg.set_defaults(func=cmd_rigid)

    i = sub.add_parser("iso", help="exit 0 iff the structures are isomorphic")
    i.add_argument("--a", required=True)
    i.add_argument("--b", required=True)
    i.add_argument("--out")
    i.set_defaults(func=cmd_iso)

    c = sub.add_parser("census", help="pairwise isomorphism over index sets")
    c.add_argument("--family", required=True)
    c.add_argument("--zs", required=True, help="JSON list of index sets")
    c.add_argument("--creq", type=int, default=None, help="robustness threshold (default: c)")
    c.add_argument("--out")
    c.set_defaults(func=cmd_census)

    vp = sub.add_parser("verify-paper", help="run the whole verification pipeline")
    vp.add_argument("--params", help="parameter JSON (default: bundled P0)")
    vp.add_argument("--stage", action="append", choices=STAGES, help="run only this stage (repeatable)")
    vp.add_argument("--rounds", type=int, default=2)
    vp.add_argument("--parallel", action="store_true", help="run game cells in worker processes")
    vp.add_argument("--budget", type=_budget, default=None, help="node budget per game")
    vp.add_argument("--regen-fixtures", nargs="?", const=DEFAULT_FIXTURE, default=None, metavar="PATH",
                    help=f"write the verdict summary fixture (default {DEFAULT_FIXTURE})")
    vp.add_argument("--out")
    vp.set_defaults(func=cmd_verify_paper)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        if getattr(args, "budget", None) is None and args.command in ("ef", "verify-paper"):
            args.budget = default_budget()
        return args.func(args)
    except UsageError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return USAGE
    except BudgetExceeded as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
