"""Finite back-and-forth games and the relation-preserving map family.

Two independent deciders live here.  :func:`ef_decide` interns rank-k types
(``tp_k(a) = (atomic type of a, {tp_{k-1}(a e)})``) in one table shared by
both structures, so the game is won by Duplicator exactly when the two pinned
tuples get the same id.  :func:`naive_decide` is plain recursion over
positions and serves as the cross-check.

Spoiler's moves are restricted to uncovered elements.  Replaying a covered
element only costs Spoiler a round, so this does not change the winner.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import PartialMap, Structure, StructureError
from .families import CheckResult, VerifyReport
from .paperstructs import OMEGA, BuiltStructure

DUPLICATOR = "Duplicator"
SPOILER = "Spoiler"
DEFAULT_NODE_BUDGET = 5_000_000


class BudgetExceeded(RuntimeError):
    pass


class NoExtension(RuntimeError):
    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


def default_budget() -> int:
    raw = os.environ.get("BACKFORTH_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise BudgetExceeded(f"BACKFORTH_BUDGET must be an integer, got {raw!r}") from None
    return DEFAULT_NODE_BUDGET


# -- partial isomorphisms ------------------------------------------------------

def partial_iso_check(S: Structure, T: Structure, f: PartialMap) -> bool:
    for x, y in f.pairs:
        if not (0 <= x < S.domain_size and 0 <= y < T.domain_size):
            raise StructureError(f"pair ({x}, {y}) is out of range")
    if S.rel_count != T.rel_count:
        return False
    pairs = f.sorted_pairs()
    for x, y in pairs:
        if S.is_p(x) != T.is_p(y):
            return False
    for (x1, y1), (x2, y2) in itertools.combinations(pairs, 2):
        if S.mask(x1, x2) != T.mask(y1, y2):
            return False
    return True


# -- game configuration and results ------------------------------------------

@dataclass(frozen=True)
class GameConfig:
    rounds: int
    pins: PartialMap = PartialMap()

    def __post_init__(self):
        if not isinstance(self.rounds, int) or self.rounds < 0:
            raise ValueError(f"rounds must be a natural number, got {self.rounds!r}")


@dataclass
class GameResult:
    winner: str
    rounds: int
    certificate: object
    stats: dict = field(default_factory=dict)

    @property
    def duplicator_wins(self) -> bool:
        return self.winner == DUPLICATOR

    def to_document(self) -> dict:
        if self.winner == DUPLICATOR:
            cert = _dup_doc(self.certificate)
        else:
            cert = _spo_doc(self.certificate)
        return {"winner": self.winner, "rounds": self.rounds, "stats": self.stats, "certificate": cert}


def _dup_doc(strategy: dict) -> list:
    return [
        {"side": side, "element": e, "response": resp, "next": _dup_doc(sub)}
        for (side, e), (resp, sub) in sorted(strategy.items())
    ]


def _spo_doc(tree) -> dict | None:
    if tree is None:
        return None
    if tree.get("challenge") is None:
        return {"challenge": None}
    side, e = tree["challenge"]
    return {
        "challenge": {"side": side, "element": e},
        "replies": {str(f): _spo_doc(sub) for f, sub in sorted(tree["replies"].items())},
    }


# -- exact decider -------------------------------------------------------------

class _Types:
    """Shared intern table for atomic and rank-k types over both structures."""

    def __init__(self, budget: int):
        self.table: dict = {}
        self.budget = budget
        self.nodes = 0

    def intern(self, key) -> int:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"search exceeded the node budget of {self.budget}")
        got = self.table.get(key)
        if got is None:
            got = self.table[key] = len(self.table)
        return got

    def extend_atp(self, S: Structure, tup: tuple, atp: int, e: int) -> int:
        info = tuple(-1 if a == e else S.mask(a, e) for a in tup)
        return self.intern(("a", atp, S.is_p(e), info))

    def atp_of(self, S: Structure, tup: tuple) -> int:
        atp = self.intern(("a",))
        for i, e in enumerate(tup):
            atp = self.extend_atp(S, tup[:i], atp, e)
        return atp

    def rank(self, S: Structure, tup: tuple, atp: int, k: int, memo: dict) -> int:
        if k == 0:
            return atp
        key = (tup, k)
        hit = memo.get(key)
        if hit is not None:
            return hit
        covered = set(tup)
        kids = frozenset(
            self.rank(S, tup + (e,), self.extend_atp(S, tup, atp, e), k - 1, memo)
            for e in S.domain if e not in covered
        )
        out = self.intern(("t", atp, kids))
        memo[key] = out
        return out


class _Game:
    def __init__(self, S: Structure, T: Structure, budget: int):
        self.S, self.T = S, T
        self.types = _Types(budget)
        self.memo = {"S": {}, "T": {}}

    def struct(self, side: str) -> Structure:
        return self.S if side == "S" else self.T

    def rank(self, side: str, tup: tuple, k: int) -> int:
        S = self.struct(side)
        return self.types.rank(S, tup, self.types.atp_of(S, tup), k, self.memo[side])

    def child_ranks(self, side: str, tup: tuple, k: int) -> dict:
        S = self.struct(side)
        atp = self.types.atp_of(S, tup)
        covered = set(tup)
        return {
            e: self.types.rank(S, tup + (e,), self.types.extend_atp(S, tup, atp, e), k, self.memo[side])
            for e in S.domain if e not in covered
        }

    def duplicator_strategy(self, a: tuple, b: tuple, k: int) -> dict:
        if k == 0:
            return {}
        kids_a = self.child_ranks("S", a, k - 1)
        kids_b = self.child_ranks("T", b, k - 1)
        by_type_b: dict = {}
        for f, t in kids_b.items():
            by_type_b.setdefault(t, f)
        by_type_a: dict = {}
        for e, t in kids_a.items():
            by_type_a.setdefault(t, e)
        out = {}
        for e, t in kids_a.items():
            f = by_type_b[t]
            out["S", e] = (f, self.duplicator_strategy(a + (e,), b + (f,), k - 1))
        for f, t in kids_b.items():
            e = by_type_a[t]
            out["T", f] = (e, self.duplicator_strategy(a + (e,), b + (f,), k - 1))
        return out

    def spoiler_tree(self, a: tuple, b: tuple, k: int) -> dict:
        """Winning challenge tree when tp_k(a) != tp_k(b) but atomic types agree."""
        kids_a = self.child_ranks("S", a, k - 1)
        kids_b = self.child_ranks("T", b, k - 1)
        types_b, types_a = set(kids_b.values()), set(kids_a.values())
        for side, own, other_types in (("S", kids_a, types_b), ("T", kids_b, types_a)):
            for e, t in own.items():
                if t in other_types:
                    continue
                replies = {}
                others = kids_b if side == "S" else kids_a
                for f in others:
                    na, nb = (a + (e,), b + (f,)) if side == "S" else (a + (f,), b + (e,))
                    if self.types.atp_of(self.S, na) != self.types.atp_of(self.T, nb):
                        replies[f] = None
                    else:
                        replies[f] = self.spoiler_tree(na, nb, k - 1)
                return {"challenge": (side, e), "replies": replies}
        raise AssertionError("no distinguishing challenge although types differ")


def _pinned_tuples(cfg: GameConfig) -> tuple:
    pairs = cfg.pins.sorted_pairs()
    return tuple(x for x, _ in pairs), tuple(y for _, y in pairs)


def _check_pins(S: Structure, T: Structure, pins: PartialMap) -> None:
    for x, y in pins.pairs:
        if not (0 <= x < S.domain_size and 0 <= y < T.domain_size):
            raise StructureError(f"pin {x}:{y} is out of range")


def ef_decide(S: Structure, T: Structure, cfg: GameConfig, budget: int | None = None,
              certificate: bool = True) -> GameResult:
    """Exact winner of the ``cfg.rounds``-round game started at ``cfg.pins``."""
    _check_pins(S, T, cfg.pins)
    budget = default_budget() if budget is None else budget
    if S.rel_count != T.rel_count:
        raise StructureError("structures have different vocabularies")
    game = _Game(S, T, budget)
    a, b = _pinned_tuples(cfg)
    if game.types.atp_of(S, a) != game.types.atp_of(T, b):
        return GameResult(SPOILER, cfg.rounds, {"challenge": None}, {"nodes": game.types.nodes, "types": len(game.types.table)})
    same = game.rank("S", a, cfg.rounds) == game.rank("T", b, cfg.rounds)
    cert = None
    if certificate:
        cert = game.duplicator_strategy(a, b, cfg.rounds) if same else game.spoiler_tree(a, b, cfg.rounds)
    stats = {"nodes": game.types.nodes, "types": len(game.types.table)}
    return GameResult(DUPLICATOR if same else SPOILER, cfg.rounds, cert, stats)


def naive_decide(S: Structure, T: Structure, cfg: GameConfig) -> str:
    """Reference decider: direct recursion over positions, no memo, no types."""

    def wins(f: PartialMap, k: int) -> bool:
        if not partial_iso_check(S, T, f):
            return False
        if k == 0:
            return True
        for e in S.domain:
            if f.in_domain(e):
                continue
            if not any(wins(f.extend(e, y), k - 1) for y in T.domain if not f.in_range(y)):
                return False
        for y in T.domain:
            if f.in_range(y):
                continue
            if not any(wins(f.extend(e, y), k - 1) for e in S.domain if not f.in_domain(e)):
                return False
        return True

    return DUPLICATOR if wins(cfg.pins, cfg.rounds) else SPOILER


def ef_certificate_check(S: Structure, T: Structure, cfg: GameConfig, result: GameResult) -> bool:
    """Replay a certificate; True iff it wins for the claimed player."""
    if result.rounds != cfg.rounds:
        return False
    if result.winner == DUPLICATOR:
        return _check_dup(S, T, cfg.pins, cfg.rounds, result.certificate)
    if result.winner == SPOILER:
        return _check_spo(S, T, cfg.pins, cfg.rounds, result.certificate)
    raise ValueError(f"unknown winner {result.winner!r}")


def _check_dup(S, T, f: PartialMap, k: int, strategy) -> bool:
    if not partial_iso_check(S, T, f):
        return False
    if k == 0:
        return True
    if not isinstance(strategy, dict):
        raise ValueError("malformed Duplicator certificate")
    for side, dom, covered in (("S", S.domain, f.in_domain), ("T", T.domain, f.in_range)):
        for e in dom:
            if covered(e):
                continue
            move = strategy.get((side, e))
            if move is None:
                return False
            resp, sub = move
            if side == "S":
                if not 0 <= resp < T.domain_size or f.in_range(resp):
                    return False
                nxt = f.extend(e, resp)
            else:
                if not 0 <= resp < S.domain_size or f.in_domain(resp):
                    return False
                nxt = f.extend(resp, e)
            if not _check_dup(S, T, nxt, k - 1, sub):
                return False
    return True


def _check_spo(S, T, f: PartialMap, k: int, tree) -> bool:
    if not isinstance(tree, dict) or "challenge" not in tree:
        raise ValueError("malformed Spoiler certificate")
    iso = partial_iso_check(S, T, f)
    if tree["challenge"] is None:
        return not iso
    if not iso or k == 0:
        return False
    side, e = tree["challenge"]
    replies = tree.get("replies", {})
    if side == "S":
        if not 0 <= e < S.domain_size or f.in_domain(e):
            return False
        options = [y for y in T.domain if not f.in_range(y)]
    else:
        if not 0 <= e < T.domain_size or f.in_range(e):
            return False
        options = [x for x in S.domain if not f.in_domain(x)]
    for r in options:
        if r not in replies:
            return False
        nxt = f.extend(e, r) if side == "S" else f.extend(r, e)
        sub = replies[r]
        if sub is None:
            if partial_iso_check(S, T, nxt):
                return False
        elif not _check_spo(S, T, nxt, k - 1, sub):
            return False
    return True


# -- the proof family ------------------------------------------------------------

@dataclass(frozen=True)
class Variant:
    """``M1N1``, or ``N1N2`` with a residue ``m`` and a pinned source index.

    ``exempt_alpha`` names the ordinary index freed from the residue
    congruence; by default it is the pinned source.
    """

    kind: str
    m: int | None = None
    pin_alpha: int | None = None
    exempt_alpha: int | None = None

    @classmethod
    def m1n1(cls) -> "Variant":
        return cls("M1N1")

    @classmethod
    def n1n2(cls, m: int, pin_alpha: int | None = None, exempt_alpha: int | None = None) -> "Variant":
        pin = m if pin_alpha is None else pin_alpha
        return cls("N1N2", m, pin, pin if exempt_alpha is None else exempt_alpha)

    def __post_init__(self):
        if self.kind not in ("M1N1", "N1N2"):
            raise ValueError(f"unknown variant {self.kind!r}")
        if self.kind == "N1N2" and (self.m is None or self.pin_alpha is None):
            raise ValueError("variant N1N2 needs a residue and a pinned source")

    def label(self) -> str:
        return "M1N1" if self.kind == "M1N1" else f"N1N2({self.m})"


@dataclass(frozen=True)
class ProofContext:
    src: BuiltStructure
    dst: BuiltStructure
    W: int
    variant: Variant

    @classmethod
    def m1n1(cls, M1: BuiltStructure, N1: BuiltStructure, W: int) -> "ProofContext":
        return cls(M1, N1, W, Variant.m1n1())

    @classmethod
    def n1n2(cls, N1: BuiltStructure, N2: BuiltStructure, W: int, m: int, **kw) -> "ProofContext":
        if N2.omega is None:
            raise StructureError("N1N2 variant needs the omega element on the target side")
        variant = Variant.n1n2(m, **kw)
        if variant.pin_alpha % W != m:
            raise StructureError(f"pinned index {variant.pin_alpha} does not have residue {m}")
        return cls(N1.reduct(m), N2.reduct(m), W, variant)

    def pins(self) -> PartialMap:
        if self.variant.kind == "M1N1":
            return PartialMap()
        return PartialMap.of({self.src.c(self.variant.pin_alpha): self.dst.omega})

    def residue(self, built: BuiltStructure, x: int):
        kind, a = built.role(x)
        if kind != "c" or a == OMEGA:
            return None
        return a % self.W


def _check_variant(ctx: ProofContext, variant: Variant | None) -> Variant:
    if variant is not None and variant != ctx.variant:
        raise StructureError(f"variant {variant.label()} does not match the context ({ctx.variant.label()})")
    return ctx.variant


def proof_family_contains(ctx: ProofContext, f: PartialMap, variant: Variant | None = None) -> bool:
    variant = _check_variant(ctx, variant)
    S, T = ctx.src.structure, ctx.dst.structure
    if not partial_iso_check(S, T, f):
        return False
    exempt = None
    if variant.kind == "N1N2":
        pin_src = ctx.src.c(variant.pin_alpha)
        if f.get(pin_src) != ctx.dst.omega:
            return False
        exempt = ctx.src.c(variant.exempt_alpha) if ctx.src.has(("c", variant.exempt_alpha)) else None
    for x, y in f.pairs:
        if x == exempt:
            continue
        rx, ry = ctx.residue(ctx.src, x), ctx.residue(ctx.dst, y)
        if rx is not None and ry is not None and rx != ry:
            return False
    return True


def proof_extend(ctx: ProofContext, f: PartialMap, challenge: tuple, variant: Variant | None = None) -> PartialMap:
    """Cover one challenge while staying in the family.

    Prefers the response with the same label (b_i to b_i, c_alpha to c_alpha)
    and otherwise takes the smallest valid id.
    """
    variant = _check_variant(ctx, variant)
    side, e = challenge
    if side not in ("S", "T"):
        raise ValueError(f"side must be 'S' or 'T', got {side!r}")
    here, there = (ctx.src, ctx.dst) if side == "S" else (ctx.dst, ctx.src)
    if not 0 <= e < here.structure.domain_size:
        raise StructureError(f"challenge {e} is out of range")
    covered_here = f.in_domain if side == "S" else f.in_range
    covered_there = f.in_range if side == "S" else f.in_domain
    if covered_here(e):
        raise ValueError(f"challenge {side}:{e} is already covered")
    placed = [(x, y) if side == "S" else (y, x) for x, y in f.pairs]  # (here, there)
    Sh, St = here.structure, there.structure
    want_p = Sh.is_p(e)
    res_e = ctx.residue(here, e)
    role = here.role(e)
    preferred = [there._index[role]] if there.has(role) else []
    for y in itertools.chain(preferred, St.domain):
        if covered_there(y) or St.is_p(y) != want_p:
            continue
        if res_e is not None:
            res_y = ctx.residue(there, y)
            if res_y is not None and res_y != res_e:
                continue
        if all(Sh.mask(x, e) == St.mask(x2, y) for x, x2 in placed):
            return f.extend(e, y) if side == "S" else f.extend(y, e)
    trace = {str(x2): Sh.mask(x, e) for x, x2 in placed if Sh.mask(x, e) or Sh.is_p(x) != want_p}
    raise NoExtension(
        f"no response to {side}:{e} ({role[0]}_{role[1]}) realises the required trace",
        {"challenge": [side, e], "role": f"{role[0]}:{role[1]}", "position": f.sorted_pairs(), "trace": trace},
    )


def verify_back_and_forth(ctx: ProofContext, variant: Variant | None = None, rounds: int = 2,
                          budget: int = 2_000_000, seed: int = 0) -> VerifyReport:
    """Walk every position reachable from the pins and try every challenge.

    When the number of extension attempts would exceed ``budget`` the
    positions explored at each level are a seeded uniform sample.
    """
    variant = _check_variant(ctx, variant)
    S, T = ctx.src.structure, ctx.dst.structure
    name = f"back-and-forth {variant.label()} r={rounds}"
    start = ctx.pins()
    if not proof_family_contains(ctx, start):
        return VerifyReport([CheckResult(name, False, "exhaustive", {"reason": "pins are not in the family"})])
    width = S.domain_size + T.domain_size
    rng = np.random.default_rng([seed, rounds, width])
    frontier = [start]
    attempts = 0
    positions = 0
    mode = "exhaustive"
    failure = None
    for level in range(rounds):
        per_level = budget // max(1, rounds)
        if len(frontier) * width > per_level:
            keep = max(1, per_level // width)
            idx = sorted(rng.choice(len(frontier), size=keep, replace=False).tolist())
            frontier = [frontier[i] for i in idx]
            mode = f"sampled({keep} positions/level)"
        seen = set()
        nxt = []
        for f in frontier:
            positions += 1
            for side, dom, covered in (("S", S.domain, f.in_domain), ("T", T.domain, f.in_range)):
                for e in dom:
                    if covered(e):
                        continue
                    attempts += 1
                    try:
                        g = proof_extend(ctx, f, (side, e))
                    except NoExtension as exc:
                        if failure is None:
                            failure = exc.detail | {"level": level}
                        continue
                    if level + 1 < rounds and g.pairs not in seen:
                        seen.add(g.pairs)
                        nxt.append(g)
        frontier = nxt
    detail = {"positions": positions, "extensions": attempts}
    if failure:
        detail["counterexample"] = failure
    return VerifyReport([CheckResult(name, failure is None, mode, detail)])
