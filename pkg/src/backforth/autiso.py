"""Automorphism and isomorphism search, rigidity lemmas, and the census.

The engine is individualisation-refinement on the disjoint union of the two
structures.  Colour ids come from sorted signatures, so the same colour means
the same thing on both sides.  Every leaf map is verified explicitly, and
refinement only prunes.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .core import PartialMap, Structure, StructureError
from .efgames import partial_iso_check
from .families import CheckResult, GoodSequence, VerifyReport
from .paperstructs import BuiltStructure, IndexSet, build_MZ, is_robust

LIMIT_EXCEEDED = "limit-exceeded"


@dataclass
class AutReport:
    count: int | str
    witness: dict | None = None
    stats: dict = field(default_factory=dict)
    maps: list = field(default_factory=list)  # automorphisms found, in search order

    def to_document(self) -> dict:
        return {
            "automorphismCount": self.count,
            "nontrivialWitness": None if self.witness is None else {str(k): v for k, v in sorted(self.witness.items())},
            "searchStats": self.stats,
        }


class _Search:
    def __init__(self, S: Structure, T: Structure):
        self.S, self.T = S, T
        self.n = S.domain_size
        n = self.n
        self.adj = [list(d.items()) for d in S.neighbors()] + [
            [(u + n, m) for u, m in d.items()] for d in T.neighbors()
        ]
        self.stats = Counter()

    def initial(self) -> list:
        base = [int(self.S.is_p(x)) for x in self.S.domain] + [int(self.T.is_p(x)) for x in self.T.domain]
        return self.refine(base)

    def refine(self, colour: list) -> list:
        classes = len(set(colour))
        while True:
            self.stats["refinements"] += 1
            sigs = [
                (colour[v], tuple(sorted(Counter((m, colour[u]) for u, m in self.adj[v]).items())))
                for v in range(len(colour))
            ]
            ids = {s: i for i, s in enumerate(sorted(set(sigs)))}
            colour = [ids[s] for s in sigs]
            if len(ids) == classes:
                return colour
            classes = len(ids)

    def balanced(self, colour: list) -> bool:
        n = self.n
        return Counter(colour[:n]) == Counter(colour[n:])

    def leaves(self, colour: list):
        """Yield verified isomorphisms S -> T below this colouring."""
        self.stats["nodes"] += 1
        if not self.balanced(colour):
            self.stats["pruned"] += 1
            return
        n = self.n
        cells: dict = {}
        for v in range(n):
            cells.setdefault(colour[v], []).append(v)
        target = None
        for c, members in cells.items():
            if len(members) > 1 and (target is None or (len(members), c) < (len(cells[target]), target)):
                target = c
        if target is None:
            self.stats["leaves"] += 1
            where = {colour[u]: u - n for u in range(n, 2 * n)}
            f = {v: where[colour[v]] for v in range(n)}
            if self.verify(f):
                yield f
            else:
                self.stats["rejected"] += 1
            return
        v = cells[target][0]
        fresh = max(colour) + 1
        for u in range(n, 2 * n):
            if colour[u] != target:
                continue
            col = list(colour)
            col[v] = fresh
            col[u] = fresh
            yield from self.leaves(self.refine(col))

    def verify(self, f: dict) -> bool:
        S, T = self.S, self.T
        if any(S.is_p(x) != T.is_p(y) for x, y in f.items()):
            return False
        mapped = {(f[q], f[p]): m for (q, p), m in S.pair_masks().items()}
        return mapped == dict(T.pair_masks())


def automorphisms(S: Structure, limit: int = 1000) -> AutReport:
    """Count automorphisms exactly while the count stays within ``limit``."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    search = _Search(S, S)
    count = 0
    witness = None
    maps = []
    exceeded = False
    for f in search.leaves(search.initial()):
        count += 1
        if count > limit:
            exceeded = True
            break
        maps.append(f)
        if witness is None and any(k != v for k, v in f.items()):
            witness = f
    stats = dict(search.stats)
    return AutReport(LIMIT_EXCEEDED if exceeded else count, witness, stats, maps)


def is_rigid(S: Structure) -> bool:
    return automorphisms(S, 1).count == 1


def isomorphic(S: Structure, T: Structure) -> dict | None:
    if S.rel_count != T.rel_count or S.domain_size != T.domain_size or len(S.P) != len(T.P):
        return None
    if Counter(S.pair_masks().values()) != Counter(T.pair_masks().values()):
        return None
    search = _Search(S, T)
    return next(search.leaves(search.initial()), None)


# -- brute-force references -----------------------------------------------------

def _sorted_bijections(S: Structure, T: Structure):
    """All bijections S -> T that send P to P and Q to Q."""
    sp, sq = sorted(S.P), sorted(S.Q)
    if len(sp) != len(T.P) or len(sq) != len(T.Q):
        return
    for tp in itertools.permutations(sorted(T.P)):
        for tq in itertools.permutations(sorted(T.Q)):
            f = dict(zip(sp, tp))
            f.update(zip(sq, tq))
            yield f


def brute_automorphism_count(S: Structure) -> int:
    return sum(1 for f in _sorted_bijections(S, S) if _is_iso(S, S, f))


def brute_isomorphic(S: Structure, T: Structure) -> bool:
    if S.domain_size != T.domain_size:
        return False
    return any(_is_iso(S, T, f) for f in _sorted_bijections(S, T))


def _is_iso(S: Structure, T: Structure, f: dict) -> bool:
    return partial_iso_check(S, T, PartialMap.of(f))


# -- rigidity lemmas ----------------------------------------------------------------

def rigidity_lemmas(M: BuiltStructure, G: GoodSequence | None = None) -> VerifyReport:
    """Evaluate the three steps of the rigidity argument on ``M`` itself."""
    omega = M.omega
    if omega is None:
        raise StructureError(f"{M.name} has no omega element")
    S = M.structure
    b_ids = M.b_ids()
    c_ids = [x for x in S.P]
    active = {c: 0 for c in c_ids}
    for (q, p), m in S.pair_masks().items():
        active[p] |= m
    full = (1 << S.rel_count) - 1
    everywhere = sorted(c for c, m in active.items() if m == full)
    l1 = CheckResult("L1 omega unique", everywhere == [omega], "exhaustive",
                     {"fully_active": [f"{k}:{a}" for k, a in (M.role(c) for c in everywhere)]})

    by_sig: dict = {}
    clash = None
    for x in b_ids:
        sig = S.mask(x, omega)
        if sig in by_sig and clash is None:
            clash = {"b": [M.role(by_sig[sig])[1], M.role(x)[1]], "omega_mask": sig}
        by_sig.setdefault(sig, x)
    detail = {"pairs": len(b_ids) * (len(b_ids) - 1) // 2, "separated_classes": len({S.mask(x, omega) for x in b_ids})}
    if clash:
        detail["counterexample"] = clash
    l2 = CheckResult("L2 omega separates b", clash is None, "exhaustive", detail)

    traces: dict = {}
    dup = None
    for c in M.ordinary_ids():
        tr = frozenset(x for x in b_ids if S.mask(x, c) & 1)
        if tr in traces and dup is None:
            dup = {"c": [M.role(traces[tr])[1], M.role(c)[1]]}
        traces.setdefault(tr, c)
    l3 = CheckResult("L3 distinct R0 traces", dup is None, "exhaustive", dup or {"c": len(traces)})
    return VerifyReport([l1, l2, l3])


# -- census ------------------------------------------------------------------------------

@dataclass
class CensusResult:
    labels: list
    matrix: list  # bool verdicts
    witnesses: dict  # (i, j) -> isomorphism or refutation note

    @property
    def off_diagonal_distinct(self) -> bool:
        k = len(self.matrix)
        return all(not self.matrix[i][j] for i in range(k) for j in range(k) if i != j)

    @property
    def diagonal_isomorphic(self) -> bool:
        return all(self.matrix[i][i] for i in range(len(self.matrix)))

    def to_document(self) -> dict:
        return {
            "labels": self.labels,
            "matrix": self.matrix,
            "offDiagonalNonIsomorphic": self.off_diagonal_distinct,
            "diagonalIsomorphic": self.diagonal_isomorphic,
            "cells": {f"{i},{j}": w for (i, j), w in sorted(self.witnesses.items())},
        }


def census(G: GoodSequence, Zs: Sequence[IndexSet], c_req: int | None = None) -> CensusResult:
    c_req = G.params.c if c_req is None else c_req
    for i, Z in enumerate(Zs):
        if not Z.include_omega:
            raise StructureError(f"Z[{i}] must include omega")
        if not is_robust(Z, G, c_req):
            raise StructureError(f"Z[{i}] is not robust at cReq={c_req}")
    built = [build_MZ(G, Z, name=f"MZ{i}").structure for i, Z in enumerate(Zs)]
    k = len(built)
    matrix = [[False] * k for _ in range(k)]
    witnesses = {}
    for i in range(k):
        for j in range(i, k):
            f = isomorphic(built[i], built[j])
            verdict = f is not None
            matrix[i][j] = matrix[j][i] = verdict
            witnesses[i, j] = ({"isomorphism": {str(a): b for a, b in sorted(f.items())}} if verdict
                               else {"refutation": "exhaustive search found no isomorphism"})
    return CensusResult([f"Z{i}" for i in range(k)], matrix, witnesses)
