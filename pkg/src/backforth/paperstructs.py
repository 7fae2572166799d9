"""Structures built from a good sequence, and robust index sets.

Id layout: ``b_i`` is id ``i`` for ``i < N``, then ``c_alpha`` for the included
ordinary indices in ascending order, then ``c_omega`` last when present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import Structure, StructureError, Vocabulary, from_document, reduct, to_document
from .families import (
    CHECK_GENERAL,
    CHECK_TRACES,
    GoodSequence,
    VerifyReport,
    copy_index,
    verify_good_sequence,
)

OMEGA = "omega"


class SampleError(RuntimeError):
    def __init__(self, message: str, report: VerifyReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class IndexSet:
    ordinaries: frozenset
    include_omega: bool = False

    @classmethod
    def of(cls, ordinaries: Iterable[int], include_omega: bool = False) -> "IndexSet":
        return cls(frozenset(int(a) for a in ordinaries), bool(include_omega))

    def check(self, G: GoodSequence) -> None:
        missing = sorted(self.ordinaries - set(G.alphas))
        if missing:
            raise StructureError(f"index set mentions unknown ordinaries {missing[:5]}")

    def with_omega(self, flag: bool = True) -> "IndexSet":
        return IndexSet(self.ordinaries, flag)

    def to_document(self) -> dict:
        return {"ordinaries": sorted(self.ordinaries), "includeOmega": self.include_omega}

    @classmethod
    def from_document(cls, doc: Mapping) -> "IndexSet":
        try:
            return cls.of(doc["ordinaries"], doc.get("includeOmega", False))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed index set: {exc}") from None


@dataclass(frozen=True)
class BuiltStructure:
    structure: Structure
    layout: tuple  # per id: ("b", i) | ("c", alpha) | ("c", OMEGA)

    def __post_init__(self):
        S = self.structure
        if len(self.layout) != S.domain_size:
            raise StructureError("layout length differs from the domain size")
        for x, (kind, _) in enumerate(self.layout):
            if (kind == "b") != (x in S.Q):
                raise StructureError(f"id {x}: b-elements must be exactly the Q-elements")
        index = {role: x for x, role in enumerate(self.layout)}
        object.__setattr__(self, "_index", index)

    @property
    def name(self) -> str:
        return self.structure.name

    def role(self, x: int) -> tuple:
        return self.layout[x]

    def b(self, i: int) -> int:
        return self._index["b", i]

    def c(self, alpha) -> int:
        return self._index["c", alpha]

    def has(self, role: tuple) -> bool:
        return role in self._index

    @property
    def omega(self) -> int | None:
        return self._index.get(("c", OMEGA))

    def b_ids(self) -> list:
        return [x for x, (k, _) in enumerate(self.layout) if k == "b"]

    def ordinary_ids(self) -> list:
        return [x for x, (k, a) in enumerate(self.layout) if k == "c" and a != OMEGA]

    def alphas(self) -> list:
        return [a for k, a in self.layout if k == "c" and a != OMEGA]

    def reduct(self, m: int) -> "BuiltStructure":
        return BuiltStructure(reduct(self.structure, m), self.layout)

    def to_document(self) -> dict:
        doc = to_document(self.structure)
        doc["layout"] = {str(x): f"{k}:{a}" for x, (k, a) in enumerate(self.layout)}
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_document(), separators=(",", ":"))

    @classmethod
    def from_document(cls, doc: Mapping) -> "BuiltStructure":
        S = from_document({k: v for k, v in doc.items() if k != "layout"})
        raw = doc.get("layout")
        if not isinstance(raw, Mapping):
            raise StructureError("$.layout: expected an object")
        layout = []
        for x in range(S.domain_size):
            tag = raw.get(str(x))
            if not isinstance(tag, str) or ":" not in tag:
                raise StructureError(f"$.layout.{x}: expected 'b:<i>', 'c:<alpha>' or 'c:omega'")
            kind, val = tag.split(":", 1)
            if kind not in ("b", "c"):
                raise StructureError(f"$.layout.{x}: unknown role {kind!r}")
            layout.append((kind, OMEGA if val == OMEGA else int(val)))
        return cls(S, tuple(layout))


def load_structure(doc: Mapping) -> Structure:
    """Accept either a plain structure document or one carrying a layout."""
    return from_document({k: v for k, v in doc.items() if k != "layout"})


def _assemble(G: GoodSequence, alphas: Iterable[int], with_omega: bool, name: str) -> BuiltStructure:
    p = G.params
    N, W = p.N, p.W
    alphas = sorted(alphas)
    layout = [("b", i) for i in range(N)] + [("c", a) for a in alphas]
    if with_omega:
        layout.append(("c", OMEGA))
    rels = [set() for _ in range(W + 1)]
    for offset, a in enumerate(alphas):
        cid = N + offset
        for n in range(G.residue(a) + 1):
            rels[n].update((i, cid) for i in G.rows[a, n])
    if with_omega:
        cid = N + len(alphas)
        for n in range(W + 1):
            rels[n].update((i, cid) for i in G.omega[n])
    size = len(layout)
    S = Structure(
        name=name,
        vocab=Vocabulary(W + 1),
        domain_size=size,
        P=frozenset(range(N, size)),
        Q=frozenset(range(N)),
        rels=tuple(frozenset(r) for r in rels),
    )
    return BuiltStructure(S, tuple(layout))


def build_N2(G: GoodSequence) -> BuiltStructure:
    return _assemble(G, G.alphas, True, "N2")


def build_N1(G: GoodSequence) -> BuiltStructure:
    return _assemble(G, G.alphas, False, "N1")


def build_M1(G: GoodSequence, X: IndexSet) -> BuiltStructure:
    X.check(G)
    return _assemble(G, X.ordinaries, False, "M1")


def build_M2(G: GoodSequence, X: IndexSet) -> BuiltStructure:
    X.check(G)
    return _assemble(G, X.ordinaries, True, "M2")


def build_MZ(G: GoodSequence, Z: IndexSet, name: str = "MZ") -> BuiltStructure:
    Z.check(G)
    return _assemble(G, Z.ordinaries, Z.include_omega, name)


def is_robust(Z: IndexSet, G: GoodSequence, c_req: int) -> bool:
    W = G.params.W
    counts = [0] * W
    for a in Z.ordinaries:
        counts[a % W] += 1
    return all(k >= c_req for k in counts)


def sample_X(G: GoodSequence, c_prime: int, seed: int = 0, retries: int | None = None) -> IndexSet:
    """Keep ``c_prime`` of the ``c`` contiguous copies of the index range.

    The kept copies must still realise every trace pattern ``c_prime`` times;
    only the X-dependent checks are re-run since the others pass to subsets.
    """
    p = G.params
    if not 1 <= c_prime <= p.c:
        raise SampleError(f"cPrime must be in 1..{p.c}, got {c_prime}")
    if c_prime == p.c:
        return IndexSet.of(G.alphas)
    retries = p.retries if retries is None else retries
    rng = np.random.default_rng([seed, c_prime])
    report = None
    for _ in range(retries + 1):
        copies = set(rng.choice(p.c, size=c_prime, replace=False).tolist())
        X = [a for a in G.alphas if copy_index(a, p) in copies]
        sub = G.restrict(X, c=c_prime)
        report = verify_good_sequence(sub, only=[CHECK_TRACES, CHECK_GENERAL])
        if report.passed:
            return IndexSet.of(X)
    raise SampleError(f"no sample passed after {retries + 1} tries: {', '.join(report.failing())}", report)
