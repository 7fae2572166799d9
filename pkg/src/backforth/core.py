"""Finite relational structures over the vocabulary {P, Q, R_0..R_{k-1}}.

Elements are the dense ids ``0..domain_size-1``.  ``P`` and ``Q`` partition the
domain and every binary relation lives inside ``Q x P``.  Structures are
immutable; every constructor path goes through :func:`make_structure`
validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class StructureError(ValueError):
    """Raised for invalid structures, partial maps, or malformed documents."""


@dataclass(frozen=True)
class Vocabulary:
    rel_count: int

    def __post_init__(self):
        if not isinstance(self.rel_count, int) or self.rel_count < 1:
            raise StructureError(f"relCount must be >= 1, got {self.rel_count!r}")


@dataclass(frozen=True)
class Structure:
    """A validated finite {P, Q, R_n}-structure.

    ``name`` is metadata only and does not take part in equality; use
    :func:`same_fields` when the name matters too.
    """

    name: str = field(compare=False)
    vocab: Vocabulary
    domain_size: int
    P: frozenset
    Q: frozenset
    rels: tuple  # tuple of frozensets of (q, p) pairs

    def __post_init__(self):
        n = self.domain_size
        if not isinstance(n, int) or n < 0:
            raise StructureError(f"domainSize must be a natural number, got {n!r}")
        for label, ids in (("P", self.P), ("Q", self.Q)):
            bad = [x for x in ids if not isinstance(x, int) or not 0 <= x < n]
            if bad:
                raise StructureError(f"{label} contains out-of-range ids {sorted(bad)[:5]}")
        overlap = self.P & self.Q
        if overlap:
            raise StructureError(f"P and Q overlap on {sorted(overlap)[:5]}")
        if len(self.P) + len(self.Q) != n:
            missing = sorted(set(range(n)) - self.P - self.Q)
            raise StructureError(f"P and Q do not cover the domain; missing {missing[:5]}")
        if len(self.rels) != self.vocab.rel_count:
            raise StructureError(
                f"expected {self.vocab.rel_count} relations, got {len(self.rels)}"
            )
        for idx, rel in enumerate(self.rels):
            for pair in rel:
                q, p = pair
                if q not in self.Q or p not in self.P:
                    raise StructureError(f"pair {tuple(pair)} in R_{idx} is not in Q x P")
        # (q, p) -> bitmask of relation indices; the workhorse for every search
        masks: dict = {}
        for idx, rel in enumerate(self.rels):
            bit = 1 << idx
            for q, p in rel:
                masks[(q, p)] = masks.get((q, p), 0) | bit
        object.__setattr__(self, "_masks", masks)

    @property
    def rel_count(self) -> int:
        return self.vocab.rel_count

    @property
    def domain(self) -> range:
        return range(self.domain_size)

    def is_p(self, x: int) -> bool:
        return x in self.P

    def mask(self, x: int, y: int) -> int:
        """Relation bitmask of the unordered element pair, oriented Q -> P."""
        if x in self.Q:
            return self._masks.get((x, y), 0)
        return self._masks.get((y, x), 0)

    def pair_masks(self) -> Mapping:
        return self._masks

    def neighbors(self) -> list:
        """Per element: dict partner -> relation mask."""
        out = [dict() for _ in range(self.domain_size)]
        for (q, p), m in self._masks.items():
            out[q][p] = m
            out[p][q] = m
        return out


def make_structure(
    vocab: Vocabulary | int,
    domain_size: int,
    P: Iterable[int],
    Q: Iterable[int],
    rels: Sequence[Iterable],
    name: str = "S",
) -> Structure:
    if isinstance(vocab, int):
        vocab = Vocabulary(vocab)
    rel_sets = tuple(frozenset((int(q), int(p)) for q, p in rel) for rel in rels)
    return Structure(
        name=name,
        vocab=vocab,
        domain_size=domain_size,
        P=frozenset(P),
        Q=frozenset(Q),
        rels=rel_sets,
    )


def same_fields(a: Structure, b: Structure) -> bool:
    return a == b and a.name == b.name


def reduct(S: Structure, m: int) -> Structure:
    """Keep relations R_0..R_m."""
    if not 0 <= m < S.rel_count:
        raise StructureError(f"reduct index {m} out of range for relCount {S.rel_count}")
    if m == S.rel_count - 1:
        return S
    return Structure(
        name=f"{S.name}|tau{m}",
        vocab=Vocabulary(m + 1),
        domain_size=S.domain_size,
        P=S.P,
        Q=S.Q,
        rels=S.rels[: m + 1],
    )


def restrict(S: Structure, keep: Iterable[int]) -> tuple[Structure, dict]:
    """Induced substructure on ``keep``; ids renumbered in ascending order.

    Returns the structure and the renumbering ``old id -> new id``.
    """
    keep = sorted(set(keep))
    bad = [x for x in keep if not 0 <= x < S.domain_size]
    if bad:
        raise StructureError(f"restrict: ids out of range {bad[:5]}")
    renum = {old: new for new, old in enumerate(keep)}
    rels = tuple(
        frozenset((renum[q], renum[p]) for q, p in rel if q in renum and p in renum)
        for rel in S.rels
    )
    sub = Structure(
        name=S.name if len(keep) == S.domain_size else f"{S.name}|restricted",
        vocab=S.vocab,
        domain_size=len(keep),
        P=frozenset(renum[x] for x in S.P if x in renum),
        Q=frozenset(renum[x] for x in S.Q if x in renum),
        rels=rels,
    )
    return sub, renum


@dataclass(frozen=True)
class PartialMap:
    """Injective finite function, stored as a set of (source, target) pairs."""

    pairs: frozenset = frozenset()

    def __post_init__(self):
        pairs = frozenset((int(a), int(b)) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        fwd = dict(pairs)
        if len(fwd) != len(pairs):
            raise StructureError("partial map is not functional")
        if len(set(fwd.values())) != len(fwd):
            raise StructureError("partial map is not injective")
        object.__setattr__(self, "_fwd", fwd)
        object.__setattr__(self, "_inv", {b: a for a, b in fwd.items()})

    @classmethod
    def of(cls, mapping: Mapping[int, int] | Iterable = ()) -> "PartialMap":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(frozenset(items))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def forward(self) -> dict:
        return dict(self._fwd)

    @property
    def inverse(self) -> dict:
        return dict(self._inv)

    def in_domain(self, x: int) -> bool:
        return x in self._fwd

    def in_range(self, y: int) -> bool:
        return y in self._inv

    def get(self, x: int):
        return self._fwd.get(x)

    def preimage(self, y: int):
        return self._inv.get(y)

    def extend(self, src: int, dst: int) -> "PartialMap":
        return PartialMap(self.pairs | {(src, dst)})

    def inverted(self) -> "PartialMap":
        return PartialMap(frozenset((b, a) for a, b in self.pairs))

    def sorted_pairs(self) -> list:
        return sorted(self.pairs)


# -- interchange format ------------------------------------------------------

def to_document(S: Structure) -> dict:
    return {
        "name": S.name,
        "relCount": S.rel_count,
        "domainSize": S.domain_size,
        "P": sorted(S.P),
        "Q": sorted(S.Q),
        "R": [[[q, p] for q, p in sorted(rel)] for rel in S.rels],
    }


def encode(S: Structure) -> str:
    return json.dumps(to_document(S), separators=(",", ":"))


def _expect(cond: bool, where: str, msg: str):
    if not cond:
        raise StructureError(f"{where}: {msg}")


def _int_list(value, where: str) -> list:
    _expect(isinstance(value, list), where, "expected a list of integers")
    for i, v in enumerate(value):
        _expect(isinstance(v, int) and not isinstance(v, bool), f"{where}[{i}]", "expected an integer")
    _expect(value == sorted(value), where, "integers must be ascending")
    return value


def from_document(doc, where: str = "$") -> Structure:
    _expect(isinstance(doc, dict), where, "expected an object")
    for key in ("name", "relCount", "domainSize", "P", "Q", "R"):
        _expect(key in doc, where, f"missing key {key!r}")
    _expect(isinstance(doc["name"], str), f"{where}.name", "expected a string")
    for key in ("relCount", "domainSize"):
        v = doc[key]
        _expect(isinstance(v, int) and not isinstance(v, bool), f"{where}.{key}", "expected an integer")
    P = _int_list(doc["P"], f"{where}.P")
    Q = _int_list(doc["Q"], f"{where}.Q")
    R = doc["R"]
    _expect(isinstance(R, list), f"{where}.R", "expected a list of relations")
    rels = []
    for i, rel in enumerate(R):
        _expect(isinstance(rel, list), f"{where}.R[{i}]", "expected a list of pairs")
        pairs = []
        for j, pair in enumerate(rel):
            loc = f"{where}.R[{i}][{j}]"
            _expect(
                isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, int) and not isinstance(v, bool) for v in pair),
                loc, "expected a pair [q, p]",
            )
            pairs.append(tuple(pair))
        _expect(pairs == sorted(pairs), f"{where}.R[{i}]", "pairs must be ascending")
        rels.append(pairs)
    try:
        return make_structure(Vocabulary(doc["relCount"]), doc["domainSize"], P, Q, rels, name=doc["name"])
    except StructureError as exc:
        raise StructureError(f"{where}: {exc}") from None


def decode(text: str) -> Structure:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_document(doc)
