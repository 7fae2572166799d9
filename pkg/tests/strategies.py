"""Random structures for property tests and solver cross-checks."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from backforth.core import Structure, make_structure


def random_structure(rng: random.Random, size: int, rel_count: int, density: float = 0.4, name: str = "R") -> Structure:
    ids = list(range(size))
    P = {x for x in ids if rng.random() < 0.5}
    Q = set(ids) - P
    rels = [[(q, p) for q in sorted(Q) for p in sorted(P) if rng.random() < density] for _ in range(rel_count)]
    return make_structure(rel_count, size, P, Q, rels, name=name)


def perturbed_copy(rng: random.Random, S: Structure, flips: int) -> Structure:
    """A relabelled copy of S with ``flips`` relation bits toggled."""
    perm = list(S.domain)
    rng.shuffle(perm)
    rels = [set((perm[q], perm[p]) for q, p in rel) for rel in S.rels]
    Q = sorted(perm[q] for q in S.Q)
    P = sorted(perm[p] for p in S.P)
    for _ in range(flips):
        if not (P and Q):
            break
        pair = (rng.choice(Q), rng.choice(P))
        rels[rng.randrange(S.rel_count)] ^= {pair}
    return make_structure(S.rel_count, S.domain_size, P, Q, rels, name="T")


def random_pair(rng: random.Random, max_size: int, rel_count: int | None = None):
    k = rel_count or rng.randint(1, 3)
    S = random_structure(rng, rng.randint(1, max_size), k, rng.choice([0.2, 0.5, 0.8]), name="S")
    roll = rng.random()
    if roll < 0.4:
        T = perturbed_copy(rng, S, 0)
    elif roll < 0.8:
        T = perturbed_copy(rng, S, rng.randint(1, 2))
    else:
        T = random_structure(rng, rng.randint(1, max_size), k, rng.choice([0.2, 0.5, 0.8]), name="T")
    return S, T


@st.composite
def structures(draw, max_size: int = 10, max_rels: int = 3):
    size = draw(st.integers(0, max_size))
    rel_count = draw(st.integers(1, max_rels))
    kinds = draw(st.lists(st.booleans(), min_size=size, max_size=size))
    P = {x for x, is_p in enumerate(kinds) if is_p}
    Q = set(range(size)) - P
    pairs = [(q, p) for q in sorted(Q) for p in sorted(P)]
    rels = [draw(st.sets(st.sampled_from(pairs))) if pairs else set() for _ in range(rel_count)]
    name = draw(st.text(alphabet="abcXYZ_|019", min_size=1, max_size=6))
    return make_structure(rel_count, size, P, Q, rels, name=name)
