"""Acceptance criteria A1-A7 at the stated tolerances.

Each test records a one-line verdict that is printed in the terminal summary
under "acceptance criteria".
"""

import json
import random
import time

from backforth.autiso import automorphisms, brute_automorphism_count, census, is_rigid, rigidity_lemmas
from backforth.cli import main
from backforth.core import PartialMap, decode, encode, reduct
from backforth.efgames import DUPLICATOR, GameConfig, ProofContext, ef_decide, naive_decide, verify_back_and_forth
from backforth.families import (
    CHECK_GENERAL,
    CHECK_INDEP,
    CHECK_INJECTIVE,
    CHECK_OMEGA,
    CHECK_TRACES,
    GoodSequence,
    SetFamily,
    combination_count,
    perfect_independent,
    verify_good_sequence,
    verify_independence,
)
from backforth.paperstructs import build_MZ, is_robust
from backforth.pipeline import census_sets, intermediate_sets

from strategies import random_pair, random_structure


def test_a1_family_correctness(tmp_path, criterion):
    out = tmp_path / "g.json"
    start = time.perf_counter()
    main(["gen", "--out", str(out), "--keep-failed"])
    G = GoodSequence.from_json(out.read_text())
    report = verify_good_sequence(G)
    elapsed = time.perf_counter() - start
    checks = {c.name: c for c in report.checks}
    modes_ok = all(checks[n].mode == "exhaustive" for n in (CHECK_INJECTIVE, CHECK_TRACES, CHECK_OMEGA))
    recorded = all(checks[n].mode for n in (CHECK_INDEP, CHECK_GENERAL))
    failing = report.failing()
    ok = report.passed and modes_ok and recorded and elapsed <= 60
    criterion("A1", ok, f"failing checks: {failing or 'none'}; {elapsed:.1f}s")
    assert len(checks) == 5
    assert modes_ok and recorded
    assert elapsed <= 60
    assert report.passed, f"failing checks {failing}: " + json.dumps(
        {n: checks[n].detail for n in failing}, default=str)[:800]


def test_a2_sampled_never_disagrees(criterion):
    rng = random.Random(2024)
    disagreements = 0
    tested = 0
    while tested < 100:
        base = rng.randint(2, 24)
        F = SetFamily.of(base, [{x for x in range(base) if rng.random() < rng.choice([0.3, 0.5, 0.7])}
                                for _ in range(rng.randint(1, 30))])
        d, s = rng.randint(1, 3), rng.randint(1, 3)
        if combination_count(len(F), d) > 10**5:
            continue
        tested += 1
        exact = verify_independence(F, d, s)
        sampled = verify_independence(F, d, s, budget=0, sample_size=10**5, seed=tested)
        assert exact.checks[0].mode == "exhaustive" and sampled.checks[0].mode.startswith("sampled")
        disagreements += exact.passed != sampled.passed
    exact_counts = True
    for m in range(1, 5):
        F = perfect_independent(m)
        base = set(range(F.base))
        for mask in range(1, 3**m):
            cell, k, digits = set(base), 0, mask
            for i in range(m):
                digit, digits = digits % 3, digits // 3
                if digit:
                    k += 1
                    cell &= F.sets[i] if digit == 1 else base - F.sets[i]
            exact_counts &= len(cell) == 2 ** (m - k)
    criterion("A2", disagreements == 0 and exact_counts, f"{disagreements} disagreements over 100 families")
    assert disagreements == 0
    assert exact_counts


def test_a3_games_and_back_and_forth(p0, criterion):
    W = p0.params.W
    problems = []
    slowest = 0.0
    for m in range(3):
        red = {k: reduct(getattr(p0, k).structure, m) for k in ("M1", "M2", "N1", "N2")}
        cells = [
            ("M1", "M2", PartialMap()),
            ("M1", "N1", PartialMap()),
            ("N1", "N2", PartialMap.of({p0.N1.c(m): p0.N2.omega})),
        ]
        for a, b, pins in cells:
            start = time.perf_counter()
            res = ef_decide(red[a], red[b], GameConfig(2, pins), certificate=False)
            secs = time.perf_counter() - start
            slowest = max(slowest, secs)
            if res.winner != DUPLICATOR or secs > 120:
                problems.append(f"{a}/{b} tau{m}: {res.winner} in {secs:.1f}s")
    contexts = [ProofContext.m1n1(p0.M1, p0.N1, W)] + [ProofContext.n1n2(p0.N1, p0.N2, W, m) for m in range(3)]
    for ctx in contexts:
        report = verify_back_and_forth(ctx, rounds=2)
        if not report.passed:
            problems.append(f"back-and-forth {ctx.variant.label()} failed")
            continue
        res = ef_decide(ctx.src.structure, ctx.dst.structure, GameConfig(2, ctx.pins()), certificate=False)
        if res.winner != DUPLICATOR:
            problems.append(f"implication broken for {ctx.variant.label()}")
    criterion("A3", not problems, "; ".join(problems) or f"9 games, slowest {slowest:.1f}s")
    assert not problems


def test_a4_rigidity(p0, criterion):
    targets = [("M2", p0.M2)]
    for i, Y in enumerate(intermediate_sets(p0.G, p0.X, 3, p0.params.seed)):
        assert p0.X.ordinaries < Y.ordinaries
        targets.append((f"Y{i}", build_MZ(p0.G, Y, name=f"Y{i}")))
    problems = []
    for label, B in targets:
        start = time.perf_counter()
        rigid = is_rigid(B.structure)
        secs = time.perf_counter() - start
        if secs > 60:
            problems.append(f"{label} search took {secs:.1f}s")
        if label == "M2" and not rigid:
            problems.append("M2 is not rigid")
        for c in rigidity_lemmas(B, p0.G).checks:
            if not c.passed:
                problems.append(f"{label} {c.name.split()[0]}")
    criterion("A4", not problems, "; ".join(problems) or "M2 rigid, lemmas hold on 4 structures")
    assert is_rigid(p0.M2.structure)
    assert not problems


def test_a5_census(p0, criterion):
    start = time.perf_counter()
    Zs = census_sets(p0.G, 5, p0.params.seed)
    assert len({Z.ordinaries for Z in Zs}) == 5
    assert len({len(Z.ordinaries) for Z in Zs}) == 1
    assert all(Z.include_omega and is_robust(Z, p0.G, p0.params.c) for Z in Zs)
    res = census(p0.G, Zs)
    secs = time.perf_counter() - start
    ok = res.off_diagonal_distinct and res.diagonal_isomorphic and secs <= 300
    criterion("A5", ok, f"{secs:.1f}s")
    assert ok


def test_a6_solver_cross_checks(criterion):
    rng = random.Random(66)
    ef_disagree = 0
    for _ in range(200):
        S, T = random_pair(rng, 12)
        cfg = GameConfig(rng.randint(0, 3))
        ef_disagree += ef_decide(S, T, cfg, certificate=False).winner != naive_decide(S, T, cfg)
    aut_disagree = 0
    for _ in range(200):
        S = random_structure(rng, rng.randint(1, 8), rng.randint(1, 3), rng.choice([0.1, 0.3, 0.6]))
        aut_disagree += automorphisms(S, 10**6).count != brute_automorphism_count(S)
    criterion("A6", ef_disagree == aut_disagree == 0, f"{ef_disagree} game and {aut_disagree} automorphism disagreements")
    assert ef_disagree == 0 and aut_disagree == 0


def test_a7_determinism_and_roundtrips(tmp_path, criterion):
    rng = random.Random(77)
    bad = 0
    for i in range(500):
        S = random_structure(rng, rng.randint(0, 14), rng.randint(1, 4), rng.random(), name=f"s{i}")
        again = decode(encode(S))
        bad += not (again == S and again.name == S.name and encode(again) == encode(S))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen", "--out", str(a), "--keep-failed"])
    main(["gen", "--out", str(b), "--keep-failed"])
    same = a.read_bytes() == b.read_bytes()
    criterion("A7", bad == 0 and same, f"{bad} round-trip failures; gen byte-identical: {same}")
    assert bad == 0 and same
