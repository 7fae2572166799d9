import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backforth.autiso import isomorphic
from backforth.core import PartialMap, StructureError, make_structure, reduct
from backforth.paperstructs import BuiltStructure
from backforth.efgames import (
    DUPLICATOR,
    SPOILER,
    BudgetExceeded,
    GameConfig,
    GameResult,
    NoExtension,
    ProofContext,
    Variant,
    default_budget,
    ef_certificate_check,
    ef_decide,
    naive_decide,
    partial_iso_check,
    proof_extend,
    proof_family_contains,
    verify_back_and_forth,
)

from strategies import perturbed_copy, random_pair, structures


def only_q(n):
    return make_structure(1, n, set(), range(n), [set()], name=f"Q{n}")


@pytest.fixture
def s_rigid():
    return make_structure(1, 3, {2}, {0, 1}, [{(0, 2)}], name="S_rigid")


# -- partial isomorphisms -------------------------------------------------------------

def test_partial_iso_examples(s_rigid):
    assert partial_iso_check(s_rigid, s_rigid, PartialMap())
    assert partial_iso_check(s_rigid, s_rigid, PartialMap.of({0: 0, 1: 1, 2: 2}))
    # b_0 is R_0-related to the P element, b_1 is not
    assert not partial_iso_check(s_rigid, s_rigid, PartialMap.of({0: 1, 2: 2}))
    assert not partial_iso_check(s_rigid, s_rigid, PartialMap.of({0: 2}))
    with pytest.raises(StructureError):
        partial_iso_check(s_rigid, s_rigid, PartialMap.of({0: 9}))


# -- the exact decider -------------------------------------------------------------------

@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_mirror_strategy(s_rigid, r):
    res = ef_decide(s_rigid, s_rigid, GameConfig(r))
    assert res.winner == DUPLICATOR
    assert ef_certificate_check(s_rigid, s_rigid, GameConfig(r), res)


def test_pigeonhole():
    S, T = only_q(2), only_q(3)
    assert ef_decide(S, T, GameConfig(2)).winner == DUPLICATOR
    res = ef_decide(S, T, GameConfig(3))
    assert res.winner == SPOILER
    assert ef_certificate_check(S, T, GameConfig(3), res)
    assert naive_decide(S, T, GameConfig(2)) == DUPLICATOR
    assert naive_decide(S, T, GameConfig(3)) == SPOILER


def test_bad_pins_lose_at_round_zero(s_rigid):
    cfg = GameConfig(2, PartialMap.of({0: 1, 2: 2}))
    res = ef_decide(s_rigid, s_rigid, cfg)
    assert res.winner == SPOILER and res.certificate == {"challenge": None}
    assert ef_certificate_check(s_rigid, s_rigid, cfg, res)


def test_missing_branch_invalidates_duplicator_certificate(s_rigid):
    cfg = GameConfig(2)
    res = ef_decide(s_rigid, s_rigid, cfg)
    pruned = dict(res.certificate)
    pruned.pop(("S", 1))
    assert not ef_certificate_check(s_rigid, s_rigid, cfg, GameResult(DUPLICATOR, 2, pruned))


def test_spoiler_leaf_must_be_a_real_violation():
    S, T = only_q(2), only_q(3)
    cfg = GameConfig(3)
    res = ef_decide(S, T, cfg)
    # claim a violation at a position that is still a partial isomorphism
    fake = {"challenge": ("T", 0), "replies": {0: None, 1: None}}
    assert not ef_certificate_check(S, T, cfg, GameResult(SPOILER, 3, fake))
    assert ef_certificate_check(S, T, cfg, res)
    with pytest.raises(ValueError):
        ef_certificate_check(S, T, cfg, GameResult(SPOILER, 3, "junk"))


def test_wrong_claimed_winner_fails(s_rigid):
    S, T = only_q(2), only_q(3)
    res = ef_decide(S, T, GameConfig(2))
    assert not ef_certificate_check(S, T, GameConfig(2), GameResult(SPOILER, 2, {"challenge": None}))
    assert ef_certificate_check(S, T, GameConfig(2), res)


def test_budget_is_enforced(monkeypatch):
    S, T = only_q(6), only_q(6)
    with pytest.raises(BudgetExceeded):
        ef_decide(S, T, GameConfig(4), budget=50)
    monkeypatch.setenv("BACKFORTH_BUDGET", "77")
    assert default_budget() == 77
    with pytest.raises(BudgetExceeded):
        ef_decide(S, T, GameConfig(4))


def test_document_shape(s_rigid):
    doc = ef_decide(s_rigid, s_rigid, GameConfig(1)).to_document()
    assert doc["winner"] == DUPLICATOR
    assert {(m["side"], m["element"]) for m in doc["certificate"]} == {("S", e) for e in range(3)} | {("T", e) for e in range(3)}


def test_memoized_matches_naive_on_random_pairs():
    rng = random.Random(11)
    for _ in range(60):
        S, T = random_pair(rng, 7)
        r = rng.randint(0, 3)
        cfg = GameConfig(r)
        res = ef_decide(S, T, cfg)
        assert res.winner == naive_decide(S, T, cfg)
        assert ef_certificate_check(S, T, cfg, res)


@given(structures(max_size=6), st.data())
@settings(max_examples=60, deadline=None)
def test_side_symmetry(S, data):
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    T = perturbed_copy(rng, S, data.draw(st.integers(0, 2)))
    r = data.draw(st.integers(0, 3))
    pins = PartialMap()
    if S.domain_size:
        x = data.draw(st.integers(0, S.domain_size - 1))
        y = data.draw(st.integers(0, T.domain_size - 1))
        pins = PartialMap.of({x: y})
    there = ef_decide(S, T, GameConfig(r, pins), certificate=False).winner
    back = ef_decide(T, S, GameConfig(r, pins.inverted()), certificate=False).winner
    assert there == back


@given(structures(max_size=6), st.data())
@settings(max_examples=40, deadline=None)
def test_monotone_in_rounds(S, data):
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    T = perturbed_copy(rng, S, 1)
    wins = [ef_decide(S, T, GameConfig(r), certificate=False).winner == DUPLICATOR for r in range(4)]
    for r in range(1, 4):
        if wins[r]:
            assert wins[r - 1]


@given(structures(max_size=5), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_isomorphic_implies_duplicator_at_full_length(S, seed):
    T = perturbed_copy(random.Random(seed), S, 0)
    assert isomorphic(S, T) is not None
    assert ef_decide(S, T, GameConfig(S.domain_size), certificate=False).winner == DUPLICATOR


def test_shrunken_structure_games_agree_with_naive(small):
    for m in range(small.params.W):
        cells = [
            (small.M1, small.M2, []),
            (small.M1, small.N1, []),
            (small.N1, small.N2, [(small.N1.c(m), small.N2.omega)]),
        ]
        for A, B, pins in cells:
            S, T = reduct(A.structure, m), reduct(B.structure, m)
            cfg = GameConfig(2, PartialMap.of(pins))
            res = ef_decide(S, T, cfg)
            assert res.winner == naive_decide(S, T, cfg)
            assert ef_certificate_check(S, T, cfg, res)


# -- the proof family ----------------------------------------------------------------------------

def test_family_membership_examples(p0):
    ctx = ProofContext.m1n1(p0.M1, p0.N1, p0.params.W)
    assert proof_family_contains(ctx, PartialMap())
    x = sorted(p0.X.ordinaries)
    r1 = next(a for a in x if a % 3 == 1)
    r2 = next(a for a in p0.G.alphas if a % 3 == 2)
    f = PartialMap.of({p0.M1.c(r1): p0.N1.c(r2)})
    assert not proof_family_contains(ctx, f)
    pinned = ProofContext.n1n2(p0.N1, p0.N2, p0.params.W, 1)
    assert proof_family_contains(pinned, pinned.pins())
    assert not proof_family_contains(pinned, PartialMap())
    with pytest.raises(StructureError):
        proof_family_contains(ctx, PartialMap(), Variant.n1n2(1))


def test_exemption_is_configurable(p0):
    W = p0.params.W
    ctx = ProofContext.n1n2(p0.N1, p0.N2, W, 1, pin_alpha=4)
    assert ctx.variant.exempt_alpha == 4
    assert proof_family_contains(ctx, ctx.pins())
    with pytest.raises(StructureError):
        ProofContext.n1n2(p0.N1, p0.N2, W, 1, pin_alpha=5)


def test_first_b_move_is_identity(p0):
    ctx = ProofContext.m1n1(p0.M1, p0.N1, p0.params.W)
    assert proof_extend(ctx, PartialMap(), ("S", 5)).forward == {5: 5}
    with pytest.raises(ValueError):
        proof_extend(ctx, PartialMap.of({5: 5}), ("S", 5))


def test_extensions_from_random_small_positions(p0):
    """Random positions of size <= 2 in the family, random c-challenges."""
    ctx = ProofContext.m1n1(p0.M1, p0.N1, p0.params.W)
    S, T = ctx.src.structure, ctx.dst.structure
    rng = random.Random(2)
    c_src, c_dst = sorted(S.P), sorted(T.P)
    for _ in range(150):
        f = PartialMap()
        for _ in range(rng.randint(0, 2)):
            side = rng.choice("ST")
            pool = [e for e in (S.domain if side == "S" else T.domain)
                    if not (f.in_domain(e) if side == "S" else f.in_range(e))]
            f = proof_extend(ctx, f, (side, rng.choice(pool)))
        assert proof_family_contains(ctx, f)
        side = rng.choice("ST")
        pool = [c for c in (c_src if side == "S" else c_dst) if not (f.in_domain(c) if side == "S" else f.in_range(c))]
        g = proof_extend(ctx, f, (side, rng.choice(pool)))
        assert proof_family_contains(ctx, g) and g.pairs > f.pairs


def test_no_extension_reports_the_trace():
    # two b's against one b: the second b-challenge cannot be answered
    S = make_structure(1, 3, {2}, {0, 1}, [{(0, 2), (1, 2)}], name="S")
    T = make_structure(1, 2, {1}, {0}, [{(0, 1)}], name="T")
    A = BuiltStructure(S, (("b", 0), ("b", 1), ("c", 0)))
    B = BuiltStructure(T, (("b", 0), ("c", 0)))
    ctx = ProofContext.m1n1(A, B, 2)
    f = proof_extend(ctx, PartialMap(), ("S", 0))
    with pytest.raises(NoExtension) as info:
        proof_extend(ctx, f, ("S", 1))
    assert info.value.detail["challenge"] == ["S", 1]
    report = verify_back_and_forth(ctx, rounds=2)
    assert not report.passed and "counterexample" in report.checks[0].detail


def test_zero_rounds_is_vacuous(p0):
    ctx = ProofContext.m1n1(p0.M1, p0.N1, p0.params.W)
    report = verify_back_and_forth(ctx, rounds=0)
    assert report.passed and report.checks[0].detail["extensions"] == 0


def test_back_and_forth_pass_implies_duplicator_on_shrunken(small):
    W = small.params.W
    contexts = [ProofContext.m1n1(small.M1, small.N1, W)]
    contexts += [ProofContext.n1n2(small.N1, small.N2, W, m) for m in range(W)]
    for ctx in contexts:
        for rounds in (1, 2):
            report = verify_back_and_forth(ctx, rounds=rounds)
            res = ef_decide(ctx.src.structure, ctx.dst.structure, GameConfig(rounds, ctx.pins()), certificate=False)
            if report.passed:
                assert res.winner == DUPLICATOR


def test_sampling_mode_is_reported(p0):
    ctx = ProofContext.m1n1(p0.M1, p0.N1, p0.params.W)
    report = verify_back_and_forth(ctx, rounds=2, budget=2000)
    assert report.checks[0].mode.startswith("sampled")
