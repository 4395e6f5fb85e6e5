import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from halving_lab import constructions as con
from halving_lab.relations import bisects_infinitely_often
from halving_lab.sets import Finite, PreconditionError, Seeded, count_below, evens, odds, omega


def test_factorial_chopped_real_examples():
    assert con.factorial_chopped_real(omega(), 100).partition.boundaries_below(100) == [0, 1, 2, 6, 24]
    assert con.factorial_chopped_real(evens(), 100).partition.boundaries_below(100) == [0, 1, 3, 11, 47]
    with pytest.raises(PreconditionError):
        con.factorial_chopped_real(omega(), 1)
    with pytest.raises(PreconditionError):
        con.factorial_chopped_real(Finite((1, 2, 3)), 100)


def test_factorial_guarantee_on_matching_real():
    S = Seeded(11)
    chopped = con.factorial_chopped_real(S, 50_000)
    rows = con.factorial_guarantee(S, chopped, 50_000)
    assert [k for k, _, _ in rows] == list(range(1, len(chopped.partition.boundaries_below(50_000)) - 1))
    assert all(ok for _, _, ok in rows)
    assert rows[0][1] == 1


@given(st.integers(0, 2**64 - 1), st.integers(2, 6))
def test_factorial_guarantee_for_reals_matching_one_interval(seed, k):
    # y copies S on interval k only; the density at its end must still exceed 1 - 1/k
    S = evens()
    chopped = con.factorial_chopped_real(S, 10**5)
    b = chopped.partition.boundaries_below(10**5)
    if k + 1 >= len(b):
        return
    noise = Seeded(seed).bits(b[k])
    y = Finite(tuple(i for i in range(b[k]) if noise[i]) + tuple(x for x in range(b[k], b[k + 1]) if x % 2 == 0))
    rows = {r[0]: r for r in con.factorial_guarantee(y, chopped, b[k + 1])}
    assert rows[k][2]


def test_nonM_witness_shapes():
    w = con.nonM_witness(omega(), 1)
    assert w.bits.elements == (0, 2, 3)
    assert w.partition.boundaries_below(100) == [0, 1, 4]
    w = con.nonM_witness(omega(), 2)
    bounds = w.partition.boundaries_below(10**6)
    assert bounds == [0, 1, 4, 34]
    assert con.interval_member_counts(omega(), w.partition, 34) == [1, 3, 30]
    # interval 1 drops 1! element, interval 2 drops 3! elements
    assert con.interval_member_counts(w.bits, w.partition, 34) == [1, 2, 24]
    with pytest.raises(PreconditionError):
        con.nonM_witness(Finite((1, 2)), 1)


def test_nonM_witness_on_sparse_set_is_a_subset():
    X = odds()
    w = con.nonM_witness(X, 2)
    assert all(e % 2 == 1 for e in w.bits.elements)
    counts = con.interval_member_counts(X, w.partition, w.partition.boundaries_below(10**6)[-1])
    assert counts[1] >= 1 + 2 and counts[2] >= 6 + 24


def test_dominator_witness_example():
    w = con.bisect_witness_from_dominator(omega(), range(1, 10**6), 8)
    assert w.Gamma == (0, 1, 2, 4, 8)
    assert w.Y.bits(8).tolist() == [1, 0, 1, 1, 0, 0, 0, 0]
    hits = bisects_infinitely_often(w.Y, omega(), 8)
    assert 2 in hits and 6 in hits
    assert w.violations == ()
    assert w.interval_counts() == [1, 1, 2, 4]


def test_dominator_witness_doubling():
    w = con.bisect_witness_from_dominator(omega(), range(2, 10**7, 2), 50)
    assert bisects_infinitely_often(w.Y, omega(), w.Gamma[-1])


def test_dominator_interval_counts_dominate_gamma():
    # g(n) = 2n + 1 just dominates the enumeration 2n of the evens
    w = con.bisect_witness_from_dominator(evens(), range(1, 10**6, 2), 30)
    assert w.violations == ()
    assert w.Gamma == (0, 1, 3, 31)
    counts = w.interval_counts()
    assert counts == [1, 1, 14]
    assert all(c >= g for c, g in zip(counts, w.Gamma))


def test_dominator_errors_and_violations():
    with pytest.raises(PreconditionError):
        con.bisect_witness_from_dominator(omega(), [1, 1, 2], 8)
    with pytest.raises(PreconditionError):
        con.bisect_witness_from_dominator(omega(), [0, 1, 2], 8)
    with pytest.raises(PreconditionError, match="too short"):
        con.bisect_witness_from_dominator(omega(), [1, 2, 3], 100)
    w = con.bisect_witness_from_dominator(evens(), range(1, 10**4), 16)
    assert w.violations and w.violations[0] == 1


def test_lemma33_examples():
    R, S = {0, 1}, set(range(2, 8))
    assert con.lemma33_conclusion(R, S, R, {2, 3, 4}, Fraction(1, 10), 3)
    assert con.lemma33_conclusion(R, S, set(), {2, 3, 4}, Fraction(1, 100), 3)
    with pytest.raises(con.LemmaPreconditionError):
        con.lemma33_conclusion(R, S, R, {2}, Fraction(1, 10), 3)
    with pytest.raises(con.LemmaPreconditionError):
        con.lemma33_conclusion(R, S, R, {2, 3, 4}, Fraction(1, 10), 2)
    with pytest.raises(con.LemmaPreconditionError):
        con.lemma33_conclusion({0, 2}, S, set(), {2, 3, 4}, Fraction(1, 10), 3)


@given(st.integers(0, 2**32))
def test_lemma33_holds_on_random_instances(seed):
    assert con.lemma33_instance(random.Random(seed)).check()


def test_lemma410_examples():
    assert con.lemma410_conclusion(evens(), evens(), Fraction(1, 2), Fraction(1, 8), 16, 64)
    with pytest.raises(con.LemmaPreconditionError):
        con.lemma410_conclusion(evens(), evens(), Fraction(1, 2), Fraction(1, 8), 64, 64)
    with pytest.raises(con.LemmaPreconditionError):
        con.lemma410_conclusion(omega(), evens(), Fraction(1, 2), Fraction(1, 8), 16, 64)


def test_lemma410_splice_of_shifted_odds():
    assert con.lemma410_conclusion(evens(), odds(), Fraction(1, 2), Fraction(1, 10), 20, 200)


@given(st.integers(0, 2**32))
def test_lemma410_holds_on_random_instances(seed):
    inst = con.lemma410_instance(random.Random(seed))
    assert inst.m < inst.n and inst.check()


def _block_bits(lo, hi, members):
    return {x for x in range(lo, hi) if x in members}


def test_r_conditions_vacuous_base():
    traces = {(): set(), ((0, 1),): set(), ((0, -1),): set()}
    out = con.r_conditions_check(traces, set(), set(), 2, 4, 3, 3)
    r1 = [r for r in out if r.clause == "R1"]
    assert len(r1) == 6 and all(r.passed for r in r1)
    assert {r.detail for r in r1} == {"at 2^k_n", "at 2^k_next"}
    assert all(r.passed is None for r in out if r.clause in ("R2", "R4"))


def test_r_conditions_block_agreement():
    Z_n = set(range(0, 4, 2))
    block = set(range(4, 16, 2))
    Z_next = Z_n | block
    traces = {(): set(range(16))}
    out = con.r_conditions_check(traces, Z_n, Z_next, 2, 4, Fraction(1, 2), Fraction(1, 2), X_block=block)
    r4 = [r for r in out if r.clause == "R4"]
    assert r4 and all(r.passed for r in r4)
    wrong = con.r_conditions_check(traces, Z_n, Z_next, 2, 4, Fraction(1, 2), Fraction(1, 2), X_block={4})
    assert not [r for r in wrong if r.clause == "R4"][0].passed


def test_r_conditions_density_one_block_fails_r3():
    Z_n = {0, 2}
    Z_next = Z_n | set(range(4, 64))
    traces = {(): set(range(64))}
    out = con.r_conditions_check(traces, Z_n, Z_next, 2, 6, Fraction(1, 100), Fraction(1, 100))
    r3 = [r for r in out if r.clause == "R3"][0]
    assert r3.passed is False and r3.witness is not None


def test_r_conditions_trace_gap():
    with pytest.raises(con.TraceGapError):
        con.r_conditions_check({((0, 1),): set()}, set(), set(), 2, 4, 3, 3)
    with pytest.raises(con.TraceGapError):
        con.r_conditions_check({(): set(), ((0, 1), (1, 1)): set()}, set(), set(), 2, 4, 3, 3)


def test_cohen_bound_values():
    assert all(con.cohen_block_ratio_bound(L, 0) == Fraction(7, 9) for L in range(1, 101))
    assert con.cohen_block_ratio_bound(1, 2) == Fraction(3, 5)
    with pytest.raises(PreconditionError):
        con.cohen_block_ratio_bound(0, 1)


@given(st.integers(1, 10**6), st.integers(0, 10**6))
def test_cohen_bound_decreases_in_delta(L, d):
    a, b = con.cohen_block_ratio_bound(L, d), con.cohen_block_ratio_bound(L, d + 1)
    assert b < a <= Fraction(7, 9)


def test_cohen_two_block_balanced():
    # block 1 has 3·L_0 zeros and 3·L_0 ones, so Δ = 0
    trace = con.BlockFamilyTrace((2, 14), (frozenset({0}), frozenset(range(2, 8))))
    Y, reports = con.cohen_antisplit_witness(trace)
    assert reports[0].Delta == 0 and reports[0].bound == Fraction(7, 9)
    assert reports[0].chain_ok and reports[0].ratio <= reports[0].bound
    assert Y.elements == (1, *range(8, 14))


def test_cohen_trace_errors():
    with pytest.raises(PreconditionError):
        con.cohen_antisplit_witness(con.BlockFamilyTrace((), ()))
    with pytest.raises(PreconditionError):
        con.cohen_antisplit_witness(con.BlockFamilyTrace((2, 8), (frozenset({0}), frozenset(range(2, 5)))))


@given(st.integers(0, 2**32), st.integers(2, 5))
def test_cohen_chain_holds_for_any_prefix_of_x(seed, blocks):
    rng = random.Random(seed)
    trace = con.cohen_trace(rng, blocks)
    assert trace.violations() == []
    before = [None] + [[x for x in range(trace.L[k - 1]) if rng.random() < 0.5] for k in range(1, blocks)]
    _, reports = con.cohen_antisplit_witness(trace, before)
    for r in reports:
        assert r.chain_ok and r.ratio <= r.bound <= Fraction(7, 9)
        assert r.intersection <= r.L_prev
        assert count_below(Finite(tuple(trace.A[r.n])), r.L_n) == r.ones
