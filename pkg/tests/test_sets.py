import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halving_lab.rationals import format_rational, parse_rational
from halving_lab.sets import (
    BudgetExhausted,
    ChoppedReal,
    Complement,
    Finite,
    Intersection,
    IntervalPartition,
    Intervals,
    Periodic,
    PreconditionError,
    SchemaSyntaxError,
    Seeded,
    Union,
    count_below,
    empty,
    enumerate_prefix,
    evens,
    is_finite,
    kth_element,
    matches,
    membership,
    multiples,
    omega,
    parse_schema,
    periodic_form,
    residues,
)

from fractions import Fraction


def test_membership_examples():
    assert membership(evens(), 4)
    assert not membership(Complement(evens()), 4)
    assert not membership(Finite((3, 7)), 5)


def test_count_below_examples():
    assert count_below(evens(), 10) == 5
    assert count_below(omega(), 7) == 7
    assert count_below(multiples(3), 9) == 3


def test_kth_element_examples():
    assert kth_element(evens(), 3, 100) == 6
    assert all(kth_element(omega(), k) == k for k in range(50))
    assert kth_element(multiples(3), 2, 100) == 6


def test_kth_element_of_small_finite_set():
    with pytest.raises(PreconditionError):
        kth_element(Finite((1, 2)), 2)


def test_budget_exhaustion():
    sparse = Finite(tuple(range(0, 10, 2)))
    with pytest.raises(BudgetExhausted):
        enumerate_prefix(Union(sparse, Intervals(IntervalPartition("geometric", [2]), "odd")), 10**6, budget=1000)


def test_matches_examples():
    zeros = empty()
    steps = ChoppedReal(zeros, IntervalPartition("arith", [2]))
    assert matches(zeros, steps, 10) == [0, 1, 2, 3, 4]
    assert matches(omega(), steps, 10) == []
    x = Finite((0, 5))
    y = Finite((1, 4))
    assert matches(y, ChoppedReal(x, IntervalPartition.from_table([0, 2, 4, 6])), 6) == [1]


def test_matches_ignores_partial_interval():
    part = IntervalPartition("arith", [2])
    assert matches(empty(), ChoppedReal(empty(), part), 9) == [0, 1, 2, 3]


def test_seeded_bits_are_stable():
    # frozen values: bit(n) is the low bit of the SplitMix64 output for (seed, n)
    assert Seeded(42).bits(16).tolist() == Seeded(42).bits(16).tolist()
    assert [n in Seeded(42) for n in range(16)] == Seeded(42).bits(16).astype(bool).tolist()
    assert Seeded(0).bits(3).dtype == np.uint8


def test_seeded_rejects_large_seed():
    with pytest.raises(PreconditionError):
        Seeded(1 << 64)


def test_interval_generators():
    assert IntervalPartition("factorial").boundaries_covering(100) == [0, 1, 2, 6, 24, 120]
    assert IntervalPartition("geometric", [3]).boundaries_covering(10) == [0, 1, 3, 9, 27]
    assert IntervalPartition("arith", [5]).boundaries_below(12) == [0, 5, 10]
    with pytest.raises(PreconditionError):
        IntervalPartition.from_table([1, 2])
    with pytest.raises(PreconditionError):
        IntervalPartition.from_table([0, 2, 2])
    with pytest.raises(BudgetExhausted):
        IntervalPartition.from_table([0, 3]).boundaries_covering(10)


def test_interval_memo_is_thread_safe():
    part = IntervalPartition("arith", [3])
    results = []

    def work():
        results.append(part.boundaries_covering(30_000)[-1])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [30_000] * 8
    assert part.boundaries_covering(30_000) == list(range(0, 30_001, 3))


def test_finiteness():
    assert is_finite(Finite((1, 2)))
    assert is_finite(empty())
    assert not is_finite(omega())
    assert not is_finite(Seeded(1))
    assert is_finite(Intersection(Seeded(1), Finite((3,))))
    assert not is_finite(Complement(Finite((3,))))
    assert is_finite(Complement(omega()))


def test_periodic_form_of_combination():
    form = periodic_form(Intersection(evens(), multiples(3)))
    assert form is not None and len(form.period) == 6 and sum(form.period) == 1
    assert periodic_form(Seeded(3)) is None


SCHEMA_TEXTS = [
    "periodic(;1)",
    "periodic(1,0;0,1,1)",
    "finite(3,7)",
    "finite()",
    "not(periodic(;1,0))",
    "and(periodic(;1,0),or(finite(1),seeded(9)))",
    "intervals(factorial;odd)",
    "intervals(geometric 2;even)",
    "intervals(table 0 1 2 4 8 300;even)",
]


@pytest.mark.parametrize("text", SCHEMA_TEXTS)
def test_schema_text_round_trip(text):
    X = parse_schema(text)
    assert X.to_text() == text
    assert np.array_equal(parse_schema(X.to_text()).bits(200), X.bits(200))


@pytest.mark.parametrize("text", ["periodic(;1", "periodic(;)", "finite(a)", "blob(1)", "seeded(1) x", "intervals(nope;even)", "periodic(;2)"])
def test_schema_syntax_errors(text):
    with pytest.raises(SchemaSyntaxError):
        parse_schema(text)


def test_rational_text():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational(" -2 ") == -2
    assert format_rational(Fraction(2, 4)) == "1/2"
    assert format_rational(3) == "3/1"
    for bad in ("1/0", "0.5", "1/2/3", ""):
        with pytest.raises(ValueError):
            parse_rational(bad)


@given(st.fractions())
def test_rational_round_trip(x):
    assert parse_rational(format_rational(x)) == x


bits = st.lists(st.integers(0, 1), max_size=6)
periodic = st.builds(Periodic, bits, st.lists(st.integers(0, 1), min_size=1, max_size=6))
finite = st.builds(Finite, st.lists(st.integers(0, 60), max_size=10))
atoms = st.one_of(periodic, finite, st.builds(Seeded, st.integers(0, 2**64 - 1)))
schemas = st.recursive(
    atoms,
    lambda inner: st.one_of(
        st.builds(Complement, inner), st.builds(Union, inner, inner), st.builds(Intersection, inner, inner)
    ),
    max_leaves=5,
)


@given(schemas, st.integers(0, 300))
def test_complement_counts(X, n):
    assert count_below(X, n) + count_below(Complement(X), n) == n


@given(schemas, st.integers(1, 200))
def test_counts_step_by_zero_or_one(X, n):
    steps = np.diff([count_below(X, k) for k in range(n + 1)])
    assert set(steps.tolist()) <= {0, 1}


@given(schemas, schemas, st.integers(0, 200))
def test_de_morgan(A, B, n):
    lhs = Complement(Union(A, B)).bits(n)
    rhs = Intersection(Complement(A), Complement(B)).bits(n)
    assert np.array_equal(lhs, rhs)


@given(schemas)
def test_text_round_trip_property(X):
    assert np.array_equal(parse_schema(X.to_text()).bits(150), X.bits(150))


@given(schemas)
def test_periodic_form_agrees_with_bits(X):
    form = periodic_form(X)
    if form is not None:
        assert np.array_equal(form.bits(150), X.bits(150))


@given(st.one_of(periodic, st.builds(Seeded, st.integers(0, 2**64 - 1))), st.integers(0, 30))
def test_kth_element_is_member_and_increasing(X, k):
    if is_finite(X) or count_below(X, 4000) <= k + 1:
        return
    a, b = kth_element(X, k), kth_element(X, k + 1)
    assert membership(X, a) and a < b
    assert count_below(X, a) == k


def test_residues_shorthand():
    assert residues(4, [0, 1]).bits(8).tolist() == [1, 1, 0, 0, 1, 1, 0, 0]
