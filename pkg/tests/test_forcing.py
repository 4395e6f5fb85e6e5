import itertools
import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halving_lab import forcing as fc
from halving_lab.sets import PreconditionError

SIXTEEN = Fraction(16)


def one_index(n, members, eps=SIXTEEN):
    return fc.make_condition([5], n, {5: members}, {"": eps, "5:0": eps, "5:1": eps})


def test_validate_examples():
    assert fc.validate(one_index(8, [0, 2, 4, 6])) == []
    bad = fc.validate(one_index(2, [0]))
    assert len(bad) == 1 and bad[0].startswith("C6")
    assert fc.validate(fc.trivial()) == []


def test_validate_reports_c4_and_c5():
    p = fc.make_condition([5], 8, {5: [0, 2, 4, 6]}, {"": 16, "5:0": 8, "5:1": 16})
    assert fc.validate(p)[0].startswith("C4")
    p = fc.make_condition([5], 64, {5: range(40)}, {"": 1, "5:0": 1, "5:1": 1})
    assert any(v.startswith("C5") for v in fc.validate(p))


def test_malformed_conditions():
    with pytest.raises(fc.MalformedCondition):
        fc.make_condition([5], 4, {5: [4]}, {"": 16, "5:0": 16, "5:1": 16})
    with pytest.raises(fc.MalformedCondition):
        fc.make_condition([5], 4, {5: [1]}, {"": 16})
    with pytest.raises(fc.MalformedCondition):
        fc.make_condition([5], 4, {5: [1]}, {"": 0, "5:0": 16, "5:1": 16})
    with pytest.raises(fc.MalformedCondition):
        fc.parse_key("5:2")
    with pytest.raises(fc.MalformedCondition):
        fc.parse_key("5:1,5:0")


def test_boolean_trace_examples():
    p = one_index(8, [0, 2, 4, 6])
    assert fc.boolean_trace(p, ()).members == frozenset(range(8))
    assert fc.boolean_trace(p, ((5, 1),)).members == {0, 2, 4, 6}
    assert fc.boolean_trace(p, ((5, 0),)).members == {1, 3, 5, 7}
    with pytest.raises(PreconditionError):
        fc.boolean_trace(p, ((6, 1),))


def test_partial_functions_order_and_count():
    keys = fc.partial_functions([3, 1])
    assert len(keys) == 9
    assert keys[:3] == [(), ((1, 0),), ((1, 1),)]
    assert fc.key_text(((1, 0), (3, 1))) == "1:0,3:1"
    assert fc.parse_key("3:1, 1:0") == ((1, 0), (3, 1))
    assert len(fc.partial_functions(range(4), max_dom=2)) == 1 + 8 + 24


def test_leq_examples():
    p = one_index(8, [0, 2, 4, 6])
    assert fc.leq(p, p)
    q = fc.extend(p, (), fc.restrict(p, ()), 40, p.eps)
    assert fc.leq(q, p) and not fc.leq(p, q)
    bits = np.array(q.a[5])
    bits[1] ^= 1
    broken = fc.Condition(q.F, q.n, {5: bits}, q.eps)
    check = fc.leq(broken, p)
    assert not check and check.clause == "D3"


def test_leq_reports_each_clause():
    p = one_index(8, [0, 2, 4, 6])
    assert fc.leq(fc.trivial(8), p).clause == "D1"
    assert fc.leq(one_index(4, [0, 2]), p).clause == "D2"
    looser = fc.make_condition([5], 8, {5: [0, 2, 4, 6]}, {"": 32, "5:0": 32, "5:1": 32})
    assert fc.leq(looser, p).clause == "D4"
    quarter = {"": Fraction(1, 4), "5:0": Fraction(1, 4), "5:1": Fraction(1, 4)}
    tight = fc.make_condition([5], 160, {5: range(0, 160, 2)}, quarter)
    assert fc.validate(tight) == []
    # all ones past 160: at i = 1000 the density of a_5 is 23/25, more than 1/4 away from 1/2
    skewed = fc.make_condition([5], 1000, {5: [*range(0, 160, 2), *range(160, 1000)]}, quarter)
    check = fc.leq(skewed, tight)
    assert check.clause == "D5" and "5:0" in check.detail


def test_restrict_examples():
    p = one_index(8, [0, 2, 4, 6], Fraction(8))
    r = fc.restrict(p, ())
    assert r.F == () and r.n == 8 and dict(r.eps) == {(): Fraction(8)}
    assert fc.restrict(p, p.F) == p
    assert fc.leq(p, r)


def test_phase2_pattern_example():
    rows = fc.phase2_pattern(2, 8)
    assert (np.flatnonzero(rows[0]) + 8).tolist() == [8, 10, 12, 14]
    assert (np.flatnonzero(rows[1]) + 8).tolist() == [8, 9, 12, 13]


def test_phase2_order_interleaves():
    assert fc.phase2_order([1, 2, 3, 4], [2], [2, 7, 9]) == [2, 1, 7, 3, 9, 4]
    assert fc.phase2_order([1], [], [5, 6, 7]) == [1, 5, 6, 7]


@pytest.mark.parametrize("k,t", [(k, t) for k in range(4) for t in (1, 3)])
def test_phase2_traces_are_exact(k, t):
    length = (1 << k) * t
    rows = fc.phase2_pattern(k, length)
    for g in fc.partial_functions(range(k)):
        hit = np.ones(length, dtype=bool)
        for j, bit in g:
            hit &= rows[j] == bit
        assert hit.sum() * (1 << len(g)) == length


def test_minimal_horizon_is_minimal():
    eps = Fraction(1, 4)
    n = fc.minimal_horizon(100, 10, 2, eps)
    assert (n - 100) % 4 == 0
    assert Fraction(100, n) < eps / 8 and Fraction(16, n) < eps / 8
    smaller = n - 4
    assert not (Fraction(100, smaller) < eps / 8 and smaller >= 100)


def test_extend_adds_horizon():
    p = one_index(8, [0, 2, 4, 6])
    q = fc.extend(p, (), fc.restrict(p, ()), 1000, p.eps)
    assert q.n >= 1000 and fc.leq(q, p) and fc.validate(q) == []
    assert (q.n - 8) % 2 == 0


def test_extend_adds_index():
    p = one_index(8, [0, 2, 4, 6])
    q1 = fc.single_index(9, p.n, p.eps[()], 3)
    q = fc.extend(p, {9}, q1, p.n, p.eps)
    assert q.F == (5, 9)
    assert fc.leq(q, p) and fc.leq(q, q1)
    assert q.eps[((5, 1), (9, 0))] == SIXTEEN


def test_extend_hypothesis_errors():
    p = one_index(8, [0, 2, 4, 6])
    with pytest.raises(fc.HypothesisError):
        fc.extend(p, (), fc.single_index(9, 8, 16, 1), 8, p.eps)
    with pytest.raises(fc.HypothesisError):
        fc.extend(p, (), fc.trivial(8), 8, {f: v * 2 for f, v in p.eps.items()})
    with pytest.raises(fc.HypothesisError):
        fc.extend(p, (), fc.trivial(8), 8, {(): Fraction(4), ((5, 0),): Fraction(2), ((5, 1),): Fraction(4)})
    with pytest.raises(fc.HypothesisError):
        fc.extend(one_index(2, [0]), (), fc.trivial(2), 8, p.eps)
    with pytest.raises(fc.HypothesisError):
        fc.extend(p, (), fc.trivial(4), 8, p.eps)


def test_fresh_eps_above_sixteen_is_rejected():
    p = fc.make_condition([5], 64, {5: range(0, 64, 2)}, {"": 32, "5:0": 32, "5:1": 32})
    with pytest.raises(fc.HypothesisError, match="monotonicity"):
        fc.extend(p, {9}, fc.make_condition([9], 64, {9: range(1, 64, 2)}, {"": 32, "9:0": 32, "9:1": 32}), 64, p.eps)


def test_amalgamate_examples():
    p = fc.single_index(0, 64, SIXTEEN, 1)
    assert fc.leq(fc.amalgamate(p, p), p)
    q = fc.single_index(1, 64, SIXTEEN, 2)
    r = fc.amalgamate(p, q)
    assert r.F == (0, 1) and fc.leq(r, p) and fc.leq(r, q)
    with pytest.raises(fc.HypothesisError):
        fc.amalgamate(p, fc.single_index(0, 64, SIXTEEN, 2))
    with pytest.raises(fc.HypothesisError):
        fc.amalgamate(p, fc.single_index(1, 128, SIXTEEN, 2))


def test_generic_run_examples():
    run = fc.generic_run(1, 2, 16, 1)
    assert {e.f: e.error for e in run.errors}[()] == 0
    run = fc.generic_run(2, 20, 1 << 12, 5)
    assert run.final.n >= 1 << 12 and all(e.ok for e in run.errors)
    assert [r.action.split()[0] for r in run.rounds[:4]] == ["add", "add", "push", "hold"]
    with pytest.raises(PreconditionError):
        fc.generic_run(3, 2, 16, 1)


def test_replay_rejects_unknown_steps():
    with pytest.raises(PreconditionError):
        fc.replay([{"op": "jump"}], 1)


def test_replay_is_deterministic():
    steps = fc.default_schedule(2, 4, 1 << 10)
    a = json.dumps(fc.replay(steps, 9).as_dict(), sort_keys=True)
    b = json.dumps(fc.replay(steps, 9).as_dict(), sort_keys=True)
    assert a == b
    assert a != json.dumps(fc.replay(steps, 10).as_dict(), sort_keys=True)


def test_json_round_trip_example():
    p = one_index(8, [0, 2, 4, 6])
    data = fc.to_json(p)
    assert data["F"] == [5] and data["a"] == {"5": [0, 2, 4, 6]}
    assert data["eps"][1] == ["5:0", "16/1"]
    assert fc.from_json(json.loads(fc.dumps(p))) == p
    with pytest.raises(fc.MalformedCondition):
        fc.from_json({"F": [5]})


seeds = st.integers(0, 2**63)


@given(seeds)
def test_random_conditions_are_valid(seed):
    p = fc.random_condition(random.Random(seed))
    assert fc.validate(p) == []
    assert fc.from_json(fc.to_json(p)) == p


@given(seeds, st.data())
def test_restriction_is_a_weaker_condition(seed, data):
    p = fc.random_condition(random.Random(seed))
    E = data.draw(st.sets(st.sampled_from(p.F))) if p.F else set()
    r = fc.restrict(p, E)
    assert fc.validate(r) == []
    assert fc.leq(p, r)


@settings(max_examples=30)
@given(seeds)
def test_extend_soundness(seed):
    case = fc.random_extend_case(random.Random(seed))
    q = fc.extend(case.p, case.E, case.qprime, case.m, case.eps_target)
    assert fc.validate(q) == []
    assert fc.leq(q, case.p) and fc.leq(q, case.qprime)
    assert (q.n - case.qprime.n) % (1 << len(q.F)) == 0
    assert q.n >= case.m


@settings(max_examples=15)
@given(seeds)
def test_order_is_transitive(seed):
    rng = random.Random(seed)
    p = fc.random_condition(rng, max_F=3)
    q = fc.extend(p, (), fc.restrict(p, ()), p.n + 1, p.eps)
    new = next(x for x in range(20) if x not in q.F)
    r = fc.extend(q, {new}, fc.single_index(new, q.n, q.eps[()], rng.getrandbits(64)), q.n, q.eps)
    assert fc.leq(q, p) and fc.leq(r, q) and fc.leq(r, p)
