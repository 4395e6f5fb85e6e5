"""Finite-horizon deciders for the bisection and independence relations.

A limit statement such as "the relative density tends to 1/2" becomes a
three-valued verdict over an explicit range ``[n0, horizon]``. ``HOLDS``
means no violation was seen there and nothing more. All comparisons are
exact integer cross-multiplications.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .density import is_moderate
from .parallel import ordered_map
from .sets import Complement, Intersection, PreconditionError, SetSchema, prefix_counts

HOLDS = "HoldsAtHorizon"
FAILS = "FailsAtHorizon"
INCONCLUSIVE = "Inconclusive"

_SAFE = 1 << 62


@dataclass(frozen=True)
class RelationVerdict:
    status: str
    witness: int | None = None
    trace: tuple[tuple[int, Fraction], ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status == FAILS and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    @property
    def holds(self) -> bool:
        return self.status == HOLDS


@dataclass(frozen=True)
class SubfamilyVerdict:
    members: tuple[int, ...]
    verdict: RelationVerdict
    complemented: tuple[int, ...] = field(default=())


def _lift(arrays, bound: int):
    # int64 when every product stays below 2^62, else exact Python ints
    if bound < _SAFE:
        return [np.asarray(a, dtype=np.int64) for a in arrays]
    return [np.asarray(a, dtype=np.int64).astype(object) for a in arrays]


def within(num, den, center: Fraction, tol: Fraction) -> np.ndarray:
    """Elementwise ``|num/den - center| < tol`` for positive ``den``, exactly."""
    a, b = center.numerator, center.denominator
    p, q = tol.numerator, tol.denominator
    num = np.asarray(num)
    den = np.asarray(den)
    big = max(int(np.max(np.abs(num), initial=0)), int(np.max(den, initial=0)), 1)
    num, den = _lift((num, den), 2 * big * b * q * max(abs(a), p, 1))
    return np.abs(num * b - a * den) * q < p * b * den


def _scan(num, den, ns, center: Fraction, tol: Fraction, trace_points: int) -> RelationVerdict:
    if len(ns) == 0:
        return RelationVerdict(INCONCLUSIVE, notes=("empty scan range",))
    ok = within(num, den, center, tol)
    bad = np.flatnonzero(~ok)
    trace: tuple = ()
    if trace_points:
        picks = np.unique(np.linspace(0, len(ns) - 1, trace_points).astype(int))
        trace = tuple((int(ns[i]), Fraction(int(num[i]), int(den[i]))) for i in picks)
    if bad.size:
        return RelationVerdict(FAILS, int(ns[bad[0]]), trace)
    return RelationVerdict(HOLDS, None, trace)


def _default_n0(n0: int | None, horizon: int) -> int:
    return max(1, horizon // 10) if n0 is None else n0


def _ratio_counts(S: SetSchema, X: SetSchema, horizon: int):
    cx = prefix_counts(X, horizon)
    csx = prefix_counts(Intersection(S, X), horizon)
    return csx, cx


def _check_tol(tol: Fraction) -> Fraction:
    tol = Fraction(tol)
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    return tol


def bisects_in_limit(S: SetSchema, X: SetSchema, tol, n0: int | None = None, horizon: int = 10_000, trace_points: int = 0) -> RelationVerdict:
    tol = _check_tol(tol)
    n0 = _default_n0(n0, horizon)
    csx, cx = _ratio_counts(S, X, max(horizon, n0))
    if n0 < 1 or cx[n0] == 0:
        raise PreconditionError(f"X ∩ {n0} is empty")
    ns = np.arange(n0, horizon + 1)
    return _scan(csx[n0:horizon + 1], cx[n0:horizon + 1], ns, Fraction(1, 2), tol, trace_points)


def almost_bisects(S: SetSchema, X: SetSchema, eps, n0: int | None = None, horizon: int = 10_000, trace_points: int = 0) -> RelationVerdict:
    eps = Fraction(eps)
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError("eps must lie in (0, 1/2)")
    return bisects_in_limit(S, X, eps, n0, horizon, trace_points)


def weakly_bisects(S: SetSchema, X: SetSchema, eps, horizon: int) -> tuple[int, list[int]]:
    """All ``n <= horizon`` with the relative density strictly within ``eps`` of 1/2."""
    eps = _check_tol(eps)
    csx, cx = _ratio_counts(S, X, horizon)
    ns = np.arange(1, horizon + 1)
    num, den = csx[1:], cx[1:]
    live = den > 0
    hits = ns[live][within(num[live], den[live], Fraction(1, 2), eps)]
    return int(hits.size), hits.tolist()


def bisects_infinitely_often(S: SetSchema, X: SetSchema, horizon: int) -> list[int]:
    """All ``n <= horizon`` with ``2·|S ∩ X ∩ n| = |X ∩ n| >= 1``."""
    csx, cx = _ratio_counts(S, X, horizon)
    ns = np.arange(1, horizon + 1)
    hit = (2 * csx[1:] == cx[1:]) & (cx[1:] > 0)
    return ns[hit].tolist()


def star_splits(S: SetSchema, X: SetSchema, tol, n0: int | None = None, horizon: int = 10_000, trace_points: int = 0) -> RelationVerdict:
    """Scan ``d_n(S∩X) / (d_n(S)·d_n(X))`` for membership in ``(1 - tol, 1 + tol)``."""
    tol = _check_tol(tol)
    n0 = _default_n0(n0, horizon)
    top = max(horizon, n0)
    cs, cx = prefix_counts(S, top), prefix_counts(X, top)
    csx = prefix_counts(Intersection(S, X), top)
    if n0 < 1 or cs[n0] == 0 or cx[n0] == 0:
        raise PreconditionError(f"zero density denominator at n0={n0}")
    ns = np.arange(n0, horizon + 1, dtype=np.int64)
    sl = slice(n0, horizon + 1)
    num, a, b = _lift((csx[sl], cs[sl], cx[sl]), (horizon + 1) ** 2 * 4)
    return _scan(num * ns, a * b, ns, Fraction(1), tol, trace_points)


def _subfamilies(size: int, cap: int) -> list[tuple[int, ...]]:
    subs = [c for k in range(1, min(cap, size) + 1) for c in itertools.combinations(range(size), k)]
    return sorted(subs)


def _moderacy_notes(family: Sequence[SetSchema]) -> tuple[str, ...]:
    notes = []
    for i, X in enumerate(family):
        verdict = is_moderate(X)
        if not verdict.moderate:
            if verdict.exact:
                raise PreconditionError(f"member {i} ({X.to_text()}) is not moderate")
            notes.append(f"member {i}: moderacy estimate negative")
        elif not verdict.exact:
            notes.append(f"member {i}: moderacy estimated")
    return tuple(notes)


def statistically_independent(
    family: Sequence[SetSchema], cap: int, tol, n0: int | None = None, horizon: int = 10_000
) -> list[SubfamilyVerdict]:
    """Per subfamily E (up to ``cap`` members): ``d_n(⋂E) / ∏ d_n(E)`` within ``tol`` of 1."""
    if not family:
        raise PreconditionError("empty family")
    tol = _check_tol(tol)
    n0 = _default_n0(n0, horizon)
    notes = _moderacy_notes(family)
    bits = [X.bits(horizon) for X in family]
    counts = [prefix_counts(X, horizon) for X in family]
    ns = np.arange(n0, horizon + 1, dtype=np.int64)

    def check(sub: tuple[int, ...]) -> SubfamilyVerdict:
        inter = np.bitwise_and.reduce([bits[i] for i in sub])
        c_int = np.concatenate(([0], np.cumsum(inter, dtype=np.int64)))[n0:]
        factors = [counts[i][n0:] for i in sub]
        if any(f[0] == 0 for f in factors):
            raise PreconditionError(f"zero density denominator at n0={n0}")
        k = len(sub)
        lifted = _lift([c_int, ns, *factors], (horizon + 1) ** k * 4)
        num = lifted[0] * lifted[1] ** (k - 1)
        den = lifted[2]
        for f in lifted[3:]:
            den = den * f
        verdict = _scan(num, den, ns, Fraction(1), tol, 0)
        return SubfamilyVerdict(sub, RelationVerdict(verdict.status, verdict.witness, (), notes))

    return ordered_map(check, _subfamilies(len(family), cap))


def rho_independent(
    family: Sequence[SetSchema],
    rho,
    cap: int,
    tol,
    n0: int | None = None,
    horizon: int = 10_000,
    complements: bool = False,
) -> list[SubfamilyVerdict]:
    """Per subfamily A: ``d_n(⋂A)`` within ``tol`` of ``rho^|A|``.

    With ``complements=True`` every Boolean combination (members A, complemented
    members B, ``|A| + |B| <= cap``) is checked against ``rho^|A| (1-rho)^|B|``.
    """
    rho = Fraction(rho)
    if not 0 < rho < 1:
        raise PreconditionError("rho must lie in (0, 1)")
    if not family:
        raise PreconditionError("empty family")
    tol = _check_tol(tol)
    n0 = _default_n0(n0, horizon)
    ns = np.arange(n0, horizon + 1, dtype=np.int64)

    combos: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for sub in _subfamilies(len(family), cap):
        if complements:
            for r in range(len(sub) + 1):
                for neg in itertools.combinations(sub, r):
                    combos.append((tuple(i for i in sub if i not in neg), neg))
        else:
            combos.append((sub, ()))

    def check(combo) -> SubfamilyVerdict:
        pos, neg = combo
        parts = [family[i] for i in pos] + [Complement(family[i]) for i in neg]
        inter = np.bitwise_and.reduce([X.bits(horizon) for X in parts])
        c_int = np.concatenate(([0], np.cumsum(inter, dtype=np.int64)))[n0:]
        target = rho ** len(pos) * (1 - rho) ** len(neg)
        verdict = _scan(c_int, ns, ns, target, tol, 0)
        return SubfamilyVerdict(tuple(sorted(pos + neg)), verdict, neg)

    return ordered_map(check, combos)
