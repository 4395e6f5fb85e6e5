"""Explicit witnesses from the bisection proofs and two splicing lemmas as predicates.

The universally quantified lemmas are exposed as a checker plus a seeded
instance generator; the test harness does the quantifying.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .relations import within
from .sets import (
    DEFAULT_BUDGET,
    ChoppedReal,
    Finite,
    IntervalPartition,
    Intersection,
    Intervals,
    PreconditionError,
    SetSchema,
    count_below,
    enumerate_prefix,
    kth_element,
    matches,
    prefix_counts,
    require_infinite,
)


class LemmaPreconditionError(PreconditionError):
    """The inputs fall outside a lemma's hypotheses, so the lemma says nothing about them."""


class TraceGapError(PreconditionError):
    pass


def _as_schema(X) -> SetSchema:
    return X if isinstance(X, SetSchema) else Finite(tuple(X))


# ---------------------------------------------------------------- factorial chopped real


def factorial_chopped_real(S: SetSchema, horizon: int, budget: int = DEFAULT_BUDGET) -> ChoppedReal:
    """Chop ``S`` right after its ``n!``-th elements, keeping boundaries below ``horizon``."""
    require_infinite(S, "S")
    bounds = [0]
    n = 1
    while True:
        k = math.factorial(n)
        if k > count_below(S, horizon):
            break
        b = kth_element(S, k - 1, budget) + 1
        if b >= horizon:
            break
        bounds.append(b)
        n += 1
    if len(bounds) < 2:
        raise PreconditionError(f"horizon {horizon} is below the first boundary")
    return ChoppedReal(S, IntervalPartition.from_table(bounds))


def factorial_guarantee(y: SetSchema, chopped: ChoppedReal, horizon: int) -> list[tuple[int, Fraction, bool]]:
    """For each matched interval ``k >= 1`` ending by ``horizon``: the relative
    density of ``y`` in ``S`` at the interval's end and whether it exceeds ``1 - 1/k``.

    Interval ``k`` holds ``k·k!`` of the ``(k+1)!`` elements of ``S`` below its end,
    so a match alone forces the density to at least ``k/(k+1)``.
    """
    bounds = chopped.partition.boundaries_below(horizon)
    if len(bounds) < 2:
        return []
    S = chopped.bits
    cs = prefix_counts(S, bounds[-1])
    cys = prefix_counts(Intersection(y, S), bounds[-1])
    out = []
    for k in matches(y, chopped, horizon):
        if k == 0:
            continue
        end = bounds[k + 1]
        ratio = Fraction(int(cys[end]), int(cs[end]))
        out.append((k, ratio, ratio > 1 - Fraction(1, k)))
    return out


# ---------------------------------------------------------------- comeagre-side witness


def _factorial_sum(n: int) -> int:
    return sum(math.factorial(k) for k in range(n + 1))


def nonM_witness(X: SetSchema, depth: int, budget: int = DEFAULT_BUDGET) -> ChoppedReal:
    """Chopped real whose matching reals have relative density swinging from 0 to 1 in ``X``.

    Boundaries sit right after the ``f(2n)``-th elements of ``X`` (``f(n) = Σ_{k<=n} k!``)
    for ``n = 0..depth``. Interval 0 copies ``X``; interval ``n >= 1`` skips its first
    ``(2n-1)!`` elements of ``X`` and keeps the remaining ``(2n)!``. The returned set is
    finite, cut at the last boundary.
    """
    require_infinite(X)
    if depth < 0:
        raise PreconditionError("depth must be a natural number")
    elems = enumerate_prefix(X, _factorial_sum(2 * depth), budget)
    bounds = [0]
    members = [int(elems[0])]
    for n in range(depth + 1):
        bounds.append(int(elems[_factorial_sum(2 * n) - 1]) + 1)
        if n == 0:
            continue
        lo = _factorial_sum(2 * n - 2)
        skip = math.factorial(2 * n - 1)
        members.extend(int(e) for e in elems[lo + skip: _factorial_sum(2 * n)])
    return ChoppedReal(Finite(tuple(members)), IntervalPartition.from_table(bounds))


def interval_member_counts(X: SetSchema, partition: IntervalPartition, stop: int) -> list[int]:
    """``|X ∩ I_k|`` for every interval ``I_k`` lying inside ``[0, stop]``."""
    bounds = partition.boundaries_below(stop)
    c = prefix_counts(X, bounds[-1])
    return [int(c[b] - c[a]) for a, b in zip(bounds, bounds[1:])]


# ---------------------------------------------------------------- dominator witness


@dataclass(frozen=True)
class DominatorWitness:
    X: SetSchema
    g: Sequence[int]
    G: tuple[int, ...]
    Gamma: tuple[int, ...]
    Y: SetSchema
    violations: tuple[int, ...]

    @property
    def partition(self) -> IntervalPartition:
        return self.Y.partition

    def interval_counts(self) -> list[int]:
        return interval_member_counts(self.X, self.partition, self.Gamma[-1])


def _check_increasing(g: Sequence[int], upto: int) -> None:
    if isinstance(g, range):
        if g.step <= 0:
            raise PreconditionError("g must be strictly increasing")
    else:
        vals = np.asarray(g[: upto + 1], dtype=object)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise PreconditionError("g must be strictly increasing")
    if len(g) == 0 or g[0] <= 0:
        raise PreconditionError("g(0) must be positive")


def bisect_witness_from_dominator(X: SetSchema, g: Sequence[int], horizon: int, budget: int = DEFAULT_BUDGET) -> DominatorWitness:
    """Alternate whole Γ-intervals in and out of ``Y`` so each one swings the ratio past 1/2.

    ``G(n) = g^(n+1)(0)``, ``Γ(0) = 0``, ``Γ(1) = g(0)``, ``Γ(n+1) = G(Σ_{k<=n} Γ(k))``,
    computed until the first ``Γ >= horizon``. ``Y`` is the union of the even-indexed
    intervals. Points where ``g`` fails to dominate the enumeration of ``X`` are reported.
    """
    require_infinite(X)
    if horizon < 1:
        raise PreconditionError("horizon must be positive")
    _check_increasing(g, min(len(g) - 1, 1 << 16) if not isinstance(g, range) else 0)

    def at(i: int) -> int:
        if i >= len(g):
            raise PreconditionError(f"g table too short: needs g({i})")
        return int(g[i])

    G = [at(0)]

    def G_at(i: int) -> int:
        while len(G) <= i:
            G.append(at(G[-1]))
        return G[i]

    Gamma = [0, G_at(0)]
    while Gamma[-1] < horizon:
        nxt = G_at(sum(Gamma))
        if nxt <= Gamma[-1]:
            raise PreconditionError("g must be strictly increasing")
        Gamma.append(nxt)

    need = count_below(X, horizon)
    fx = enumerate_prefix(X, need, budget)
    violations = tuple(i for i in range(need) if at(i) <= int(fx[i]))
    Y = Intervals(IntervalPartition.from_table(Gamma), "even")
    return DominatorWitness(X, g, tuple(G), tuple(Gamma), Y, violations)


# ---------------------------------------------------------------- splicing lemma, finite union


def lemma33_conclusion(R: Iterable[int], S: Iterable[int], A: Iterable[int], B: Iterable[int], eps, c) -> bool:
    """``|A ∪ B| / |R ∪ S|`` within ``eps + 1/c`` of 1/2, given ``|B|/|S|`` within ``eps``.

    Raises :class:`LemmaPreconditionError` when the hypotheses fail.
    """
    R, S, A, B = set(R), set(S), set(A), set(B)
    eps, c = Fraction(eps), Fraction(c)
    if R & S:
        raise LemmaPreconditionError("R and S must be disjoint")
    if not R:
        raise LemmaPreconditionError("R must be nonempty")
    if c <= 1 or len(S) != c * len(R):
        raise LemmaPreconditionError("need |S| = c·|R| with c > 1")
    if not A <= R or not B <= S:
        raise LemmaPreconditionError("need A ⊆ R and B ⊆ S")
    if eps <= 0:
        raise LemmaPreconditionError("eps must be positive")
    half = Fraction(1, 2)
    if not abs(Fraction(len(B), len(S)) - half) < eps:
        raise LemmaPreconditionError("|B|/|S| is outside the eps-window")
    return abs(Fraction(len(A | B), len(R | S)) - half) < eps + 1 / c


@dataclass(frozen=True)
class Lemma33Instance:
    R: frozenset
    S: frozenset
    A: frozenset
    B: frozenset
    eps: Fraction
    c: Fraction

    def check(self) -> bool:
        return lemma33_conclusion(self.R, self.S, self.A, self.B, self.eps, self.c)


def lemma33_instance(rng: random.Random, r_range=(1, 50), c_range=(2, 10)) -> Lemma33Instance:
    """A random instance satisfying the hypotheses (integer ``c``)."""
    r = rng.randint(*r_range)
    c = rng.randint(*c_range)
    s = c * r
    universe = rng.sample(range(3 * (r + s)), r + s)
    R, S = universe[:r], universe[r:]
    while True:
        eps = Fraction(rng.randint(1, 64), 128)
        lo = math.floor((Fraction(1, 2) - eps) * s) + 1
        hi = math.ceil((Fraction(1, 2) + eps) * s) - 1
        if lo <= hi:
            break
    b = rng.randint(max(lo, 0), min(hi, s))
    A = rng.sample(R, rng.randint(0, r))
    B = rng.sample(S, b)
    return Lemma33Instance(frozenset(R), frozenset(S), frozenset(A), frozenset(B), eps, Fraction(c))


# ---------------------------------------------------------------- splicing lemma, initial segments


def _window_ok(counts: np.ndarray, ls: np.ndarray, r: Fraction, eps: Fraction) -> np.ndarray:
    return within(counts, ls, r, eps)


def lemma410_conclusion(R, S, r, eps, m: int, n: int) -> bool:
    """``(R ∩ m) ∪ (S ∩ [m, ℓ))`` has density within ``3·eps`` of ``r`` for every ``ℓ`` in ``[m, n]``."""
    r, eps = Fraction(r), Fraction(eps)
    if not m < n:
        raise LemmaPreconditionError("need m < n")
    if m < 1:
        raise LemmaPreconditionError("need m >= 1")
    if not 0 < r < 1 or eps <= 0:
        raise LemmaPreconditionError("need 0 < r < 1 and eps > 0")
    R, S = _as_schema(R), _as_schema(S)
    cr = count_below(R, m)
    cs = prefix_counts(S, n)
    ls = np.arange(m, n + 1, dtype=np.int64)
    if not within(np.array([cr]), np.array([m]), r, eps)[0]:
        raise LemmaPreconditionError("|R ∩ m|/m is outside the eps-window")
    if not _window_ok(cs[m:], ls, r, eps).all():
        raise LemmaPreconditionError("|S ∩ ℓ|/ℓ leaves the eps-window on [m, n]")
    spliced = cr + cs[m:] - cs[m]
    return bool(_window_ok(spliced, ls, r, 3 * eps).all())


@dataclass(frozen=True)
class Lemma410Instance:
    R: SetSchema
    S: SetSchema
    r: Fraction
    eps: Fraction
    m: int
    n: int

    def check(self) -> bool:
        return lemma410_conclusion(self.R, self.S, self.r, self.eps, self.m, self.n)


def _balanced_bits(length: int, r: Fraction, phase: Fraction) -> np.ndarray:
    # j is in the set iff floor((j+1)r + phase) > floor(j r + phase): counts stay within 1 of ℓr
    p, q = r.numerator, r.denominator
    t, T = phase.numerator, phase.denominator
    j = np.arange(length + 1, dtype=np.int64)
    fl = (j * p * T + t * q) // (q * T)
    return np.diff(fl).astype(np.uint8)


def _flip(bits: np.ndarray, rng: random.Random, count: int, lo: int = 0) -> np.ndarray:
    bits = bits.copy()
    for pos in rng.sample(range(lo, len(bits)), min(count, len(bits) - lo)):
        bits[pos] ^= 1
    return bits


def lemma410_instance(rng: random.Random) -> Lemma410Instance:
    """A random instance whose hypotheses are checked by exact scan before returning.

    Sets are balanced sequences of density ``r`` with a random phase and a few random
    flips, or plain coin flips kept only when they pass the hypothesis scan.
    """
    while True:
        q = rng.randint(2, 12)
        r = Fraction(rng.randint(1, q - 1), q)
        eps = Fraction(rng.randint(2, 25), 100)
        m = rng.randint(math.ceil(2 / eps), 300)
        n = m + rng.randint(1, 4 * m)
        slack = max(0, math.floor(eps * m) - 2)
        if rng.random() < 0.25:
            Sb = np.array([rng.random() < r for _ in range(n)], dtype=np.uint8)
            Rb = np.array([rng.random() < r for _ in range(m)], dtype=np.uint8)
        else:
            Sb = _flip(_balanced_bits(n, r, Fraction(rng.randrange(97), 97)), rng, rng.randint(0, slack))
            Rb = _flip(_balanced_bits(m, r, Fraction(rng.randrange(97), 97)), rng, rng.randint(0, slack))
        R = Finite(tuple(np.flatnonzero(Rb).tolist()))
        S = Finite(tuple(np.flatnonzero(Sb).tolist()))
        try:
            lemma410_conclusion(R, S, r, eps, m, n)
        except LemmaPreconditionError:
            continue
        return Lemma410Instance(R, S, r, eps, m, n)


# ---------------------------------------------------------------- independence-preserving extension


Signs = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ClauseResult:
    f: Signs
    clause: str
    passed: bool | None
    witness: int | None = None
    detail: str = ""


def _closed_under_restriction(keys: Iterable[Signs]) -> Signs | None:
    keys = set(keys)
    if () not in keys:
        return ()
    for f in keys:
        for i in range(len(f)):
            sub = f[:i] + f[i + 1:]
            if sub not in keys:
                return sub
    return None


def _trace_bits(members: Iterable[int], stop: int) -> np.ndarray:
    bits = np.zeros(stop, dtype=np.uint8)
    idx = np.fromiter((x for x in members if 0 <= x < stop), dtype=np.int64)
    bits[idx] = 1
    return bits


def _pair_check(bf: np.ndarray, z: np.ndarray, ls: np.ndarray, target: Fraction, tol: Fraction):
    # densities of B^f ∩ Z and B^f \ Z at every ℓ in ls; first failing ℓ or None
    inside = np.concatenate(([0], np.cumsum(bf & z, dtype=np.int64)))[ls]
    outside = np.concatenate(([0], np.cumsum(bf & (1 - z), dtype=np.int64)))[ls]
    ok = within(inside, ls, target, tol) & within(outside, ls, target, tol)
    bad = np.flatnonzero(~ok)
    return None if bad.size == 0 else int(ls[bad[0]])


def r_conditions_check(
    traces: Mapping[Signs, Iterable[int]],
    Z_n: Iterable[int],
    Z_next: Iterable[int],
    k_n: int,
    k_next: int,
    delta_n,
    delta_next,
    X: Iterable[int] | None = None,
    X_block: Iterable[int] | None = None,
) -> list[ClauseResult]:
    """Check the four invariants of one step of the independent-set extension.

    ``traces`` maps a sign pattern ``((i, ±1), ...)`` to the finite trace ``B^f``; the
    family must contain ``()`` and be closed under restriction. ``F = |dom f| + 1``.
    The forcing names are replaced by decided sets: ``X`` stands for the new set up to
    ``2^k_next`` (clause 2) and ``X_block`` for its decided block (clause 4). Absent
    inputs yield ``passed=None``.
    """
    if not k_n < k_next:
        raise PreconditionError("need k_n < k_next")
    gap = _closed_under_restriction(traces)
    if gap is not None:
        raise TraceGapError(f"trace for {gap} missing")
    lo, hi = 1 << k_n, 1 << k_next
    Z_n, Z_next = set(Z_n), set(Z_next)
    if {z for z in Z_next if z < lo} != Z_n or any(z >= lo for z in Z_n):
        raise PreconditionError("Z_next ∩ 2^k_n must equal Z_n")
    delta_n, delta_next = Fraction(delta_n), Fraction(delta_next)
    zn, znext = _trace_bits(Z_n, hi), _trace_bits(Z_next, hi)
    xb = None if X is None else _trace_bits(X, hi)
    window = np.arange(lo, hi + 1, dtype=np.int64)
    out: list[ClauseResult] = []
    for f in sorted(traces, key=lambda k: (len(k), k)):
        bf = _trace_bits(traces[f], hi)
        target = Fraction(1, 2 ** (len(f) + 1))
        w = _pair_check(bf, zn, np.array([lo]), target, delta_n / 3)
        out.append(ClauseResult(f, "R1", w is None, w, "at 2^k_n"))
        w = _pair_check(bf, znext, np.array([hi]), target, delta_next / 3)
        out.append(ClauseResult(f, "R1", w is None, w, "at 2^k_next"))
        if xb is None:
            out.append(ClauseResult(f, "R2", None, detail="no decided X supplied"))
        else:
            w = _pair_check(bf, xb, window, target, delta_n / 3)
            out.append(ClauseResult(f, "R2", w is None, w))
        w = _pair_check(bf, znext, window, target, delta_n)
        out.append(ClauseResult(f, "R3", w is None, w))
    if X_block is None:
        out.append(ClauseResult((), "R4", None, detail="no decided block supplied"))
    else:
        block = {x for x in Z_next if lo <= x < hi}
        given = set(X_block)
        diff = sorted(block ^ given)
        out.append(ClauseResult((), "R4", not diff, diff[0] if diff else None))
    return out


# ---------------------------------------------------------------- Cohen-side antisplitting witness


def cohen_block_ratio_bound(L_prev: int, Delta: int) -> Fraction:
    """``(7L + Δ) / (3(3L + Δ))``: the ratio bound at the end of a block."""
    if L_prev < 1:
        raise PreconditionError("L_prev must be positive")
    if Delta < 0:
        raise PreconditionError("Delta must be a natural number")
    return Fraction(7 * L_prev + Delta, 3 * (3 * L_prev + Delta))


@dataclass(frozen=True)
class BlockFamilyTrace:
    """Cumulative block ends ``L_0 < L_1 < ...`` and the decided subset of each block.

    Block 0 is ``[0, L_0)``; block ``k`` is ``[L_{k-1}, L_k)``.
    """

    L: tuple[int, ...]
    A: tuple[frozenset, ...]

    def block(self, k: int) -> range:
        return range(self.L[k - 1] if k else 0, self.L[k])

    def ones(self, k: int) -> int:
        return len(self.A[k])

    def zeros(self, k: int) -> int:
        return len(self.block(k)) - len(self.A[k])

    def violations(self) -> list[str]:
        out = []
        if not self.L:
            return ["empty trace"]
        if len(self.L) != len(self.A):
            return ["L and A differ in length"]
        if any(b <= a for a, b in zip(self.L, self.L[1:])) or self.L[0] < 2:
            out.append("block ends must start at >= 2 and increase")
        for k, a in enumerate(self.A):
            blk = self.block(k)
            if not all(x in blk for x in a):
                out.append(f"A_{k} leaves its block")
                continue
            need = 1 if k == 0 else 3 * self.L[k - 1]
            o, i = self.zeros(k), self.ones(k)
            if min(o, i) < need or need not in (o, i):
                out.append(f"block {k}: counts ({o} zeros, {i} ones) need min {need} with equality")
        return out


@dataclass(frozen=True)
class CohenBlockReport:
    n: int
    L_prev: int
    L_n: int
    zeros: int
    ones: int
    Delta: int
    intersection: int
    x_count: int
    y_count: int
    ratio: Fraction
    bound: Fraction
    chain_ok: bool


def cohen_antisplit_witness(
    trace: BlockFamilyTrace, x_before: Sequence[Iterable[int] | None] | None = None
) -> tuple[SetSchema, list[CohenBlockReport]]:
    """``Y`` takes the zeros of each decided block.

    For block ``n >= 1`` the condition deciding block ``n`` of ``X`` may say anything
    about ``X`` below ``L_{n-1}``; ``x_before[n]`` supplies that part (default: the
    earlier decided blocks). The report gives the exact ratio
    ``d(X∩Y) / (d(X)·d(Y))`` at ``L_n`` together with the three bounds
    ``|X∩Y∩L_n| <= L_{n-1}``, ``|X∩L_n| >= I_n``, ``|Y∩L_n| >= O_n`` and the resulting bound.
    """
    bad = trace.violations()
    if bad:
        raise PreconditionError("; ".join(bad))
    Y: set[int] = set()
    decided: set[int] = set()
    reports = []
    for k in range(len(trace.L)):
        Y |= set(trace.block(k)) - trace.A[k]
        if k == 0:
            decided |= trace.A[k]
            continue
        Lp, Ln = trace.L[k - 1], trace.L[k]
        below = decided if x_before is None or x_before[k] is None else set(x_before[k])
        if any(not 0 <= x < Lp for x in below):
            raise PreconditionError(f"x_before[{k}] must lie below {Lp}")
        X = below | trace.A[k]
        decided |= trace.A[k]
        o, i = trace.zeros(k), trace.ones(k)
        inter, xc, yc = len(X & Y), len(X), len(Y)
        ratio = Fraction(inter * Ln, xc * yc)
        bound = cohen_block_ratio_bound(Lp, abs(o - i))
        chain = inter <= Lp and xc >= i and yc >= o and ratio <= Fraction(Lp * Ln, o * i) == bound
        reports.append(CohenBlockReport(k, Lp, Ln, o, i, abs(o - i), inter, xc, yc, ratio, bound, chain))
    return Finite(tuple(sorted(Y))), reports


def cohen_trace(rng: random.Random, blocks: int, max_extra: int = 8) -> BlockFamilyTrace:
    """A random trace meeting the block-count invariants."""
    L: list[int] = []
    A: list[frozenset] = []
    for k in range(blocks):
        start = L[-1] if L else 0
        need = 1 if k == 0 else 3 * start
        extra = rng.randint(0, max_extra * max(start, 1))
        ones, zeros = (need, need + extra) if rng.random() < 0.5 else (need + extra, need)
        size = ones + zeros
        A.append(frozenset(rng.sample(range(start, start + size), ones)))
        L.append(start + size)
    return BlockFamilyTrace(tuple(L), tuple(A))
