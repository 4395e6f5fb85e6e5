"""Seeded Monte Carlo checks of the probabilistic steps behind random bisectors.

Trial ``t`` of a run seeded with ``seed`` uses the coin sequence
``seeded(mix64(seed, t))``, so results do not depend on execution order.
Counts and estimates are exact rationals; only the exp-based bounds are floats
(or :class:`decimal.Decimal` in the audit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .rationals import format_rational
from .sets import DEFAULT_BUDGET, PreconditionError, SetSchema, enumerate_prefix, require_infinite


def _dec(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class TrialReport:
    trials: int
    successes: int
    seed: int
    bound: float | None = None
    label: str = ""

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    def sigma(self, p: float) -> float:
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    def within_sigma(self, p, k: int = 3) -> bool:
        """``|estimate - p| <= k·sqrt(p(1-p)/trials)``, decided exactly for rational ``p``."""
        p = Fraction(p)
        gap = self.estimate - p
        return gap * gap * self.trials <= k * k * p * (1 - p)

    def as_dict(self) -> dict:
        out = {
            "trials": self.trials,
            "successes": self.successes,
            "estimate": format_rational(self.estimate),
            "seed": self.seed,
        }
        if self.bound is not None:
            out["bound"] = _dec(self.bound)
        if self.label:
            out["label"] = self.label
        return out


# ---------------------------------------------------------------- analytic bounds


def chernoff_bound(k: int, a: float) -> float:
    """``exp(-a^2 / 2k)``, the upper bound on ``Pr[S_k - k/2 > a]`` for ``k`` fair coins."""
    if k < 1 or a <= 0:
        raise PreconditionError("need k >= 1 and a > 0")
    return math.exp(-(a * a) / (2 * k))


def delta_n(N: int, P, n: int) -> float:
    """``N · 16n² · exp(-⌈N·P⌉ / 2n²)``."""
    P = Fraction(P)
    if n < 1 or N < 1 or not 0 < P <= 1:
        raise PreconditionError("need n >= 1, N >= 1 and 0 < P <= 1")
    E = math.ceil(N * P)
    return N * 16 * n * n * math.exp(-E / (2 * n * n))


def delta_n_decimal(N: int, P, n: int, digits: int = 30) -> Decimal:
    P = Fraction(P)
    if n < 1 or N < 1 or not 0 < P <= 1:
        raise PreconditionError("need n >= 1, N >= 1 and 0 < P <= 1")
    E = math.ceil(N * P)
    with localcontext() as ctx:
        ctx.prec = digits
        return +(Decimal(N * 16 * n * n) * (Decimal(-E) / Decimal(2 * n * n)).exp())


def block_parameters(n: int) -> tuple[int, Fraction]:
    """``(N_n, P_n) = (max(n^6, 100), min(1/2, 1/n))``; ``P_0 = 1/2``."""
    P = Fraction(1, 2) if n == 0 else min(Fraction(1, 2), Fraction(1, n))
    return max(n ** 6, 100), P


@dataclass(frozen=True)
class DeltaRow:
    n: int
    N: int
    P: Fraction
    E: int
    delta: Decimal

    @property
    def below_half(self) -> bool:
        return self.delta < Decimal("0.5")

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "P": format_rational(self.P),
            "E": self.E,
            "delta": f"{self.delta:.12E}",
            "below_half": self.below_half,
        }


def delta_audit(ns: Sequence[int]) -> list[DeltaRow]:
    rows = []
    for n in ns:
        N, P = block_parameters(n)
        rows.append(DeltaRow(n, N, P, math.ceil(N * P), delta_n_decimal(N, P, n)))
    return rows


def first_stable_n(rows: Sequence[DeltaRow]) -> int | None:
    """Least ``n`` in the audit from which every later row is below 1/2."""
    first = None
    for row in rows:
        if row.below_half:
            first = row.n if first is None else first
        else:
            first = None
    return first


# ---------------------------------------------------------------- random walks


def _positions(X: SetSchema, count: int, budget: int) -> np.ndarray:
    require_infinite(X)
    return enumerate_prefix(X, count, budget)


def walk_zero_hits(S: SetSchema, X: SetSchema, steps: int, budget: int = DEFAULT_BUDGET) -> list[int]:
    """All ``1 <= n <= steps`` with ``2·|X ∩ S ∩ f_X(n)| = n`` (``f_X`` enumerates ``X``)."""
    pos = _positions(X, steps, budget)
    if pos.size == 0:
        return []
    bits = S.bits(int(pos[-1]) + 1)[pos]
    return kernels.walk_hits(bits).tolist()


def return_probability(steps: int) -> Fraction:
    """Exact probability that a fair ±1 walk revisits 0 within ``steps`` steps: ``1 - C(2m,m)/4^m``."""
    m = steps // 2
    return 1 - Fraction(math.comb(2 * m, m), 4 ** m)


def estimate_recurrence(X: SetSchema, steps: int, trials: int, seed: int, budget: int = DEFAULT_BUDGET) -> TrialReport:
    """Fraction of seeded random ``S`` whose walk along ``X`` returns to 0 within ``steps``."""
    if trials < 1:
        raise PreconditionError("trials must be positive")
    pos = _positions(X, steps, budget)
    hits = kernels.recurrence_trials(seed, pos, trials)
    return TrialReport(trials, int(hits), seed, float(return_probability(steps)), "recurrence")


def lln_density(X: SetSchema, horizon: int, trials: int, eps, seed: int, budget: int = DEFAULT_BUDGET) -> TrialReport:
    """Fraction of seeded random ``Y`` holding strictly within ``eps`` of half of the first ``horizon`` elements of ``X``.

    ``bound`` is the Hoeffding failure bound ``2·exp(-2·horizon·eps²)``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    if trials < 1 or horizon < 1:
        raise PreconditionError("trials and horizon must be positive")
    pos = _positions(X, horizon, budget)
    ok = kernels.lln_trials(seed, pos, trials, eps.numerator, eps.denominator)
    return TrialReport(trials, int(ok), seed, 2 * math.exp(-2 * horizon * float(eps) ** 2), "lln")


# ---------------------------------------------------------------- failure probabilities


@dataclass(frozen=True)
class BlockPlan:
    n: int
    m_n: int
    m_next: int
    N: int
    P: Fraction

    def __post_init__(self):
        if not self.m_n < self.m_next:
            raise PreconditionError("need m_n < m_next")
        if self.N < 1:
            raise PreconditionError("N must be positive")
        if not 0 < Fraction(self.P) <= Fraction(1, 2):
            raise PreconditionError("P must lie in (0, 1/2]")
        if self.n < 1:
            raise PreconditionError("block index must be positive (the error 1/2n needs n >= 1)")

    @property
    def E(self) -> int:
        return math.ceil(self.N * Fraction(self.P))

    @classmethod
    def standard(cls, n: int, m_n: int, m_next: int) -> "BlockPlan":
        N, P = block_parameters(n)
        return cls(n, m_n, m_next, N, P)


def fails(ones: int, k: int, n: int) -> bool:
    """``ones/k - 1/2 > 1/(2n)``, the one-sided bisection failure."""
    return n * (2 * ones - k) > k


def binomial_tail(k: int, n: int) -> Fraction:
    """Exact ``Pr[ones/k - 1/2 > 1/(2n)]`` for ``k`` fair coins."""
    hits = sum(math.comb(k, c) for c in range(k + 1) if fails(c, k, n))
    return Fraction(hits, 2 ** k)


def brute_force_tail(k: int, n: int) -> Fraction:
    """The same probability by enumerating all ``2^k`` outcomes (``k <= 24``)."""
    if k > 24:
        raise PreconditionError("enumeration limited to k <= 24")
    words = np.arange(1 << k, dtype=np.uint32)
    ones = np.zeros(1 << k, dtype=np.int64)
    for b in range(k):
        ones += (words >> np.uint32(b)) & np.uint32(1)
    bad = n * (2 * ones - k) > k
    return Fraction(int(bad.sum()), 1 << k)


def single_fail_rate(k: int, n: int, trials: int, seed: int) -> TrialReport:
    """MC frequency of the failure at a fixed count ``k``; ``bound`` is the Chernoff bound."""
    if trials < 1 or k < 1 or n < 1:
        raise PreconditionError("need k, n, trials >= 1")
    hits = kernels.fail_trials(seed, k, k, n, trials)
    return TrialReport(trials, int(hits), seed, chernoff_bound(k, k / (2 * n)), f"fail k={k} n={n}")


@dataclass(frozen=True)
class FailReport:
    report: TrialReport
    E: int
    k_total: int
    per_m_sum: float
    geometric_sum: float
    closed_form: float
    closed_form_printed: float

    @property
    def slack(self) -> float:
        b = min(self.closed_form, 1.0)
        return 3 * math.sqrt(b * (1 - b) / self.report.trials)

    @property
    def within_bound(self) -> bool | None:
        """Empirical frequency below the closed form plus 3σ; None when the bound exceeds 1."""
        if self.closed_form >= 1:
            return None
        return float(self.report.estimate) <= self.closed_form + self.slack

    def as_dict(self) -> dict:
        return {
            **self.report.as_dict(),
            "E": self.E,
            "k_total": self.k_total,
            "per_m_sum": _dec(self.per_m_sum),
            "geometric_sum": _dec(self.geometric_sum),
            "closed_form": _dec(self.closed_form),
            "closed_form_printed": _dec(self.closed_form_printed),
            "within_bound": self.within_bound,
        }


def fail_rate_vs_bound(plan: BlockPlan, target: Sequence[int], trials: int, seed: int) -> FailReport:
    """Frequency of some failure among prefixes of ``target`` holding at least ``E_n`` elements.

    A random ``X ⊆ J_n`` matters only on ``target``; trial ``t`` assigns the coins of
    ``seeded(mix64(seed, t))`` to the target elements in increasing order. FAIL at a
    prefix with ``k`` elements means ``ones/k - 1/2 > 1/(2n)``.

    Alongside: the Chernoff sum over ``k`` from ``E_n`` to ``|target|``, the infinite
    geometric sum, the bound ``16n²·exp(-E_n/8n²)`` that follows from
    ``1/(1 - e^-x) <= 2/x``, and the same with ``2n²`` in the exponent as printed.
    """
    if trials < 1:
        raise PreconditionError("trials must be positive")
    target = sorted(set(int(t) for t in target))
    if any(not plan.m_n <= t < plan.m_next for t in target):
        raise PreconditionError("target must lie inside the block")
    E, n, K = plan.E, plan.n, len(target)
    if K < E:
        raise PreconditionError(f"target has {K} < E_n = {E} elements")
    hits = kernels.fail_trials(seed, K, E, n, trials)
    x = 1 / (8 * n * n)
    per_m = sum(math.exp(-k * x) for k in range(E, K + 1))
    geometric = math.exp(-E * x) / (1 - math.exp(-x))
    closed = 16 * n * n * math.exp(-E * x)
    printed = 16 * n * n * math.exp(-E / (2 * n * n))
    report = TrialReport(trials, int(hits), seed, closed, f"block n={n}")
    return FailReport(report, E, K, per_m, geometric, closed, printed)
