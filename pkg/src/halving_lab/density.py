"""Exact initial densities and finite-window surrogates for lower/upper density.

Nothing in this module touches floating point on the value path: every
density is a :class:`fractions.Fraction`. Windows report what was seen, never
a claimed limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .sets import PreconditionError, SetSchema, Intersection, count_below, periodic_form, prefix_counts, require_infinite


@dataclass(frozen=True)
class DensityWindow:
    start: int
    stop: int
    min_seen: Fraction
    max_seen: Fraction
    last: Fraction


@dataclass(frozen=True)
class Moderacy:
    """``exact`` is True when the verdict is proved from an exact density."""

    exact: bool
    moderate: bool
    window: DensityWindow | None = None

    def __str__(self):
        return f"{'Exact' if self.exact else 'Estimated'}({self.moderate})"


def initial_density(X: SetSchema, n: int) -> Fraction:
    if n < 1:
        raise PreconditionError("initial density needs n >= 1")
    return Fraction(count_below(X, n), n)


def relative_density(S: SetSchema, X: SetSchema, n: int) -> Fraction:
    """``|S ∩ X ∩ n| / |X ∩ n|``."""
    base = count_below(X, n)
    if base == 0:
        raise PreconditionError(f"X ∩ {n} is empty")
    return Fraction(count_below(Intersection(S, X), n), base)


def _exact_extreme(num: np.ndarray, den: np.ndarray, pick_max: bool) -> Fraction:
    # float pass narrows the field, exact comparison decides
    approx = num / den
    target = approx.max() if pick_max else approx.min()
    close = np.flatnonzero(np.abs(approx - target) <= 1e-9)
    values = [Fraction(int(num[i]), int(den[i])) for i in close]
    return max(values) if pick_max else min(values)


def density_window(X: SetSchema, start: int, stop: int) -> DensityWindow:
    """Min, max and last of ``d_n(X)`` over ``n`` in ``[start, stop]``."""
    if not 1 <= start < stop:
        raise PreconditionError("need 1 <= start < stop")
    counts = prefix_counts(X, stop)[start:]
    ns = np.arange(start, stop + 1, dtype=np.int64)
    return DensityWindow(
        start,
        stop,
        _exact_extreme(counts, ns, pick_max=False),
        _exact_extreme(counts, ns, pick_max=True),
        Fraction(int(counts[-1]), stop),
    )


def exact_density(X: SetSchema) -> Fraction | None:
    """Asymptotic density for boolean combinations of periodic and finite schemas."""
    form = periodic_form(X)
    if form is None:
        return None
    return Fraction(sum(form.period), len(form.period))


def is_moderate(X: SetSchema, window: tuple[int, int] = (10, 10_000), margin: Fraction = Fraction(1, 10)) -> Moderacy:
    """Moderacy: lower density > 0 and upper density < 1.

    With an exact density the verdict is exact. Otherwise the window is scanned
    and the set counts as moderate when every sampled ``d_n`` stays inside
    ``[margin, 1 - margin]``.
    """
    require_infinite(X)
    d = exact_density(X)
    if d is not None:
        return Moderacy(True, 0 < d < 1)
    w = density_window(X, *window)
    return Moderacy(False, w.min_seen >= margin and w.max_seen <= 1 - margin, w)
