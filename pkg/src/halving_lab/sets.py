"""Finite descriptions of subsets of the naturals.

A :class:`SetSchema` answers membership for any ``n`` and produces its
characteristic bits on ``[0, stop)`` as a ``uint8`` array. Counting and
enumeration are built on those bit arrays, so scans up to a horizon are linear.

Schemas have one canonical text form, accepted by :func:`parse_schema`::

    finite(3,7)              explicit finite set
    periodic(1,1;1,0)        prefix bits ; period bits
    not(S)  and(S,T)  or(S,T)
    seeded(42)               each n present with probability 1/2
    intervals(factorial;even)
    intervals(geometric 2;odd)
    intervals(table 0 1 2 4 8;even)
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels

DEFAULT_BUDGET = 10**8
# Combined periods above this are not normalised (exact density reports absent).
MAX_PERIOD = 1 << 20


class BudgetExhausted(RuntimeError):
    """A scan needed more of a schema than its horizon budget allows."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


class SchemaSyntaxError(ValueError):
    pass


class SetSchema:
    """Base class. Subclasses implement :meth:`bits` and :meth:`to_text`."""

    def bits(self, stop: int) -> np.ndarray:
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError

    def __contains__(self, n: int) -> bool:
        return bool(self.bits(n + 1)[n])

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class Finite(SetSchema):
    elements: tuple[int, ...]

    def __post_init__(self):
        elems = tuple(sorted(set(int(e) for e in self.elements)))
        if elems and elems[0] < 0:
            raise PreconditionError("finite sets hold naturals only")
        object.__setattr__(self, "elements", elems)

    def bits(self, stop: int) -> np.ndarray:
        out = np.zeros(max(stop, 0), dtype=np.uint8)
        cut = bisect.bisect_left(self.elements, stop)
        if cut:
            out[np.fromiter(self.elements[:cut], dtype=np.int64, count=cut)] = 1
        return out

    def __contains__(self, n: int) -> bool:
        i = bisect.bisect_left(self.elements, n)
        return i < len(self.elements) and self.elements[i] == n

    def to_text(self) -> str:
        return "finite(" + ",".join(map(str, self.elements)) + ")"


@dataclass(frozen=True)
class Periodic(SetSchema):
    """Bits ``prefix`` followed by ``period`` repeated forever."""

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(b) for b in self.prefix))
        object.__setattr__(self, "period", tuple(int(b) for b in self.period))
        if not self.period:
            raise PreconditionError("period must be nonempty")
        if any(b not in (0, 1) for b in self.prefix + self.period):
            raise PreconditionError("bits must be 0 or 1")

    def bits(self, stop: int) -> np.ndarray:
        stop = max(stop, 0)
        head = np.array(self.prefix[:stop], dtype=np.uint8)
        rest = stop - head.size
        if rest <= 0:
            return head
        reps = -(-rest // len(self.period))
        tail = np.tile(np.array(self.period, dtype=np.uint8), reps)[:rest]
        return np.concatenate((head, tail))

    def __contains__(self, n: int) -> bool:
        if n < len(self.prefix):
            return bool(self.prefix[n])
        return bool(self.period[(n - len(self.prefix)) % len(self.period)])

    def to_text(self) -> str:
        return "periodic(" + ",".join(map(str, self.prefix)) + ";" + ",".join(map(str, self.period)) + ")"


class IntervalPartition:
    """Interval partition of the naturals with lazily generated boundaries.

    ``boundary(0) == 0`` and boundaries are strictly increasing; interval ``k``
    is ``[boundary(k), boundary(k + 1))``. Generated boundaries are memoised
    under a lock so concurrent readers see one consistent list.
    """

    GENERATORS = ("factorial", "geometric", "arith", "table")

    def __init__(self, name: str, args: Sequence[int] = (), budget: int = 10**6):
        if name not in self.GENERATORS:
            raise PreconditionError(f"unknown boundary generator {name!r}")
        self.name = name
        self.args = tuple(int(a) for a in args)
        self.budget = budget
        self._lock = threading.Lock()
        if name == "table":
            table = list(self.args)
            if not table or table[0] != 0:
                raise PreconditionError("boundary table must start at 0")
            if any(b <= a for a, b in zip(table, table[1:])):
                raise PreconditionError("boundaries must be strictly increasing")
            self._memo = table
        else:
            if name == "geometric" and (len(self.args) != 1 or self.args[0] < 2):
                raise PreconditionError("geometric needs one ratio >= 2")
            if name == "arith" and (len(self.args) != 1 or self.args[0] < 1):
                raise PreconditionError("arith needs one step >= 1")
            if name == "factorial" and self.args:
                raise PreconditionError("factorial takes no arguments")
            self._memo = [0]

    @classmethod
    def from_table(cls, boundaries: Iterable[int]) -> "IntervalPartition":
        return cls("table", list(boundaries))

    def _generate(self, k: int) -> int:
        if self.name == "factorial":
            return math.factorial(k)
        if self.name == "geometric":
            return self.args[0] ** (k - 1)
        return self.args[0] * k  # arith

    def _extend_to(self, predicate) -> None:
        with self._lock:
            memo = self._memo
            while not predicate(memo):
                if self.name == "table":
                    raise BudgetExhausted(f"boundary table ends at {memo[-1]}")
                if len(memo) >= self.budget:
                    raise BudgetExhausted(f"more than {self.budget} boundaries requested")
                nxt = self._generate(len(memo))
                if nxt <= memo[-1]:
                    raise PreconditionError("generator is not strictly increasing")
                memo.append(nxt)

    def boundary(self, k: int) -> int:
        self._extend_to(lambda memo: len(memo) > k)
        return self._memo[k]

    def boundaries_covering(self, horizon: int) -> list[int]:
        """All boundaries up to and including the first one ``>= horizon``."""
        self._extend_to(lambda memo: memo[-1] >= horizon)
        memo = self._memo
        cut = bisect.bisect_left(memo, horizon)
        return memo[: cut + 1]

    def boundaries_below(self, horizon: int) -> list[int]:
        """Boundaries ``<= horizon`` that are known without further generation."""
        if self.name != "table":
            try:
                return [b for b in self.boundaries_covering(horizon) if b <= horizon]
            except BudgetExhausted:
                pass
        memo = list(self._memo)
        return memo[: bisect.bisect_right(memo, horizon)]

    def interval_of(self, n: int) -> int:
        bounds = self.boundaries_covering(n + 1)
        return bisect.bisect_right(bounds, n) - 1

    def to_text(self) -> str:
        return " ".join([self.name, *map(str, self.args)])

    def __eq__(self, other):
        return isinstance(other, IntervalPartition) and (self.name, self.args) == (other.name, other.args)

    def __hash__(self):
        return hash((self.name, self.args))

    def __repr__(self):
        return f"IntervalPartition({self.to_text()!r})"


@dataclass(frozen=True)
class Intervals(SetSchema):
    """Union of the even- (or odd-) indexed intervals of a partition."""

    partition: IntervalPartition
    parity: str = "even"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise PreconditionError("parity must be 'even' or 'odd'")

    def bits(self, stop: int) -> np.ndarray:
        stop = max(stop, 0)
        if stop == 0:
            return np.zeros(0, dtype=np.uint8)
        bounds = np.array(self.partition.boundaries_covering(stop), dtype=np.int64)
        block = np.searchsorted(bounds, np.arange(stop, dtype=np.int64), side="right") - 1
        want = 0 if self.parity == "even" else 1
        return ((block & 1) == want).astype(np.uint8)

    def __contains__(self, n: int) -> bool:
        k = self.partition.interval_of(n)
        return (k % 2 == 0) == (self.parity == "even")

    def to_text(self) -> str:
        return f"intervals({self.partition.to_text()};{self.parity})"


@dataclass(frozen=True)
class Complement(SetSchema):
    inner: SetSchema

    def bits(self, stop: int) -> np.ndarray:
        return 1 - self.inner.bits(stop)

    def __contains__(self, n: int) -> bool:
        return n not in self.inner

    def to_text(self) -> str:
        return f"not({self.inner.to_text()})"


@dataclass(frozen=True)
class Union(SetSchema):
    left: SetSchema
    right: SetSchema

    def bits(self, stop: int) -> np.ndarray:
        return self.left.bits(stop) | self.right.bits(stop)

    def __contains__(self, n: int) -> bool:
        return n in self.left or n in self.right

    def to_text(self) -> str:
        return f"or({self.left.to_text()},{self.right.to_text()})"


@dataclass(frozen=True)
class Intersection(SetSchema):
    left: SetSchema
    right: SetSchema

    def bits(self, stop: int) -> np.ndarray:
        return self.left.bits(stop) & self.right.bits(stop)

    def __contains__(self, n: int) -> bool:
        return n in self.left and n in self.right

    def to_text(self) -> str:
        return f"and({self.left.to_text()},{self.right.to_text()})"


@dataclass(frozen=True)
class Seeded(SetSchema):
    """Pseudo-random set: ``n`` is a member iff the low bit of ``mix64(seed, n)`` is set."""

    seed: int

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise PreconditionError("seed must be an unsigned 64-bit integer")

    def bits(self, stop: int) -> np.ndarray:
        return kernels.seeded_bits(self.seed, 0, max(stop, 0))

    def __contains__(self, n: int) -> bool:
        return bool(kernels.mix64(self.seed, n) & 1)

    def to_text(self) -> str:
        return f"seeded({self.seed})"


@dataclass(frozen=True)
class ChoppedReal:
    """A bit source paired with an interval partition."""

    bits: SetSchema
    partition: IntervalPartition


# ---------------------------------------------------------------- shorthands


def omega() -> Periodic:
    return Periodic((), (1,))


def empty() -> Periodic:
    return Periodic((), (0,))


def multiples(k: int) -> Periodic:
    if k < 1:
        raise PreconditionError("k must be positive")
    return Periodic((), (1,) + (0,) * (k - 1))


def evens() -> Periodic:
    return multiples(2)


def odds() -> Periodic:
    return Periodic((), (0, 1))


def residues(modulus: int, allowed: Iterable[int]) -> Periodic:
    allowed = {a % modulus for a in allowed}
    return Periodic((), tuple(int(i in allowed) for i in range(modulus)))


# ---------------------------------------------------------------- structure


def periodic_form(X: SetSchema) -> Periodic | None:
    """Eventually periodic normal form for boolean combinations of periodic/finite schemas."""
    if isinstance(X, Periodic):
        return X
    if isinstance(X, Finite):
        top = X.elements[-1] + 1 if X.elements else 0
        return Periodic(tuple(X.bits(top).tolist()), (0,))
    if isinstance(X, Complement):
        inner = periodic_form(X.inner)
        if inner is None:
            return None
        return Periodic(tuple(1 - b for b in inner.prefix), tuple(1 - b for b in inner.period))
    if isinstance(X, (Union, Intersection)):
        a, b = periodic_form(X.left), periodic_form(X.right)
        if a is None or b is None:
            return None
        head = max(len(a.prefix), len(b.prefix))
        period = math.lcm(len(a.period), len(b.period))
        if period > MAX_PERIOD:
            return None
        op = np.bitwise_or if isinstance(X, Union) else np.bitwise_and
        bits = op(a.bits(head + period), b.bits(head + period)).tolist()
        return Periodic(tuple(bits[:head]), tuple(bits[head:]))
    return None


def is_finite(X: SetSchema) -> bool | None:
    """True/False when decidable from the schema, None otherwise."""
    form = periodic_form(X)
    if form is not None:
        return not any(form.period)
    if isinstance(X, (Seeded, Intervals)):
        return False
    if isinstance(X, Complement):
        return _is_cofinite(X.inner)
    if isinstance(X, Union):
        l, r = is_finite(X.left), is_finite(X.right)
        if l is False or r is False:
            return False
        return True if (l and r) else None
    if isinstance(X, Intersection):
        l, r = is_finite(X.left), is_finite(X.right)
        if l or r:
            return True
        return None
    return None


def _is_cofinite(X: SetSchema) -> bool | None:
    form = periodic_form(X)
    if form is not None:
        return all(form.period)
    if isinstance(X, (Seeded, Intervals)):
        return False
    if isinstance(X, Complement):
        return is_finite(X.inner)
    return None


def require_infinite(X: SetSchema, what: str = "X") -> None:
    if is_finite(X):
        raise PreconditionError(f"{what} must be infinite, got {X.to_text()}")


# ---------------------------------------------------------------- operations


def membership(X: SetSchema, n: int) -> bool:
    if n < 0:
        raise PreconditionError("n must be a natural number")
    return n in X


def prefix_counts(X: SetSchema, stop: int) -> np.ndarray:
    """``c[n] = |X ∩ [0, n)|`` for ``0 <= n <= stop`` (length ``stop + 1``)."""
    out = np.zeros(stop + 1, dtype=np.int64)
    np.cumsum(X.bits(stop), out=out[1:])
    return out


def count_below(X: SetSchema, n: int) -> int:
    if n < 0:
        raise PreconditionError("n must be a natural number")
    if isinstance(X, Finite):
        return bisect.bisect_left(X.elements, n)
    return int(X.bits(n).sum(dtype=np.int64))


def enumerate_prefix(X: SetSchema, count: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """The ``count`` smallest elements of ``X`` in increasing order."""
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    if isinstance(X, Finite):
        if len(X.elements) < count:
            raise PreconditionError(f"finite set has only {len(X.elements)} elements")
        return np.array(X.elements[:count], dtype=np.int64)
    if is_finite(X):
        total = count_below(X, len(periodic_form(X).prefix))
        if total < count:
            raise PreconditionError(f"finite set has only {total} elements")
    stop = max(64, 2 * count)
    while True:
        scan = min(stop, budget)
        members = np.flatnonzero(X.bits(scan))
        if members.size >= count:
            return members[:count].astype(np.int64)
        if scan >= budget:
            raise BudgetExhausted(f"fewer than {count} elements below budget {budget}")
        stop *= 2


def kth_element(X: SetSchema, k: int, budget: int = DEFAULT_BUDGET) -> int:
    """The element of index ``k`` (0-based) in the increasing enumeration of ``X``."""
    if k < 0:
        raise PreconditionError("k must be a natural number")
    return int(enumerate_prefix(X, k + 1, budget)[k])


def matches(y: SetSchema, c: ChoppedReal, horizon: int) -> list[int]:
    """Indices ``k`` with ``y`` and ``c.bits`` equal on interval ``k``, for intervals inside ``[0, horizon)``."""
    bounds = c.partition.boundaries_below(horizon)
    if len(bounds) < 2:
        return []
    top = bounds[-1]
    yb, xb = y.bits(top), c.bits.bits(top)
    diff = np.concatenate(([0], np.cumsum(yb != xb)))
    return [k for k, (lo, hi) in enumerate(zip(bounds, bounds[1:])) if diff[hi] == diff[lo]]


# ---------------------------------------------------------------- text form


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise SchemaSyntaxError(f"{msg} at offset {self.pos} in {self.text!r}")

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def word(self) -> str:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            self.error("expected a word")
        return self.text[start:self.pos]

    def natural(self) -> int:
        w = self.word()
        if not w.isdigit():
            self.error(f"expected a natural number, got {w!r}")
        return int(w)

    def nat_list(self, stop: str) -> list[int]:
        out: list[int] = []
        if self.peek() == stop:
            return out
        out.append(self.natural())
        while self.peek() == ",":
            self.pos += 1
            out.append(self.natural())
        return out

    def schema(self) -> SetSchema:
        name = self.word()
        self.expect("(")
        if name == "finite":
            node: SetSchema = Finite(tuple(self.nat_list(")")))
        elif name == "periodic":
            prefix = self.nat_list(";")
            self.expect(";")
            period = self.nat_list(")")
            node = Periodic(tuple(prefix), tuple(period))
        elif name == "not":
            node = Complement(self.schema())
        elif name in ("and", "or"):
            left = self.schema()
            self.expect(",")
            right = self.schema()
            node = Intersection(left, right) if name == "and" else Union(left, right)
        elif name == "seeded":
            node = Seeded(self.natural())
        elif name == "intervals":
            gen = self.word()
            args = []
            while self.peek() not in (";", ")", ""):
                args.append(self.natural())
            parity = "even"
            if self.peek() == ";":
                self.pos += 1
                parity = self.word()
            node = Intervals(IntervalPartition(gen, args), parity)
        else:
            self.error(f"unknown schema {name!r}")
        self.expect(")")
        return node


def parse_schema(text: str) -> SetSchema:
    p = _Parser(text)
    try:
        node = p.schema()
    except PreconditionError as exc:
        raise SchemaSyntaxError(f"{exc} in {text!r}") from exc
    if p.peek():
        p.error("trailing input")
    return node
