"""Finite conditions approximating a 1/2-independent family, and their algebra.

A condition ``p = (F, n, a, eps)`` holds finitely many sets ``a_α ⊆ [0, n)`` for
ids ``α`` in ``F`` and an error budget ``eps(f)`` for every partial function
``f: F ⇀ {0, 1}``. Partial functions are keyed by sorted tuples of
``(α, bit)`` pairs, written ``"5:1,9:0"`` in text (the empty one is ``""``).

Clauses checked by :func:`validate`:

* C1 ``F`` is a finite set of naturals
* C2 ``n >= 1``
* C3 ``dom(a) = F`` and every ``a_α ⊆ [0, n)``
* C4 ``eps(f) <= eps(g)`` whenever ``f ⊆ g``
* C5 ``| |b_f|/n - 2^-|dom f| | < eps(f)/8`` for every ``f``
* C6 ``2^(2|F|)/n < eps(∅)/8``

``q <= p`` (:func:`leq`) additionally needs D1 ``F^p ⊆ F^q``, D2 ``n^p <= n^q``,
D3 ``a^q_α ∩ n^p = a^p_α``, D4 ``eps^q(f) <= eps^p(f)`` and D5: the density error
of every trace over ``F^p`` stays below ``eps^p(f)`` at every ``i`` in ``[n^p, n^q]``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .rationals import format_rational, parse_rational
from .sets import PreconditionError

Key = tuple[tuple[int, int], ...]

FRESH_EPS = Fraction(16)
MAX_INDICES = 8
# extensions asking for more points than this are refused
MAX_N = 1 << 26


class MalformedCondition(ValueError):
    pass


class HypothesisError(PreconditionError):
    """Inputs to an extension step violate the extension lemma's hypotheses."""


class InvariantBreach(RuntimeError):
    """An extension produced a condition that fails its own postconditions."""


# ---------------------------------------------------------------- partial functions


def partial_functions(F: Sequence[int], max_dom: int | None = None) -> list[Key]:
    """All partial functions ``F ⇀ {0,1}``, ordered by domain size then lexicographically."""
    F = sorted(F)
    top = len(F) if max_dom is None else min(max_dom, len(F))
    out: list[Key] = []
    for size in range(top + 1):
        for dom in itertools.combinations(F, size):
            for bits in itertools.product((0, 1), repeat=size):
                out.append(tuple(zip(dom, bits)))
    return sorted(out, key=lambda k: (len(k), k))


def key_text(f: Key) -> str:
    return ",".join(f"{a}:{b}" for a, b in f)


def parse_key(text: str) -> Key:
    text = text.strip()
    if not text:
        return ()
    pairs = []
    for part in text.split(","):
        a, _, b = part.partition(":")
        if b.strip() not in ("0", "1"):
            raise MalformedCondition(f"bad partial function {text!r}")
        pairs.append((int(a), int(b)))
    key = tuple(sorted(pairs))
    if len({a for a, _ in key}) != len(key):
        raise MalformedCondition(f"repeated index in {text!r}")
    return key


def _sub_keys(f: Key) -> Iterable[Key]:
    for i in range(len(f)):
        yield f[:i] + f[i + 1:]


# ---------------------------------------------------------------- conditions


def _frozen_bits(bits) -> np.ndarray:
    arr = np.ascontiguousarray(bits, dtype=np.uint8)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Condition:
    F: tuple[int, ...]
    n: int
    a: Mapping[int, np.ndarray]
    eps: Mapping[Key, Fraction]

    def __post_init__(self):
        if len(self.F) > MAX_INDICES + 24:
            raise MalformedCondition("too many indices for the signature width")
        if set(self.eps) != set(partial_functions(self.F)):
            raise MalformedCondition("eps must be defined on exactly the partial functions over F")
        if any(not isinstance(v, Fraction) or v <= 0 for v in self.eps.values()):
            raise MalformedCondition("eps values must be positive Fractions")

    @cached_property
    def signature(self) -> np.ndarray:
        """Per point, bit ``j`` set iff the point lies in ``a`` of the ``j``-th id of ``F``."""
        sig = np.zeros(self.n, dtype=np.uint32)
        for j, alpha in enumerate(self.F):
            bits = self.a.get(alpha)
            if bits is not None and len(bits) == self.n:
                sig |= bits.astype(np.uint32) << np.uint32(j)
        return sig

    def mask_val(self, f: Key) -> tuple[int, int]:
        pos = {alpha: j for j, alpha in enumerate(self.F)}
        mask = val = 0
        for alpha, bit in f:
            mask |= 1 << pos[alpha]
            val |= bit << pos[alpha]
        return mask, val

    def members(self, alpha: int) -> list[int]:
        return np.flatnonzero(self.a[alpha]).tolist()

    def __eq__(self, other):
        if not isinstance(other, Condition):
            return NotImplemented
        return (
            self.F == other.F
            and self.n == other.n
            and dict(self.eps) == dict(other.eps)
            and all(np.array_equal(self.a[x], other.a[x]) for x in self.F)
        )

    __hash__ = None  # type: ignore[assignment]


def make_condition(F: Iterable[int], n: int, a: Mapping[int, Iterable[int]], eps: Mapping) -> Condition:
    """Build from member lists (``a``) and eps keyed by :data:`Key` or key text."""
    F = tuple(sorted(F))
    bits = {}
    for alpha, members in a.items():
        b = np.zeros(n, dtype=np.uint8)
        idx = np.asarray(list(members), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise MalformedCondition(f"a_{alpha} is not a subset of [0, {n})")
        b[idx] = 1
        bits[int(alpha)] = _frozen_bits(b)
    e = {(parse_key(k) if isinstance(k, str) else tuple(k)): parse_rational(v) if isinstance(v, str) else Fraction(v) for k, v in eps.items()}
    return Condition(F, int(n), bits, e)


def trivial(n: int = 1, eps0=FRESH_EPS) -> Condition:
    return Condition((), n, {}, {(): Fraction(eps0)})


# ---------------------------------------------------------------- traces and clauses


@dataclass(frozen=True)
class BooleanTrace:
    f: Key
    members: frozenset


def boolean_trace(p: Condition, f: Key) -> BooleanTrace:
    if any(alpha not in p.F for alpha, _ in f):
        raise PreconditionError(f"partial function {key_text(f)!r} mentions ids outside F")
    mask, val = p.mask_val(f)
    hit = (p.signature & np.uint32(mask)) == np.uint32(val)
    return BooleanTrace(f, frozenset(np.flatnonzero(hit).tolist()))


def trace_counts(p: Condition, max_dom: int | None = None) -> dict[Key, int]:
    """``|b_f|`` for every partial function ``f`` (up to ``max_dom`` in domain size)."""
    k = len(p.F)
    full = np.bincount(p.signature, minlength=1 << k).astype(np.int64)
    idx = np.arange(1 << k, dtype=np.int64)
    projected: dict[int, np.ndarray] = {}
    out = {}
    for f in partial_functions(p.F, max_dom):
        mask, val = p.mask_val(f)
        if mask not in projected:
            projected[mask] = np.bincount(idx & mask, weights=full, minlength=1 << k).astype(np.int64)
        out[f] = int(projected[mask][val])
    return out


def c5_errors(p: Condition, max_dom: int | None = None) -> dict[Key, Fraction]:
    """``| |b_f|/n - 2^-|dom f| |`` for every ``f``."""
    return {f: abs(Fraction(c, p.n) - Fraction(1, 1 << len(f))) for f, c in trace_counts(p, max_dom).items()}


def validate(p: Condition) -> list[str]:
    """Violated clauses, each as ``"Ck: detail"``; empty means valid."""
    out = []
    if any(not isinstance(x, int) or x < 0 for x in p.F) or list(p.F) != sorted(set(p.F)):
        out.append("C1: F must be a sorted set of naturals")
    if not isinstance(p.n, int) or p.n < 1:
        out.append("C2: n must be a positive natural")
        return out
    if set(p.a) != set(p.F):
        out.append("C3: dom(a) must equal F")
        return out
    for alpha in p.F:
        bits = p.a[alpha]
        if len(bits) != p.n or (bits > 1).any():
            out.append(f"C3: a_{alpha} is not a subset of [0, {p.n})")
            return out
    for g in p.eps:
        for f in _sub_keys(g):
            if p.eps[f] > p.eps[g]:
                out.append(f"C4: eps({key_text(f)}) > eps({key_text(g)})")
                break
        else:
            continue
        break
    for f, c in trace_counts(p).items():
        e, scale = p.eps[f], 1 << len(f)
        # |c/n - 1/scale| < e/8, cross-multiplied
        if not abs(c * scale - p.n) * 8 * e.denominator < e.numerator * p.n * scale:
            err = abs(Fraction(c, p.n) - Fraction(1, scale))
            out.append(f"C5: error {format_rational(err)} at f={key_text(f)!r} not below {format_rational(e / 8)}")
            break
    if not Fraction(1 << (2 * len(p.F)), p.n) < p.eps[()] / 8:
        out.append(f"C6: 4^|F|/n = {format_rational(Fraction(1 << (2 * len(p.F)), p.n))} not below eps/8")
    return out


@dataclass(frozen=True)
class OrderCheck:
    holds: bool
    clause: str | None = None
    detail: str = ""

    def __bool__(self):
        return self.holds


def leq(q: Condition, p: Condition) -> OrderCheck:
    """Whether ``q <= p`` (``q`` extends ``p``), with the first failing clause."""
    if not set(p.F) <= set(q.F):
        return OrderCheck(False, "D1", "F^p is not contained in F^q")
    if p.n > q.n:
        return OrderCheck(False, "D2", "n^p > n^q")
    for alpha in p.F:
        if not np.array_equal(q.a[alpha][: p.n], p.a[alpha]):
            return OrderCheck(False, "D3", f"a_{alpha} changes below n^p")
    for f in partial_functions(p.F):
        if q.eps[f] > p.eps[f]:
            return OrderCheck(False, "D4", f"eps grows at f={key_text(f)!r}")
    sig = q.signature
    for f in partial_functions(p.F):
        mask, val = q.mask_val(f)
        e = p.eps[f]
        bad = kernels.d5_first_violation(sig, mask, val, len(f), e.numerator, e.denominator, p.n, q.n)
        if bad >= 0:
            return OrderCheck(False, "D5", f"density error at i={bad} for f={key_text(f)!r}")
    return OrderCheck(True)


def restrict(p: Condition, E: Iterable[int]) -> Condition:
    E = set(E)
    F = tuple(x for x in p.F if x in E)
    return Condition(F, p.n, {x: p.a[x] for x in F}, {f: p.eps[f] for f in partial_functions(F)})


# ---------------------------------------------------------------- extension


def phase2_pattern(count: int, length: int) -> np.ndarray:
    """Row ``ℓ`` marks offsets ``o < length`` whose bit ``ℓ`` is 0 (blocks of ``2^ℓ`` on, ``2^ℓ`` off)."""
    o = np.arange(length, dtype=np.int64)
    return np.stack([((o >> l) & 1) == 0 for l in range(count)]).astype(np.uint8) if count else np.zeros((0, length), np.uint8)


def phase2_order(Fp: Sequence[int], Fp_shared: Sequence[int], Fq: Sequence[int]) -> list[int]:
    """Ids in the order their phase-2 patterns are assigned.

    Shared ids first, then ids only in ``Fp`` and only in ``Fq`` alternate for as long as
    both last, then the rest ascending.
    """
    shared = sorted(Fp_shared)
    only_p = sorted(set(Fp) - set(shared))
    only_q = sorted(set(Fq) - set(shared))
    t = min(len(only_p), len(only_q))
    order = list(shared)
    for l in range(t):
        order += [only_p[l], only_q[l]]
    order += sorted(only_p[t:] + only_q[t:])
    return order


def _assemble_eps(p: Condition, p_shared: Sequence[int], qprime: Condition, target: Mapping[Key, Fraction], F: Sequence[int]) -> dict[Key, Fraction]:
    shared = set(p_shared)
    out = {}
    for f in partial_functions(F):
        dom = {alpha for alpha, _ in f}
        if dom <= shared:
            out[f] = min(target[f], qprime.eps[f])
        elif dom <= set(p.F):
            out[f] = target[f]
        elif dom <= set(qprime.F):
            out[f] = qprime.eps[f]
        else:
            out[f] = FRESH_EPS
    return out


def minimal_horizon(n_qprime: int, m: int, size: int, eps0: Fraction) -> int:
    """Least ``n >= max(m, n^{q'})`` with ``2^size | n - n^{q'}``, ``n^{q'}/n < eps0/8`` and ``4^size/n < eps0/8``."""
    num, den = eps0.numerator, eps0.denominator
    need = max(m, n_qprime, (8 * n_qprime * den) // num + 1, (8 * (1 << (2 * size)) * den) // num + 1)
    step = 1 << size
    return n_qprime + -(-(need - n_qprime) // step) * step


def _phase1_bits(qprime: Condition, shared: Sequence[int], n_p: int, fresh_count: int) -> np.ndarray:
    # (fresh_count, n^{q'} - n^p): inside each class c_f (points with the same trace over
    # the shared ids), the ℓ-th fresh id takes ranks whose bit ℓ is 0
    lo, hi = n_p, qprime.n
    if hi <= lo or fresh_count == 0:
        return np.zeros((fresh_count, max(hi - lo, 0)), dtype=np.uint8)
    mask, _ = qprime.mask_val(tuple((x, 1) for x in shared))
    cls = (qprime.signature[lo:hi] & np.uint32(mask)).astype(np.int64)
    order = np.argsort(cls, kind="stable")
    sorted_cls = cls[order]
    starts = np.flatnonzero(np.concatenate(([True], sorted_cls[1:] != sorted_cls[:-1])))
    group_start = np.repeat(starts, np.diff(np.append(starts, len(cls))))
    rank = np.empty(len(cls), dtype=np.int64)
    rank[order] = np.arange(len(cls)) - group_start
    return np.stack([((rank >> l) & 1) == 0 for l in range(fresh_count)]).astype(np.uint8)


def _check_target(p: Condition, target: Mapping[Key, Fraction]) -> dict[Key, Fraction]:
    keys = partial_functions(p.F)
    if set(target) != set(keys):
        raise HypothesisError("eps_target must be defined on every partial function over F^p")
    target = {f: Fraction(v) for f, v in target.items()}
    for f in keys:
        if target[f] <= 0:
            raise HypothesisError("eps_target values must be positive")
        if target[f] > p.eps[f]:
            raise HypothesisError(f"eps_target exceeds eps^p at f={key_text(f)!r}")
        if any(target[s] > target[f] for s in _sub_keys(f)):
            raise HypothesisError(f"eps_target is not monotone at f={key_text(f)!r}")
    return target


def extend(p: Condition, E: Iterable[int], qprime: Condition, m: int, eps_target: Mapping[Key, Fraction], check: bool = True) -> Condition:
    """Common extension ``q`` of ``p`` and ``q' <= p↾E`` with ``n^q >= m``.

    ``n^q`` is the least value meeting the size requirements. Ids of ``p`` outside ``E``
    are filled on ``[n^p, n^{q'})`` class by class, then every id gets a binary-counter
    pattern on ``[n^q', n^q)``. With ``check`` the result is validated and both order
    relations are verified; a failure raises :class:`InvariantBreach`.
    """
    E = set(E)
    bad = validate(p)
    if bad:
        raise HypothesisError(f"p is not a condition: {bad[0]}")
    bad = validate(qprime)
    if bad:
        raise HypothesisError(f"q' is not a condition: {bad[0]}")
    if not set(qprime.F) <= E:
        raise HypothesisError("F^{q'} must be contained in E")
    p_res = restrict(p, E)
    rel = leq(qprime, p_res)
    if not rel:
        raise HypothesisError(f"q' does not extend p restricted to E ({rel.clause}: {rel.detail})")
    target = _check_target(p, eps_target)

    F = tuple(sorted(set(p.F) | set(qprime.F)))
    if len(F) > MAX_INDICES:
        raise HypothesisError(f"|F| = {len(F)} exceeds the cap {MAX_INDICES}")
    shared = p_res.F
    eps = _assemble_eps(p, shared, qprime, target, F)
    for g in eps:
        for f in _sub_keys(g):
            if eps[f] > eps[g]:
                raise HypothesisError(
                    f"assembled eps breaks monotonicity at {key_text(f)!r} ⊆ {key_text(g)!r}; "
                    f"eps values above {FRESH_EPS} cannot sit below fresh partial functions"
                )
    n = minimal_horizon(qprime.n, m, len(F), eps[()])
    if n > MAX_N:
        raise HypothesisError(f"extension needs n = {n} > {MAX_N}")

    fresh = [x for x in p.F if x not in E]
    ph1 = _phase1_bits(qprime, shared, p.n, len(fresh))
    order = phase2_order(p.F, shared, qprime.F)
    ph2 = phase2_pattern(len(order), n - qprime.n)
    row = {alpha: l for l, alpha in enumerate(order)}

    a = {}
    for alpha in F:
        bits = np.empty(n, dtype=np.uint8)
        if alpha in qprime.a:
            bits[: qprime.n] = qprime.a[alpha]
        else:
            bits[: p.n] = p.a[alpha]
            bits[p.n: qprime.n] = ph1[fresh.index(alpha)]
        bits[qprime.n:] = ph2[row[alpha]]
        a[alpha] = _frozen_bits(bits)
    q = Condition(F, n, a, eps)

    if check:
        bad = validate(q)
        if bad:
            raise InvariantBreach(f"extension is not a condition: {bad[0]}")
        for parent, name in ((p, "p"), (qprime, "q'")):
            rel = leq(q, parent)
            if not rel:
                raise InvariantBreach(f"extension does not extend {name}: {rel.clause} {rel.detail}")
    return q


def amalgamate(p: Condition, q: Condition, check: bool = True) -> Condition:
    """Common extension of two conditions that agree on their shared part."""
    if p.n != q.n:
        raise HypothesisError("conditions must share n")
    shared = set(p.F) & set(q.F)
    for alpha in shared:
        if not np.array_equal(p.a[alpha], q.a[alpha]):
            raise HypothesisError(f"a_{alpha} differs between the conditions")
    for f in partial_functions(sorted(shared)):
        if p.eps[f] != q.eps[f]:
            raise HypothesisError(f"eps differs at f={key_text(f)!r}")
    return extend(p, q.F, q, p.n, p.eps, check)


def single_index(alpha: int, n_floor: int, eps0: Fraction, seed: int) -> Condition:
    """A one-id condition with seeded members and the least ``n >= n_floor`` meeting C6."""
    eps0 = Fraction(eps0)
    n = max(n_floor, (8 * 4 * eps0.denominator) // eps0.numerator + 1)
    bits = _frozen_bits(kernels.seeded_bits(seed, 0, n))
    eps = {(): eps0, ((alpha, 0),): FRESH_EPS, ((alpha, 1),): FRESH_EPS}
    return Condition((alpha,), n, {alpha: bits}, eps)


# ---------------------------------------------------------------- generic runs


@dataclass(frozen=True)
class RoundReport:
    round: int
    action: str
    F: tuple[int, ...]
    n: int
    eps0: Fraction
    worst_f: Key
    worst_error: Fraction
    worst_bound: Fraction

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "action": self.action,
            "F": list(self.F),
            "n": self.n,
            "eps0": format_rational(self.eps0),
            "worst": {
                "f": key_text(self.worst_f),
                "error": format_rational(self.worst_error),
                "bound": format_rational(self.worst_bound),
            },
        }


@dataclass(frozen=True)
class TraceError:
    f: Key
    error: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.error < self.bound

    def as_dict(self) -> dict:
        return {"f": key_text(self.f), "error": format_rational(self.error), "bound": format_rational(self.bound), "ok": self.ok}


@dataclass(frozen=True)
class RunReport:
    rounds: tuple[RoundReport, ...]
    final: Condition
    errors: tuple[TraceError, ...]

    def as_dict(self) -> dict:
        return {
            "rounds": [r.as_dict() for r in self.rounds],
            "final": {"F": list(self.final.F), "n": self.final.n},
            "errors": [e.as_dict() for e in self.errors],
        }


def _round_report(r: int, action: str, p: Condition, cap: int) -> RoundReport:
    errs = c5_errors(p, cap)
    # first maximum in canonical order
    worst = max(errs, key=lambda f: errs[f] / p.eps[f])
    return RoundReport(r, action, p.F, p.n, p.eps[()], worst, errs[worst], p.eps[worst] / 8)


def apply_step(p: Condition, step: Mapping, seed: int) -> tuple[Condition, str]:
    """One schedule step: ``{"op": "add", "index": α}``, ``{"op": "push", "m": N, "eps": "p/q"}`` or ``{"op": "hold"}``."""
    op = step.get("op")
    if op == "add":
        alpha = int(step["index"])
        if alpha in p.F:
            return p, f"add {alpha} (present)"
        qp = single_index(alpha, p.n, p.eps[()], kernels.mix64(seed, alpha))
        return extend(p, {alpha}, qp, p.n, p.eps), f"add {alpha}"
    if op == "push":
        cap = parse_rational(step.get("eps", "16"))
        target = {f: min(cap, v) for f, v in p.eps.items()}
        base = restrict(p, ())
        return extend(p, (), base, int(step.get("m", p.n)), target), f"push m={int(step.get('m', p.n))} eps<={format_rational(cap)}"
    if op == "hold":
        return p, "hold"
    raise PreconditionError(f"unknown schedule op {op!r}")


def default_schedule(index_count: int, rounds: int, min_horizon: int, eps_final=Fraction(1, 4)) -> list[dict]:
    """Add ids ``0..index_count-1`` one per round, then shrink every eps to
    ``eps_final`` while pushing ``n`` to ``min_horizon``, then hold."""
    if index_count < 1:
        raise PreconditionError("index_count must be positive")
    if rounds < index_count:
        raise PreconditionError(f"{rounds} rounds cannot include {index_count} indices")
    steps: list[dict] = [{"op": "add", "index": i} for i in range(index_count)]
    if rounds > index_count:
        steps.append({"op": "push", "m": min_horizon, "eps": format_rational(Fraction(eps_final))})
    steps += [{"op": "hold"}] * (rounds - len(steps))
    return steps


def replay(steps: Sequence[Mapping], seed: int, report_cap: int = 3, start: Condition | None = None) -> RunReport:
    p = trivial() if start is None else start
    reports = []
    for r, step in enumerate(steps):
        p, action = apply_step(p, step, seed)
        reports.append(_round_report(r, action, p, report_cap))
    errs = c5_errors(p, report_cap)
    final = tuple(TraceError(f, errs[f], p.eps[f] / 8) for f in errs)
    return RunReport(tuple(reports), p, final)


def generic_run(index_count: int, rounds: int, min_horizon: int, seed: int, eps_final=Fraction(1, 4), report_cap: int = 3) -> RunReport:
    """Grow a family of ``index_count`` sets from the trivial condition and report trace errors."""
    return replay(default_schedule(index_count, rounds, min_horizon, eps_final), seed, report_cap)


# ---------------------------------------------------------------- serialization


def to_json(p: Condition) -> dict:
    return {
        "F": list(p.F),
        "n": p.n,
        "a": {str(alpha): p.members(alpha) for alpha in p.F},
        "eps": [[key_text(f), format_rational(p.eps[f])] for f in partial_functions(p.F)],
    }


def from_json(data: Mapping) -> Condition:
    try:
        return make_condition(data["F"], data["n"], {int(k): v for k, v in data["a"].items()}, {k: v for k, v in data["eps"]})
    except (KeyError, TypeError) as exc:
        raise MalformedCondition(f"bad condition JSON: {exc}") from exc


def dumps(p: Condition) -> str:
    return json.dumps(to_json(p), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------- random inputs


def _least_dyadic_above(x: Fraction) -> Fraction:
    e = Fraction(1, 4)
    while not x < e:
        e *= 2
    return e


def _fill_eps(p_F: Sequence[int], n: int, a: Mapping[int, np.ndarray], rng, fixed: Mapping[Key, Fraction], e0: Fraction) -> Condition:
    # monotone dyadic eps, large enough that every trace meets C5
    probe = Condition(tuple(p_F), n, a, {f: FRESH_EPS for f in partial_functions(p_F)})
    errs = c5_errors(probe)
    eps: dict[Key, Fraction] = {}
    for f in partial_functions(p_F):
        if f in fixed:
            eps[f] = fixed[f]
            continue
        raw = e0 if not f else Fraction(2) ** rng.randint(-2, 4)
        floor = max([eps[s] for s in _sub_keys(f)], default=Fraction(0))
        eps[f] = min(FRESH_EPS, max(raw, floor, _least_dyadic_above(8 * errs[f])))
    return Condition(tuple(p_F), n, a, eps)


def random_condition(rng, ids: Sequence[int] = tuple(range(12)), max_F: int = 5) -> Condition:
    """A valid condition with random members and monotone dyadic eps (``rng``: ``random.Random``)."""
    k = rng.randint(0, max_F)
    F = sorted(rng.sample(list(ids), k))
    e0 = Fraction(2) ** rng.randint(0 if k >= 4 else -1, 4)
    n_min = (8 * (1 << (2 * k)) * e0.denominator) // e0.numerator + 1
    n = n_min + rng.randint(0, n_min)
    gen = np.random.default_rng(rng.getrandbits(64))
    a = {alpha: _frozen_bits(gen.integers(0, 2, n, dtype=np.uint8)) for alpha in F}
    return _fill_eps(F, n, a, rng, {}, e0)


def _random_qprime(p_res: Condition, new_ids: Sequence[int], rng) -> Condition:
    gen = np.random.default_rng(rng.getrandbits(64))
    F = tuple(sorted(set(p_res.F) | set(new_ids)))
    e0 = p_res.eps[()]
    n_min = (8 * (1 << (2 * len(F))) * e0.denominator) // e0.numerator + 1
    n = max(p_res.n + rng.randint(0, p_res.n), n_min)
    a = {}
    for alpha in F:
        bits = gen.integers(0, 2, n, dtype=np.uint8)
        if alpha in p_res.a:
            bits[: p_res.n] = p_res.a[alpha]
        a[alpha] = _frozen_bits(bits)
    return _fill_eps(F, n, a, rng, dict(p_res.eps), e0)


@dataclass(frozen=True)
class ExtendCase:
    p: Condition
    E: frozenset
    qprime: Condition
    m: int
    eps_target: Mapping[Key, Fraction]
    kind: str


def random_extend_case(rng, max_F: int = 6, ids: Sequence[int] = tuple(range(12))) -> ExtendCase:
    """Random inputs meeting every hypothesis of :func:`extend`, with ``|F^p ∪ F^{q'}| <= max_F``."""
    p = random_condition(rng, ids, min(max_F, 5))
    outside = [x for x in ids if x not in p.F]
    room = max_F - len(p.F)
    new = rng.sample(outside, rng.randint(0, min(room, 2, len(outside))))
    E = frozenset(x for x in p.F if rng.random() < 0.5) | frozenset(new)
    p_res = restrict(p, E)
    kind = rng.choice(("restriction", "random", "index"))
    qprime = p_res
    if kind == "random":
        for _ in range(5):
            cand = _random_qprime(p_res, new, rng)
            if not validate(cand) and leq(cand, p_res):
                qprime = cand
                break
        else:
            kind = "restriction"
    elif kind == "index":
        if new:
            one = single_index(new[0], p_res.n, p_res.eps[()], rng.getrandbits(64))
            qprime = extend(p_res, {new[0]}, one, p_res.n, p_res.eps)
        else:
            kind = "restriction"
    m = rng.randint(0, 2 * p.n)
    target: dict[Key, Fraction] = {}
    for f in partial_functions(p.F):
        v = p.eps[f] / 2 ** rng.randint(0, 2)
        target[f] = max([v] + [target[s] for s in _sub_keys(f)])
    return ExtendCase(p, E, qprime, m, target, kind)
