"""Batch runner: ``halving-lab {density,relate,construct,forge,mc}``.

Each subcommand reads an optional JSON config; flags override it. The report
body goes to ``--out`` (or stdout) and a manifest with the tool version,
config hash, seeds and timestamp goes to ``<out>.manifest.json`` (or stderr).
Report bodies never carry timestamps, so identical configs give identical bytes.

Exit codes: 0 ok, 2 parse error, 3 precondition violated, 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__, constructions, density, forcing, kernels, montecarlo, relations
from .rationals import format_rational, parse_rational
from .sets import BudgetExhausted, PreconditionError, SchemaSyntaxError, SetSchema, count_below, parse_schema

REPORT_VERSION = 1
EXIT_PARSE, EXIT_PRECONDITION, EXIT_INVARIANT = 2, 3, 4


class ConfigError(ValueError):
    pass


class Report:
    """A JSON document or a CSV table; ``rows`` with ``columns`` means CSV is available."""

    def __init__(self, body: dict, columns: list[str] | None = None, rows: list[list] | None = None, seeds=()):
        self.body = {"report_version": REPORT_VERSION, **body}
        self.columns = columns
        self.rows = rows
        self.seeds = list(seeds)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.body, sort_keys=True, indent=2) + "\n"
        if self.columns is None:
            raise ConfigError("this report has no CSV form; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()


# ---------------------------------------------------------------- config access


def _get(cfg: dict, key: str, default: Any = ...):
    if key in cfg and cfg[key] is not None:
        return cfg[key]
    if default is ...:
        raise ConfigError(f"missing config key {key!r}")
    return default


def _schema(cfg: dict, key: str, default: str | None = None) -> SetSchema:
    return parse_schema(str(_get(cfg, key, default) if default is not None else _get(cfg, key)))


def _rational(cfg: dict, key: str, default=...) -> Fraction:
    return parse_rational(_get(cfg, key, default))


def _int(cfg: dict, key: str, default=...) -> int:
    v = _get(cfg, key, default)
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise ConfigError(f"{key} must be an integer")
    try:
        return int(v)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer") from exc


def _seed(cfg: dict) -> int:
    s = _int(cfg, "seed", 0)
    if not 0 <= s < 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return s


def _g_table(table) -> range | list[int]:
    # a list of values or {"start", "stop", "step"} for an arithmetic table
    if isinstance(table, dict):
        return range(int(table["start"]), int(table["stop"]), int(table.get("step", 1)))
    if isinstance(table, list):
        return [int(v) for v in table]
    raise ConfigError("g must be a list or a range object")


def _q(x) -> str:
    return format_rational(x)


# ---------------------------------------------------------------- density


def run_density(cfg: dict) -> Report:
    """Columns: ``set, n, count, density`` at each requested ``n``."""
    X = _schema(cfg, "set")
    horizon = _int(cfg, "horizon", 10_000)
    points = [int(n) for n in _get(cfg, "points", [horizon])]
    rows = [[X.to_text(), n, count_below(X, n), _q(density.initial_density(X, n))] for n in points]
    lo, hi = (int(v) for v in _get(cfg, "window", [max(1, horizon // 10), horizon]))
    w = density.density_window(X, lo, hi)
    exact = density.exact_density(X)
    mod = density.is_moderate(X, (lo, hi))
    body = {
        "command": "density",
        "set": X.to_text(),
        "points": [{"n": r[1], "count": r[2], "density": r[3]} for r in rows],
        "window": {"start": lo, "stop": hi, "min_seen": _q(w.min_seen), "max_seen": _q(w.max_seen), "last": _q(w.last)},
        "exact_density": None if exact is None else _q(exact),
        "moderate": {"exact": mod.exact, "moderate": mod.moderate},
    }
    return Report(body, ["set", "n", "count", "density"], rows)


# ---------------------------------------------------------------- relate

_PAIR = {
    "bisects_in_limit": relations.bisects_in_limit,
    "almost_bisects": relations.almost_bisects,
    "star_splits": relations.star_splits,
}
_FAMILY = ("statistically_independent", "rho_independent")


def _relate_one(check: dict, defaults: dict) -> list[list]:
    c = {**defaults, **check}
    name = _get(c, "relation")
    horizon = _int(c, "horizon", 10_000)
    n0 = _int(c, "n0") if c.get("n0") is not None else None
    if name in _PAIR or name in ("weakly_bisects", "bisects_infinitely_often"):
        S, X = _schema(c, "S"), _schema(c, "X")
        subject = f"{S.to_text()} | {X.to_text()}"
        if name in _PAIR:
            v = _PAIR[name](S, X, _rational(c, "tol", "1/100"), n0, horizon)
            return [[name, subject, v.status, "" if v.witness is None else v.witness, ""]]
        if name == "weakly_bisects":
            count, hits = relations.weakly_bisects(S, X, _rational(c, "tol", "1/100"), horizon)
        else:
            hits = relations.bisects_infinitely_often(S, X, horizon)
            count = len(hits)
        return [[name, subject, f"hits={count}", hits[-1] if hits else "", ""]]
    if name in _FAMILY:
        family = [parse_schema(str(t)) for t in _get(c, "family")]
        cap = _int(c, "cap", len(family))
        tol = _rational(c, "tol", "1/100")
        if name == "statistically_independent":
            out = relations.statistically_independent(family, cap, tol, n0, horizon)
        else:
            out = relations.rho_independent(
                family, _rational(c, "rho"), cap, tol, n0, horizon, bool(c.get("complements", False))
            )
        rows = []
        for sv in out:
            sub = " ".join(("~" if i in sv.complemented else "") + str(i) for i in sv.members)
            v = sv.verdict
            rows.append([name, sub, v.status, "" if v.witness is None else v.witness, "; ".join(v.notes)])
        return rows
    raise ConfigError(f"unknown relation {name!r}")


def run_relate(cfg: dict) -> Report:
    """Columns: ``relation, subject, verdict, witness, notes``; one row per pair or subfamily."""
    checks = _get(cfg, "checks", None)
    if checks is None:
        checks = [{k: cfg[k] for k in ("relation", "S", "X", "family", "rho", "cap", "complements") if k in cfg}]
    defaults = {k: cfg[k] for k in ("horizon", "tol", "n0") if k in cfg}
    rows = [row for check in checks for row in _relate_one(check, defaults)]
    columns = ["relation", "subject", "verdict", "witness", "notes"]
    body = {"command": "relate", "rows": [dict(zip(columns, r)) for r in rows]}
    return Report(body, columns, rows)


# ---------------------------------------------------------------- construct


def _construct_factorial(cfg: dict) -> dict:
    S = _schema(cfg, "set", "periodic(;1)")
    horizon = _int(cfg, "horizon", 10_000)
    chopped = constructions.factorial_chopped_real(S, horizon)
    body = {"bits": S.to_text(), "partition": chopped.partition.to_text(),
            "boundaries": chopped.partition.boundaries_below(horizon)}
    if cfg.get("real") is not None:
        y = _schema(cfg, "real")
        body["guarantee"] = [
            {"k": k, "ratio": _q(r), "above": ok} for k, r, ok in constructions.factorial_guarantee(y, chopped, horizon)
        ]
    return body


def _construct_nonM(cfg: dict) -> dict:
    X = _schema(cfg, "set", "periodic(;1)")
    chopped = constructions.nonM_witness(X, _int(cfg, "depth", 1))
    bounds = chopped.partition.boundaries_below(1 << 62)
    return {
        "schema": chopped.bits.to_text(),
        "partition": chopped.partition.to_text(),
        "boundaries": bounds,
        "interval_counts": constructions.interval_member_counts(chopped.bits, chopped.partition, bounds[-1]),
    }


def _construct_dominator(cfg: dict) -> dict:
    X = _schema(cfg, "set", "periodic(;1)")
    horizon = _int(cfg, "horizon", 8)
    w = constructions.bisect_witness_from_dominator(X, _g_table(_get(cfg, "g")), horizon)
    hits = relations.bisects_infinitely_often(w.Y, X, w.Gamma[-1])
    return {
        "schema": w.Y.to_text(),
        "Gamma": list(w.Gamma),
        "hits": hits,
        "interval_counts": w.interval_counts(),
        "violations": list(w.violations),
    }


def _construct_cohen(cfg: dict) -> dict:
    rng = random.Random(_seed(cfg))
    trace = constructions.cohen_trace(rng, _int(cfg, "blocks", 4))
    # "random": the part of X below L_{n-1} is an arbitrary subset; "decided": the earlier blocks
    mode = _get(cfg, "x_before", "random")
    if mode not in ("random", "decided"):
        raise ConfigError("x_before must be 'random' or 'decided'")
    before = None
    if mode == "random":
        before = [None] + [
            [x for x in range(trace.L[k - 1]) if rng.random() < 0.5] for k in range(1, len(trace.L))
        ]
    Y, reports = constructions.cohen_antisplit_witness(trace, before)
    return {
        "schema": Y.to_text(),
        "L": list(trace.L),
        "blocks": [
            {"n": r.n, "zeros": r.zeros, "ones": r.ones, "Delta": r.Delta, "ratio": _q(r.ratio),
             "bound": _q(r.bound), "chain_ok": r.chain_ok}
            for r in reports
        ],
    }


def _lemma_suite(make) -> Callable[[dict], dict]:
    def run(cfg: dict) -> dict:
        rng = random.Random(_seed(cfg))
        count = _int(cfg, "instances", 1000)
        failures = []
        for i in range(count):
            if not make(rng).check():
                failures.append(i)
        return {"instances": count, "passed": count - len(failures), "failures": failures[:20]}

    return run


_WITNESSES: dict[str, Callable[[dict], dict]] = {
    "factorial": _construct_factorial,
    "nonM": _construct_nonM,
    "dominator": _construct_dominator,
    "cohen": _construct_cohen,
    "splice": _lemma_suite(constructions.lemma33_instance),
    "window_splice": _lemma_suite(constructions.lemma410_instance),
}


def run_construct(cfg: dict) -> Report:
    """JSON only: the witness schema text plus its verification data."""
    name = _get(cfg, "witness")
    if name not in _WITNESSES:
        raise ConfigError(f"unknown witness {name!r}; choose from {sorted(_WITNESSES)}")
    body = {"command": "construct", "witness": name, **_WITNESSES[name](cfg)}
    return Report(body, seeds=[_seed(cfg)] if name in ("cohen", "splice", "window_splice") else [])


# ---------------------------------------------------------------- forge


def run_forge(cfg: dict) -> Report:
    """Per-round rows: ``round, action, F, n, eps0, worst_f, worst_error, worst_bound``."""
    seed = _seed(cfg)
    cap = _int(cfg, "report_cap", 3)
    steps = cfg.get("steps")
    if steps is None and cfg.get("schedule") is not None:
        steps = json.loads(Path(cfg["schedule"]).read_text())
    if steps is None:
        steps = forcing.default_schedule(
            _int(cfg, "index_count", 3), _int(cfg, "rounds", 5), _int(cfg, "min_horizon", 1 << 10),
            _rational(cfg, "eps_final", "1/4"),
        )
    if not isinstance(steps, list) or not all(isinstance(s, dict) for s in steps):
        raise ConfigError("steps must be a list of objects")
    run = forcing.replay(steps, seed, cap)
    body = {"command": "forge", "seed": seed, "steps": steps, **run.as_dict(),
            "all_errors_ok": all(e.ok for e in run.errors)}
    rows = [
        [r["round"], r["action"], " ".join(map(str, r["F"])), r["n"], r["eps0"],
         r["worst"]["f"], r["worst"]["error"], r["worst"]["bound"]]
        for r in body["rounds"]
    ]
    cols = ["round", "action", "F", "n", "eps0", "worst_f", "worst_error", "worst_bound"]
    return Report(body, cols, rows, seeds=[seed])


# ---------------------------------------------------------------- mc


def _mc_recurrence(cfg: dict) -> dict:
    X = _schema(cfg, "set", "periodic(;1)")
    steps = _int(cfg, "steps", 10_000)
    r = montecarlo.estimate_recurrence(X, steps, _int(cfg, "trials", 1000), _seed(cfg))
    oracle = montecarlo.return_probability(steps) if X.to_text() == "periodic(;1)" else None
    return {**r.as_dict(), "set": X.to_text(), "steps": steps,
            "pass": r.within_sigma(oracle) if oracle is not None else None}


def _mc_lln(cfg: dict) -> dict:
    X = _schema(cfg, "set", "periodic(;1)")
    horizon = _int(cfg, "horizon", 10_000)
    eps = _rational(cfg, "eps", "1/20")
    r = montecarlo.lln_density(X, horizon, _int(cfg, "trials", 500), eps, _seed(cfg))
    failure = 1 - r.estimate
    slack = 3 * r.sigma(min(r.bound, 1.0))
    return {**r.as_dict(), "set": X.to_text(), "horizon": horizon, "eps": _q(eps),
            "pass": float(failure) <= r.bound + slack}


def _mc_fail(cfg: dict) -> dict:
    n = _int(cfg, "n", 3)
    m_n = _int(cfg, "m_n", 0)
    count = _int(cfg, "target_count", 400)
    plan = montecarlo.BlockPlan.standard(n, m_n, _int(cfg, "m_next", m_n + count))
    fr = montecarlo.fail_rate_vs_bound(plan, range(m_n, m_n + count), _int(cfg, "trials", 2000), _seed(cfg))
    ok = fr.within_bound
    return {**fr.as_dict(), "n": n, "N": plan.N, "P": _q(plan.P), "pass": True if ok is None else ok,
            "bound_vacuous": ok is None}


def _mc_single(cfg: dict) -> dict:
    k, n = _int(cfg, "k", 20), _int(cfg, "n", 2)
    r = montecarlo.single_fail_rate(k, n, _int(cfg, "trials", 20_000), _seed(cfg))
    exact = montecarlo.binomial_tail(k, n)
    return {**r.as_dict(), "k": k, "n": n, "exact": _q(exact),
            "pass": r.within_sigma(exact) and float(r.estimate) <= r.bound}


def _mc_delta(cfg: dict) -> dict:
    lo, hi = (int(v) for v in _get(cfg, "n_range", [2, 100]))
    rows = montecarlo.delta_audit(range(lo, hi + 1))
    first = montecarlo.first_stable_n(rows)
    return {"rows": [r.as_dict() for r in rows], "first_stable_n": first, "pass": first is not None}


_MC = {
    "recurrence": _mc_recurrence,
    "lln": _mc_lln,
    "fail": _mc_fail,
    "single_fail": _mc_single,
    "delta_audit": _mc_delta,
}


def run_mc(cfg: dict) -> Report:
    """JSON report; CSV gives one row per audited n for ``delta_audit`` and a key/value table otherwise."""
    name = _get(cfg, "experiment")
    if name not in _MC:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(_MC)}")
    result = _MC[name](cfg)
    body = {"command": "mc", "experiment": name, **result}
    if name == "delta_audit":
        cols = ["n", "N", "P", "E", "delta", "below_half"]
        rows = [[r[c] for c in cols] for r in result["rows"]]
        return Report(body, cols, rows)
    rows = [[k, json.dumps(v) if not isinstance(v, str) else v] for k, v in sorted(body.items())]
    return Report(body, ["key", "value"], rows, seeds=[_seed(cfg)])


COMMANDS = {
    "density": run_density,
    "relate": run_relate,
    "construct": run_construct,
    "forge": run_forge,
    "mc": run_mc,
}
_DEFAULT_FORMAT = {"density": "csv", "relate": "csv", "construct": "json", "forge": "json", "mc": "json"}


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="halving-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"halving-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--tol", help="tolerance as p/q")
        p.add_argument("--out", type=Path, help="report path; the manifest goes next to it")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--set", dest="set_", metavar="SCHEMA", help="input schema")
        p.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE",
                       help="extra config entry; VALUE is parsed as JSON when possible")
    return parser


def _load_config(args) -> dict:
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.param:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            cfg[key] = json.loads(raw)
        except json.JSONDecodeError:
            cfg[key] = raw
    for key, val in (("seed", args.seed), ("horizon", args.horizon), ("tol", args.tol), ("set", args.set_)):
        if val is not None:
            cfg[key] = val
    if "tol" in cfg:
        parse_rational(cfg["tol"])
    return cfg


def manifest(command: str, cfg: dict, seeds) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return {
        "tool": "halving-lab",
        "version": __version__,
        "backend": kernels.BACKEND,
        "command": command,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seeds": list(seeds),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args)
        report = COMMANDS[args.command](cfg)
        text = report.render(args.format or _DEFAULT_FORMAT[args.command])
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except forcing.InvariantBreach as exc:
        print(f"error: internal invariant breached: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (PreconditionError, BudgetExhausted) as exc:
        print(f"error: precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConfigError, SchemaSyntaxError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    meta = manifest(args.command, cfg, report.seeds)
    if args.out is None:
        sys.stdout.write(text)
        print(json.dumps(meta, sort_keys=True), file=sys.stderr)
    else:
        args.out.write_text(text)
        Path(f"{args.out}.manifest.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
