"""Kernel dispatch: the compiled extension when importable, else the numpy fallback.

Set ``HALVING_LAB_PURE=1`` to force the fallback (used by the parity tests and
the benchmark).
"""

from __future__ import annotations

import os

from . import _pure

BACKEND = "pure"
_impl = _pure

if os.environ.get("HALVING_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pure

mix64 = _impl.mix64
seeded_bits = _impl.seeded_bits
seeded_bits_at = _impl.seeded_bits_at
walk_hits = _impl.walk_hits
recurrence_trials = _impl.recurrence_trials
lln_trials = _impl.lln_trials
fail_trials = _impl.fail_trials
d5_first_violation = _impl.d5_first_violation


def compiled_available() -> bool:
    try:
        from . import _speedups  # noqa: F401
    except ImportError:
        return False
    return True


def backends() -> dict:
    """Both kernel modules keyed by name; the compiled one only if built."""
    out = {"pure": _pure}
    try:
        from . import _speedups

        out["compiled"] = _speedups
    except ImportError:
        pass
    return out
