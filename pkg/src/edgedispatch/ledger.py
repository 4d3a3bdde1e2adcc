"""Deficit ledger public surface.

``DeficitLedger`` (the per-operation structure) always runs in pure Python;
``replay_frozen`` (the bulk select-then-charge loop behind the fairness
suites) prefers the compiled kernel and falls back to the pure backend when
the extension is unavailable or ``EDGEDISPATCH_PURE=1`` is set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from ._ledger_py import (  # noqa: F401  (re-exported)
    AlreadyAdmitted,
    DeficitLedger,
    EmptyLedger,
    UnknownDestination,
)
from ._ledger_py import replay_frozen as _replay_pure

if os.environ.get("EDGEDISPATCH_PURE") == "1":
    _replay_fast = None
else:
    try:
        from ._ledgercore import replay_frozen as _replay_fast
    except ImportError:
        _replay_fast = None

REPLAY_BACKEND = "compiled" if _replay_fast is not None else "pure"


@dataclass(frozen=True)
class ReplayResult:
    """Outcome of a frozen-weight select-then-charge replay.

    ``spread_violation`` / ``weighted_violation`` are the 1-based step at
    which the deficit spread (respectively the weighted selection-count
    spread) first exceeded the maximum weight, or -1 if never: the bounded
    -spread guarantees hold exactly when both stay at -1.
    """

    counts: list[int]
    deficits: list[int]
    spread_violation: int
    weighted_violation: int
    max_spread: int
    max_weighted_spread: int
    sequence: list[int] | None

    @property
    def fair(self) -> bool:
        return self.spread_violation < 0 and self.weighted_violation < 0


def replay_frozen(
    weights: list[int],
    steps: int,
    record_sequence: bool = False,
    force_pure: bool = False,
) -> ReplayResult:
    """Run ``steps`` rounds of select-then-charge over frozen weights.

    Destination ids are the indices of ``weights`` (microseconds, positive);
    every destination starts admitted with deficit zero.
    """
    backend = _replay_pure if (force_pure or _replay_fast is None) else _replay_fast
    return ReplayResult(*backend(weights, steps, record_sequence))
