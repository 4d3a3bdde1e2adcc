"""Difference-encoded deficit counters, pure-Python backend.

The ledger keeps one entry per active destination, ordered by implied
absolute deficit with ties broken by destination id. Each entry stores only
the difference from its predecessor, so the front entry's delta is the
minimum deficit and renormalizing every counter by that minimum (done when
a destination is admitted) is a single front reset. Deficits {4, 6, 7, 7}
are held as deltas {4, 2, 1, 0}.

``replay_frozen`` here is the fallback for the compiled kernel in
``_ledgercore``; it drives the same ``DeficitLedger`` the rest of the
package uses, one operation at a time.
"""

from __future__ import annotations


class EmptyLedger(Exception):
    """Minimum requested from a ledger with no destinations."""


class UnknownDestination(Exception):
    """Operation on a destination the caller never admitted."""


class AlreadyAdmitted(Exception):
    """Admission of a destination already present."""


class DeficitLedger:
    """Sorted difference-encoded deficit counters.

    Renormalization on admit is O(1); charge and evict are O(position) plus
    an O(n) index rebuild, which is fine at the fan-outs a single router
    sees.
    """

    def __init__(self) -> None:
        self._entries: list[list[int]] = []  # [dest, delta_to_previous]
        self._pos: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, dest: int) -> bool:
        return dest in self._pos

    def pop_min(self) -> int:
        """Destination with the minimum deficit, smallest id on ties.

        Selection only; the entry stays in place.
        """
        if not self._entries:
            raise EmptyLedger("no active destinations")
        return self._entries[0][0]

    def min_deficit(self) -> int:
        if not self._entries:
            raise EmptyLedger("no active destinations")
        return self._entries[0][1]

    def max_deficit(self) -> int:
        if not self._entries:
            raise EmptyLedger("no active destinations")
        return sum(delta for _, delta in self._entries)

    def charge(self, dest: int, amount: int) -> None:
        """Increase a destination's deficit by ``amount`` and re-sort it."""
        if amount < 0:
            raise ValueError("charge amount must be non-negative")
        pos = self._pos.get(dest)
        if pos is None:
            raise UnknownDestination(f"destination {dest} is not in the ledger")
        new_value = self._implied(pos) + amount
        delta = self._entries[pos][1]
        if pos + 1 < len(self._entries):
            self._entries[pos + 1][1] += delta
        del self._entries[pos]
        self._insert(dest, new_value)

    def admit(self, dest: int, initial_deficit: int = 0) -> None:
        """Renormalize all deficits by the current minimum, then insert.

        The renormalization is the O(1) front reset; the new destination
        enters with ``initial_deficit`` (relative to the renormalized
        counters).
        """
        if dest in self._pos:
            raise AlreadyAdmitted(f"destination {dest} is already in the ledger")
        if initial_deficit < 0:
            raise ValueError("initial deficit must be non-negative")
        if self._entries:
            self._entries[0][1] = 0
        self._insert(dest, initial_deficit)

    def evict(self, dest: int) -> None:
        """Remove a destination; every other decoded deficit is unchanged."""
        pos = self._pos.get(dest)
        if pos is None:
            raise UnknownDestination(f"destination {dest} is not in the ledger")
        delta = self._entries[pos][1]
        if pos + 1 < len(self._entries):
            self._entries[pos + 1][1] += delta
        del self._entries[pos]
        self._reindex()

    def decode(self) -> dict[int, int]:
        """Absolute deficit per destination."""
        out = {}
        running = 0
        for dest, delta in self._entries:
            running += delta
            out[dest] = running
        return out

    def deltas(self) -> list[tuple[int, int]]:
        """The encoded form, in ledger order, for tests and snapshots."""
        return [(dest, delta) for dest, delta in self._entries]

    def _implied(self, pos: int) -> int:
        return sum(self._entries[i][1] for i in range(pos + 1))

    def _insert(self, dest: int, value: int) -> None:
        # Walk to the first entry ordered after (value, dest).
        running = 0
        pos = len(self._entries)
        for i, (other, delta) in enumerate(self._entries):
            running += delta
            if (running, other) > (value, dest):
                pos = i
                break
        prev_implied = running - self._entries[pos][1] if pos < len(self._entries) else running
        if pos < len(self._entries):
            self._entries[pos][1] = running - value
        self._entries.insert(pos, [dest, value - prev_implied])
        self._reindex()

    def _reindex(self) -> None:
        self._pos = {dest: i for i, (dest, _) in enumerate(self._entries)}


def replay_frozen(weights: list[int], steps: int, record_sequence: bool = False):
    """Select-then-charge for ``steps`` rounds over frozen per-destination weights.

    Destination ids are the indices of ``weights``; all start admitted with
    deficit zero. Returns the tuple
    ``(counts, deficits, spread_violation, weighted_violation,
    max_spread, max_weighted_spread, sequence)`` where the violation fields
    are the 1-based step at which the deficit spread (respectively the
    weighted selection-count spread) first exceeded the maximum weight, or
    -1 if that never happened.
    """
    k = len(weights)
    if k == 0:
        raise ValueError("need at least one destination")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    ledger = DeficitLedger()
    for dest in range(k):
        ledger.admit(dest, 0)
    max_w = max(weights)
    counts = [0] * k
    products = [0] * k
    sequence: list[int] | None = [] if record_sequence else None
    spread_violation = -1
    weighted_violation = -1
    max_spread = 0
    max_weighted = 0
    for step in range(1, steps + 1):
        dest = ledger.pop_min()
        ledger.charge(dest, weights[dest])
        counts[dest] += 1
        products[dest] += weights[dest]
        if sequence is not None:
            sequence.append(dest)
        spread = ledger.max_deficit() - ledger.min_deficit()
        if spread > max_spread:
            max_spread = spread
        if spread > max_w and spread_violation < 0:
            spread_violation = step
        weighted = max(products) - min(products)
        if weighted > max_weighted:
            max_weighted = weighted
        if weighted > max_w and weighted_violation < 0:
            weighted_violation = step
    decoded = ledger.decode()
    deficits = [decoded[d] for d in range(k)]
    return (
        counts,
        deficits,
        spread_violation,
        weighted_violation,
        max_spread,
        max_weighted,
        sequence,
    )
