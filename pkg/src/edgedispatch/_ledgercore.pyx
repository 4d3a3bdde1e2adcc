# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled replay kernel for the difference-encoded deficit ledger.

Same contract as ``_ledger_py.replay_frozen``, restated here over flat
int64 arrays so the bulk fairness suites run their millions of
select-then-charge rounds at C speed. The pure backend is the reference;
the test suite pins the two to identical outputs.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memset


def replay_frozen(weights, long long steps, bint record_sequence=False):
    """Select-then-charge over frozen weights; see the pure backend docstring."""
    cdef Py_ssize_t k = len(weights)
    if k == 0:
        raise ValueError("need at least one destination")
    cdef long long *w = NULL
    cdef long long *did = NULL
    cdef long long *delta = NULL
    cdef long long *s = NULL
    cdef long long *prod = NULL
    cdef Py_ssize_t i, j, pos
    cdef long long d, base, newval, running, prev_implied, total, spread
    cdef long long pmax, pmin, weighted, max_w
    cdef long long step, spread_violation = -1, weighted_violation = -1
    cdef long long max_spread = 0, max_weighted = 0
    sequence = [] if record_sequence else None

    w = <long long *> malloc(k * sizeof(long long))
    did = <long long *> malloc(k * sizeof(long long))
    delta = <long long *> malloc(k * sizeof(long long))
    s = <long long *> malloc(k * sizeof(long long))
    prod = <long long *> malloc(k * sizeof(long long))
    if w == NULL or did == NULL or delta == NULL or s == NULL or prod == NULL:
        free(w); free(did); free(delta); free(s); free(prod)
        raise MemoryError()
    try:
        max_w = 0
        for i in range(k):
            w[i] = weights[i]
            if w[i] <= 0:
                raise ValueError("weights must be positive")
            if w[i] > max_w:
                max_w = w[i]
            did[i] = i
        memset(delta, 0, k * sizeof(long long))
        memset(s, 0, k * sizeof(long long))
        memset(prod, 0, k * sizeof(long long))

        for step in range(1, steps + 1):
            d = did[0]
            base = delta[0]
            newval = base + w[d]
            # Drop the front entry; fusing its delta into the successor
            # keeps every other implied deficit unchanged.
            if k > 1:
                delta[1] += delta[0]
            for i in range(k - 1):
                did[i] = did[i + 1]
                delta[i] = delta[i + 1]
            # Re-insert at the position ordered by (deficit, id).
            running = 0
            pos = k - 1
            prev_implied = 0
            for i in range(k - 1):
                running += delta[i]
                if running > newval or (running == newval and did[i] > d):
                    pos = i
                    prev_implied = running - delta[i]
                    delta[i] = running - newval
                    break
            else:
                prev_implied = running
            for j in range(k - 1, pos, -1):
                did[j] = did[j - 1]
                delta[j] = delta[j - 1]
            did[pos] = d
            delta[pos] = newval - prev_implied

            s[d] += 1
            prod[d] += w[d]
            if record_sequence:
                sequence.append(d)

            total = 0
            for i in range(k):
                total += delta[i]
            spread = total - delta[0]
            if spread > max_spread:
                max_spread = spread
            if spread > max_w and spread_violation < 0:
                spread_violation = step
            pmax = prod[0]
            pmin = prod[0]
            for i in range(1, k):
                if prod[i] > pmax:
                    pmax = prod[i]
                if prod[i] < pmin:
                    pmin = prod[i]
            weighted = pmax - pmin
            if weighted > max_weighted:
                max_weighted = weighted
            if weighted > max_w and weighted_violation < 0:
                weighted_violation = step

        counts = [s[i] for i in range(k)]
        deficits = [0] * k
        running = 0
        for i in range(k):
            running += delta[i]
            deficits[did[i]] = running
        return (
            counts,
            deficits,
            spread_violation,
            weighted_violation,
            max_spread,
            max_weighted,
            sequence,
        )
    finally:
        free(w)
        free(did)
        free(delta)
        free(s)
        free(prod)
