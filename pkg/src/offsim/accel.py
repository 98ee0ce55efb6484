"""Backend selection for the port-arbitration inner loop.

The shared-port model spends nearly all its time replaying beat-by-beat
round-robin service over the pending-transfer ring. That loop lives here as
one function, either compiled with numba or run as plain Python:

* ``OFFSIM_BACKEND=numba``  -- require numba (ImportError if missing)
* ``OFFSIM_BACKEND=python`` -- force the interpreted fallback
* unset                     -- numba when importable, else fall back

``benchmarks/port_backend_bench.py`` compares the two.
"""

import os

import numpy as np


def _serve_window_impl(ids, rem, size, ptr, start_cycle, budget):
    """Serve up to ``budget`` beats of round-robin port service.

    ``ids`` and ``rem`` are parallel int64 arrays holding the pending ring
    in service order (live entries in [0, size)); ``ptr`` indexes the slot
    served next. One beat is served per cycle, the first at
    ``start_cycle + 1``. A slot whose remaining count hits zero is removed
    by compacting the ring (the successor slides into its position, so the
    rotation order of the survivors is preserved).

    Returns ``(size, ptr, nfin, fin_ids, fin_cycles)``; the first ``nfin``
    entries of the fin arrays list finished transfers in completion order.
    """
    fin_ids = np.empty(size, np.int64)
    fin_cycles = np.empty(size, np.int64)
    nfin = 0
    c = start_cycle
    end = start_cycle + budget
    while size > 0 and c < end:
        c += 1
        rem[ptr] -= 1
        if rem[ptr] == 0:
            fin_ids[nfin] = ids[ptr]
            fin_cycles[nfin] = c
            nfin += 1
            for j in range(ptr, size - 1):
                ids[j] = ids[j + 1]
                rem[j] = rem[j + 1]
            size -= 1
            if size > 0 and ptr == size:
                ptr = 0
        else:
            ptr += 1
            if ptr == size:
                ptr = 0
    return size, ptr, nfin, fin_ids, fin_cycles


_env = os.environ.get("OFFSIM_BACKEND", "").strip().lower()
if _env not in ("", "numba", "python"):
    raise RuntimeError(
        f"OFFSIM_BACKEND must be 'numba' or 'python', got {_env!r}")

if _env == "python":
    HAS_NUMBA = False
else:
    try:
        import numba
        HAS_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise
        HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "python"

if HAS_NUMBA:
    serve_window = numba.njit(cache=True)(_serve_window_impl)
else:
    serve_window = _serve_window_impl


def get_serve_window(backend=None):
    """Fetch a specific backend's implementation (used by the benchmark)."""
    if backend is None or backend == BACKEND:
        return serve_window
    if backend == "python":
        return _serve_window_impl
    if backend == "numba":
        import numba as nb
        return nb.njit(cache=True)(_serve_window_impl)
    raise ValueError(f"unknown backend: {backend!r}")
