"""Closed-form runtime models and the speedup/overhead metrics.

The per-phase formulas mirror the simulator's structure: a DMA phase costs
setup + round-trip + one cycle per 64-byte beat; compute costs an init
constant plus a per-element rate. Totals compose per-phase critical paths
(sum over phases of the max over clusters). All arithmetic stays in floats;
nothing is rounded until display.

Every function accepts NumPy arrays transparently (plain arithmetic), so
whole validation grids evaluate in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ELEM_BYTES = 8
BEAT_BYTES = 64

# Aggregate constant terms of the fitted totals. The 400/566 constants
# absorb every phase that does not scale with problem size.
AXPY_CONST = 400.0
ATAX_CONST = 566.0
AXPY_TAIL_RATE = 2.47   # combined compute + writeback per-element rate
ATAX_COMPUTE_RATE = 3.98
ATAX_WRITEBACK_RATE = 2.9


def phase_e_axpy(N):
    """Operand fetch: two-transfer DMA setup, round trip, 2N elements of beats."""
    return 53.0 + 55.0 + 2.0 * N * ELEM_BYTES / BEAT_BYTES


def phase_f_axpy(n, N):
    """Compute: init plus 1.47 cycles per element over 8n cores."""
    return 55.0 + 1.47 * N / (8.0 * n)


def phase_g(n, N):
    """Result writeback: one-transfer DMA setup, round trip, N/n elements."""
    return 21.0 + 55.0 + N * ELEM_BYTES / (n * BEAT_BYTES)


def axpy_total(n, N):
    return AXPY_CONST + N / 4.0 + AXPY_TAIL_RATE * N / (8.0 * n)


def atax_total(n, N, M):
    return (ATAX_CONST
            + ATAX_COMPUTE_RATE * N * M
            + ATAX_WRITEBACK_RATE * N / (8.0 * n)
            + N * (1.0 + M) / 8.0 * n)


def compose(per_cluster_phase_times):
    """Critical-path composition: sum over phases of max over clusters.

    Accepts a phases x clusters matrix (rows = phases). Ragged input is a
    shape error.
    """
    try:
        m = np.asarray(per_cluster_phase_times, dtype=float)
    except ValueError as e:
        raise ValueError(f"ragged phase matrix: {e}") from None
    if m.ndim != 2 or m.size == 0:
        raise ValueError(
            f"expected a non-empty phases x clusters matrix, got shape {m.shape}")
    return float(m.max(axis=1).sum())


def relative_error(measured, predicted):
    """|measured - predicted| / measured."""
    if np.any(np.asarray(measured) <= 0):
        raise ValueError(f"measured runtime must be positive, got {measured}")
    return abs(measured - predicted) / measured


class SpeedupMetrics(NamedTuple):
    ideal_speedup: float
    ext_speedup: float
    restored_fraction: float


def speedup_metrics(base, ideal, extended) -> SpeedupMetrics:
    """Speedups over baseline, and the fraction of the ideal gain restored.

    restored_fraction = ext_speedup / ideal_speedup (== ideal/extended); a
    value of 1.0 means the extensions fully recover the attainable gain.
    """
    for name, v in (("base", base), ("ideal", ideal), ("extended", extended)):
        if v <= 0:
            raise ValueError(f"{name} runtime must be positive, got {v}")
    return SpeedupMetrics(base / ideal, base / extended, ideal / extended)


@dataclass(frozen=True)
class AnalyticEstimate:
    """Per-phase prediction for one (kernel, n, sizes) point; total == sum."""

    kernel: str
    n: int
    params: dict
    per_phase: dict
    total: float

    def to_record(self) -> dict:
        rec = {"kernel": self.kernel, "n_clusters": self.n}
        rec.update(self.params)
        rec["phases"] = {k: round(v, 6) for k, v in self.per_phase.items()}
        rec["total"] = round(self.total, 6)
        return rec


def estimate(kernel: str, n, params) -> AnalyticEstimate:
    """Evaluate the fitted total for a modeled kernel, split per phase.

    Only kernels with published cost models are supported (axpy, atax);
    anything else raises KeyError.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if kernel == "axpy":
        N = params["N"]
        phases = {
            "operand_fetch": phase_e_axpy(N),
            "compute": phase_f_axpy(n, N),
            "writeback": phase_g(n, N),
            "fixed_protocol": AXPY_CONST - 108.0 - 55.0 - 76.0,
        }
        total = axpy_total(n, N)
    elif kernel == "atax":
        N, M = params["N"], params["M"]
        phases = {
            "operand_broadcast": N * (1.0 + M) / 8.0 * n,
            "compute": ATAX_COMPUTE_RATE * N * M,
            "writeback": ATAX_WRITEBACK_RATE * N / (8.0 * n),
            "fixed_protocol": ATAX_CONST,
        }
        total = atax_total(n, N, M)
    else:
        raise KeyError(f"no analytic model for kernel {kernel!r}")
    assert abs(total - sum(phases.values())) < 1e-6
    return AnalyticEstimate(kernel, n, dict(params), phases, float(total))
