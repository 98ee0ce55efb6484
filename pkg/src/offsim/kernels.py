"""Workload cost descriptors consumed by the offload phases.

A kernel never executes numerically here; it only answers three questions
per cluster — bytes of operands in (phase E), compute cycles (phase F),
bytes of results out (phase G) — plus the size of its argument record and
the rule for how the problem must divide over n clusters.

Two data-movement classes exist: partitioned operands (AXPY slices, the
GEMM A block) shrink per cluster as 1/n, while broadcast operands (the
full ATAX matrix, the GEMM B matrix) are re-read by every cluster.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

ELEM_BYTES = 8  # double precision


class PartitionError(ValueError):
    """Problem size does not divide across the requested cluster count."""


@dataclass(frozen=True)
class KernelSpec:
    """Cost descriptor for one kernel.

    The callables take ``(n, params)`` where params maps size names (from
    ``size_names``) to positive integers. ``operand_transfers`` returns the
    individual DMA-in sizes; ``operand_bytes_in`` is their sum.
    """

    name: str
    size_names: tuple[str, ...]
    arg_bytes: int
    partition_rule: str
    _transfers: Callable[[int, Mapping[str, int]], tuple[int, ...]]
    _compute: Callable[[int, Mapping[str, int]], float]
    _result: Callable[[int, Mapping[str, int]], int]
    _check: Callable[[int, Mapping[str, int]], bool]

    def check_partition(self, n: int, params: Mapping[str, int]) -> None:
        self._require_sizes(params)
        if n < 1:
            raise PartitionError(f"n_clusters must be >= 1, got {n}")
        if not self._check(n, params):
            raise PartitionError(
                f"{self.name} requires {self.partition_rule}; "
                f"got n={n}, {dict(params)}")

    def operand_transfers(self, n: int, params) -> tuple[int, ...]:
        return self._transfers(n, params)

    def operand_bytes_in(self, n: int, params) -> int:
        return sum(self._transfers(n, params))

    def compute_cycles(self, n: int, params) -> float:
        return self._compute(n, params)

    def result_bytes_out(self, n: int, params) -> int:
        return self._result(n, params)

    def _require_sizes(self, params) -> None:
        missing = [s for s in self.size_names if s not in params]
        if missing:
            raise ValueError(f"{self.name} needs size parameters {missing}")
        for s in self.size_names:
            if params[s] < 1:
                raise ValueError(f"{self.name}: {s} must be >= 1, got {params[s]}")


def axpy_spec(init_cycles: float = 55.0,
              cycles_per_element: float = 1.47) -> KernelSpec:
    """y = a*x + y over N doubles: x and y slices in, y slice out."""
    def transfers(n, p):
        per = (p["N"] // n) * ELEM_BYTES
        return (per, per)

    return KernelSpec(
        name="axpy",
        size_names=("N",),
        arg_bytes=32,
        partition_rule="N divisible by 8*n_clusters",
        _transfers=transfers,
        _compute=lambda n, p: init_cycles + cycles_per_element * p["N"] / (8 * n),
        _result=lambda n, p: (p["N"] // n) * ELEM_BYTES,
        _check=lambda n, p: p["N"] % (8 * n) == 0,
    )


def atax_spec(cycles_per_element: float = 3.98) -> KernelSpec:
    """y = A^T(A x): every cluster reads the whole A (N x M) plus x."""
    return KernelSpec(
        name="atax",
        size_names=("N", "M"),
        arg_bytes=40,
        partition_rule="M divisible by n_clusters",
        _transfers=lambda n, p: (p["N"] * p["M"] * ELEM_BYTES,
                                 p["N"] * ELEM_BYTES),
        _compute=lambda n, p: cycles_per_element * p["N"] * p["M"],
        _result=lambda n, p: -(-p["N"] * ELEM_BYTES // n),
        _check=lambda n, p: p["M"] % n == 0,
    )


def gemm_spec(cycles_per_macc: float = 1.0) -> KernelSpec:
    """C = A*B (M x K times K x N): A row-block partitioned, B broadcast."""
    return KernelSpec(
        name="gemm",
        size_names=("M", "N", "K"),
        arg_bytes=48,
        partition_rule="M divisible by n_clusters",
        _transfers=lambda n, p: ((p["M"] // n) * p["K"] * ELEM_BYTES,
                                 p["K"] * p["N"] * ELEM_BYTES),
        _compute=lambda n, p: cycles_per_macc * p["M"] * p["N"] * p["K"] / (8 * n),
        _result=lambda n, p: (p["M"] // n) * p["N"] * ELEM_BYTES,
        _check=lambda n, p: p["M"] % n == 0,
    )


def generic_spec(name: str, size_names, arg_bytes: int, transfers, compute,
                 result, check=None, partition_rule: str = "no constraint",
                 ) -> KernelSpec:
    """Assemble a user-defined kernel from cost callables.

    Used by the configuration loader, which builds the callables from
    polynomial expressions in n and the size names.
    """
    if arg_bytes <= 0:
        raise ValueError(f"{name}: arg_bytes must be positive, got {arg_bytes}")
    return KernelSpec(
        name=name,
        size_names=tuple(size_names),
        arg_bytes=arg_bytes,
        partition_rule=partition_rule,
        _transfers=transfers,
        _compute=compute,
        _result=result,
        _check=check if check is not None else (lambda n, p: True),
    )


def builtin_kernels() -> dict[str, KernelSpec]:
    return {k.name: k for k in (axpy_spec(), atax_spec(), gemm_spec())}
