"""Platform description: cluster grid, memory map, and timing constants.

Everything downstream (routing, the port model, the offload timeline) reads
its structure from ``Topology`` and its cycle costs from
``CalibrationConstants``; both are frozen dataclasses, so a constructed
simulation can never observe a half-updated platform.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .mcast import AddressRange, ensure_disjoint

# Region bases for the shared memories and the interrupt controller. The
# cluster region base is a Topology field (it shapes the multicast bit
# layout); these three only need to stay clear of it.
NARROW_SPM_BASE = 0x7000_0000
WIDE_SPM_BASE = 0x8000_0000
CLINT_BASE = 0x0200_0000
CLINT_BYTES = 0x1_0000


def _is_power_of_two(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class Topology:
    """Geometry of the accelerator: quadrants of clusters plus shared SPMs.

    Cluster TCDM windows sit at ``cluster_region_base`` with one naturally
    aligned ``cluster_stride_bytes`` window per flattened cluster index, so
    the cluster/quadrant indices occupy fixed bit fields of the address —
    the property multicast cube addressing relies on.
    """

    n_quadrants: int = 8
    clusters_per_quadrant: int = 4
    compute_cores_per_cluster: int = 8
    dma_cores_per_cluster: int = 1
    tcdm_bytes: int = 131072
    tcdm_banks: int = 32
    spm_wide_bytes: int = 1048576
    spm_narrow_bytes: int = 524288
    narrow_width_bytes: int = 8
    wide_width_bytes: int = 64
    cluster_stride_bytes: int = 0x40000
    cluster_region_base: int = 0x1000_0000

    def __post_init__(self):
        for name in ("n_quadrants", "clusters_per_quadrant",
                     "compute_cores_per_cluster", "dma_cores_per_cluster"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("tcdm_bytes", "tcdm_banks", "spm_wide_bytes",
                     "spm_narrow_bytes", "narrow_width_bytes",
                     "wide_width_bytes", "cluster_stride_bytes"):
            if not _is_power_of_two(getattr(self, name)):
                raise ValueError(
                    f"{name} must be a power of two, got {getattr(self, name)}")
        if self.cluster_stride_bytes < self.tcdm_bytes:
            raise ValueError(
                f"cluster_stride_bytes ({self.cluster_stride_bytes:#x}) must be >= "
                f"tcdm_bytes ({self.tcdm_bytes:#x})")
        region = self.total_clusters * self.cluster_stride_bytes
        if self.cluster_region_base % region:
            raise ValueError(
                f"cluster_region_base {self.cluster_region_base:#x} must be aligned "
                f"to the full cluster region ({region:#x} bytes)")

    @property
    def total_clusters(self) -> int:
        return self.n_quadrants * self.clusters_per_quadrant

    def cluster_index(self, quadrant: int, cluster: int) -> int:
        """Flattened cluster index; raises IndexError when out of range."""
        if not 0 <= quadrant < self.n_quadrants:
            raise IndexError(
                f"quadrant {quadrant} out of range [0, {self.n_quadrants})")
        if not 0 <= cluster < self.clusters_per_quadrant:
            raise IndexError(
                f"cluster {cluster} out of range [0, {self.clusters_per_quadrant})")
        return quadrant * self.clusters_per_quadrant + cluster

    def quadrant_of(self, index: int) -> int:
        if not 0 <= index < self.total_clusters:
            raise IndexError(
                f"cluster index {index} out of range [0, {self.total_clusters})")
        return index // self.clusters_per_quadrant


def cluster_base_address(topo: Topology, quadrant: int, cluster: int) -> int:
    """Base byte address of one cluster's TCDM window."""
    return (topo.cluster_region_base
            + topo.cluster_index(quadrant, cluster) * topo.cluster_stride_bytes)


def cluster_base_by_index(topo: Topology, index: int) -> int:
    """Base address by flattened cluster index."""
    if not 0 <= index < topo.total_clusters:
        raise IndexError(
            f"cluster index {index} out of range [0, {topo.total_clusters})")
    return topo.cluster_region_base + index * topo.cluster_stride_bytes


def address_map(topo: Topology) -> tuple[AddressRange, ...]:
    """Port-decode table for the narrow crossbar.

    Ports 0..C-1 are the per-cluster windows in flattened index order,
    followed by the narrow SPM, the wide SPM, and the CLINT. All ranges are
    cubes by construction and validated pairwise disjoint.
    """
    ranges = [
        AddressRange(cluster_base_by_index(topo, i), topo.cluster_stride_bytes, i)
        for i in range(topo.total_clusters)
    ]
    c = topo.total_clusters
    ranges.append(AddressRange(NARROW_SPM_BASE, topo.spm_narrow_bytes, c))
    ranges.append(AddressRange(WIDE_SPM_BASE, topo.spm_wide_bytes, c + 1))
    ranges.append(AddressRange(CLINT_BASE, CLINT_BYTES, c + 2))
    ensure_disjoint(ranges)
    return tuple(ranges)


@dataclass(frozen=True)
class CalibrationConstants:
    """Cycle costs of the offload protocol's building blocks.

    The DMA and wakeup numbers are platform measurements; the rest are
    calibration knobs, with defaults tuned so the aggregate baseline and
    extended offload overheads land in their measured bands (see
    docs/calibration.md for the per-constant provenance).
    """

    dma_setup_two_transfers: int = 53
    dma_setup_one_transfer: int = 21
    dma_round_trip: int = 55
    wakeup_hw_latency: int = 39
    wakeup_sw_total: int = 47
    host_store_interval: int = 20
    tcdm_local_access: int = 5
    narrow_same_quadrant: int = 15
    narrow_cross_quadrant: int = 25
    phase_a_cost: int = 70
    phase_i_cost: int = 25
    barrier_atomic_local: int = 10
    barrier_atomic_remote: int = 30
    completion_unit_notify: int = 20
    cluster_hw_barrier: int = 0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(
                    f"{f.name} must be a non-negative integer, got {v!r}")
        if self.barrier_atomic_remote < self.barrier_atomic_local:
            raise ValueError(
                "barrier_atomic_remote must be >= barrier_atomic_local "
                f"({self.barrier_atomic_remote} < {self.barrier_atomic_local})")
