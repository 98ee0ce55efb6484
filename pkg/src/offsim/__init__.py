"""Transaction-level simulator of host-to-manycore job offloading.

A host core hands parallel jobs to a hierarchical accelerator (quadrants of
clusters) over a nine-phase protocol; this package simulates that protocol
deterministically in baseline, multicast-extended, and ideal modes, carries
the matching closed-form runtime models, and ships a CLI for sweeps and
model validation.
"""

from .analytic import (AnalyticEstimate, SpeedupMetrics, atax_total,
                       axpy_total, compose, estimate, phase_e_axpy,
                       phase_f_axpy, phase_g, relative_error, speedup_metrics)
from .engine import (LivelockError, SharedPort, Simulator, TransferRequest,
                     iceil)
from .kernels import (KernelSpec, PartitionError, atax_spec, axpy_spec,
                      builtin_kernels, gemm_spec, generic_spec)
from .mcast import (AddressRange, CapacityError, ConfigError, CubeError,
                    DecodeError, MulticastAddress, encode, expand,
                    port_match, prefix_cubes, route)
from .offload import (JobCompletionUnit, JobDescriptor, OffloadReport,
                      PhaseInterval, ProtocolError, run_offload)
from .topology import (CalibrationConstants, Topology, address_map,
                       cluster_base_address, cluster_base_by_index)

__version__ = "0.1.0"

__all__ = [
    "AddressRange", "AnalyticEstimate", "CalibrationConstants",
    "CapacityError", "ConfigError", "CubeError", "DecodeError",
    "JobCompletionUnit", "JobDescriptor", "KernelSpec", "LivelockError",
    "MulticastAddress", "OffloadReport", "PartitionError", "PhaseInterval",
    "ProtocolError", "SharedPort", "Simulator", "SpeedupMetrics", "Topology",
    "TransferRequest", "address_map", "atax_spec", "atax_total", "axpy_spec",
    "axpy_total", "builtin_kernels", "cluster_base_address",
    "cluster_base_by_index", "compose", "encode", "estimate", "expand",
    "gemm_spec", "generic_spec", "iceil", "phase_e_axpy", "phase_f_axpy",
    "phase_g", "port_match", "prefix_cubes", "relative_error", "route",
    "run_offload", "speedup_metrics",
]
