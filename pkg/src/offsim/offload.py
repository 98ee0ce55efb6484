"""The nine-phase offload timeline, in three modes.

Phases, as intervals recorded per participating actor:

  A  host prepares and sends job information (lumped cost)
  B  wakeup: host stores to each cluster (baseline, highest index first,
     one store per ``host_store_interval``) or one multicast store
     (extended); a cluster's interval ends at its wake instant
  C  retrieve job pointer (local access, or a narrow-network load from
     cluster 0 in baseline mode)
  D  retrieve job arguments (baseline: DMA copy from cluster 0's TCDM;
     extended: zero-length, the multicast already delivered them)
  E  fetch operands from the wide SPM — the contended single read port
  F  compute, after an intra-cluster hardware barrier
  G  write results back (uncontended on the return path)
  H  notify completion: central-counter barrier in cluster 0's TCDM
     (baseline) or a message to the job completion unit (extended)
  I  host services the interrupt and resumes

Ideal mode runs only E, F, G with every cluster starting at cycle 0 —
the reference against which offload overhead is measured. Phases A and I
belong to the host and are recorded under cluster index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Simulator, SharedPort, TransferRequest, iceil
from .kernels import KernelSpec
from .mcast import ConfigError, MulticastAddress, prefix_cubes, route
from .topology import (CalibrationConstants, Topology, address_map,
                       cluster_base_by_index)

PHASES = ("A", "B", "C", "D", "E", "F", "G", "H", "I")
MODES = ("baseline", "extended", "ideal")


class ProtocolError(RuntimeError):
    """Completion-unit misuse or an incomplete phase sequence."""


@dataclass
class JobCompletionUnit:
    """Counter peripheral that turns N completion messages into one interrupt.

    The host programs ``offload`` with the expected arrival count; the
    counter auto-resets in the same step the last message lands. If the
    host still has an unserviced interrupt, the new one is deferred until
    ``clear_interrupt``. Exactly one interrupt fires per completed job.
    """

    offload: int = 0
    arrivals: int = 0
    interrupt_pending: bool = False
    _deferred: bool = field(default=False, repr=False)

    def program(self, offload: int) -> None:
        if offload < 1:
            raise ValueError(f"offload register must be >= 1, got {offload}")
        if self.arrivals:
            raise ProtocolError(
                f"programming the offload register while {self.arrivals} "
                "arrivals are in flight")
        self.offload = offload

    def arrive(self) -> bool:
        """Register one completion message; True when the interrupt fires now."""
        if self.offload == 0:
            raise ProtocolError("completion message with no job programmed")
        self.arrivals += 1
        if self.arrivals < self.offload:
            return False
        self.arrivals = 0
        self.offload = 0
        if self.interrupt_pending:
            self._deferred = True
            return False
        self.interrupt_pending = True
        return True

    def clear_interrupt(self) -> bool:
        """Host acknowledges; True when a deferred interrupt fires immediately."""
        if not self.interrupt_pending:
            raise ProtocolError("clearing with no interrupt pending")
        self.interrupt_pending = False
        if self._deferred:
            self._deferred = False
            self.interrupt_pending = True
            return True
        return False


@dataclass(frozen=True)
class JobDescriptor:
    """One offload request: what to run, how wide, and in which mode."""

    kernel: KernelSpec
    params: dict
    n_clusters: int
    mode: str = "baseline"
    arg_bytes: int = 0  # 0 means: use the kernel's argument-record size

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.arg_bytes < 0:
            raise ValueError(f"arg_bytes must be positive, got {self.arg_bytes}")

    @property
    def effective_arg_bytes(self) -> int:
        return self.arg_bytes if self.arg_bytes else self.kernel.arg_bytes


@dataclass(frozen=True)
class PhaseInterval:
    cluster: int
    phase: str
    start: int
    end: int


@dataclass
class OffloadReport:
    """Recorded intervals plus the derived totals for one run."""

    mode: str
    kernel: str
    params: dict
    n_clusters: int
    intervals: list
    total: int

    @property
    def per_phase_stats(self) -> dict:
        """phase -> (min, max, mean) of durations over participating actors."""
        stats = {}
        for ph in PHASES:
            durs = [iv.end - iv.start for iv in self.intervals if iv.phase == ph]
            if durs:
                stats[ph] = (min(durs), max(durs), sum(durs) / len(durs))
        return stats

    def phase_bounds(self, phase: str) -> tuple[int, int]:
        """(earliest start, latest end) over all intervals of one phase."""
        ivs = [iv for iv in self.intervals if iv.phase == phase]
        if not ivs:
            raise KeyError(f"phase {phase!r} not present in this run")
        return min(iv.start for iv in ivs), max(iv.end for iv in ivs)

    def cluster_intervals(self, cluster: int) -> list:
        return [iv for iv in self.intervals if iv.cluster == cluster]

    def to_record(self) -> dict:
        rec = {"mode": self.mode, "kernel": self.kernel}
        for name in ("N", "M", "K"):
            if name in self.params:
                rec[name] = self.params[name]
        rec["n_clusters"] = self.n_clusters
        rec["total_cycles"] = self.total
        rec["phases"] = [
            {"name": ph, "min": lo, "max": hi, "mean": round(mean, 3)}
            for ph, (lo, hi, mean) in self.per_phase_stats.items()
        ]
        return rec


class _Offload:
    """Wires one job's phase machines onto the event engine."""

    def __init__(self, topo, calib, job, sim, port):
        self.topo = topo
        self.calib = calib
        self.job = job
        self.sim = sim
        self.port = port
        self.n = job.n_clusters
        self.kernel = job.kernel
        self.params = job.params
        self.intervals: list[PhaseInterval] = []
        self.jcu = JobCompletionUnit()
        self._transfers = self.kernel.operand_transfers(self.n, self.params)
        self._result_bytes = self.kernel.result_bytes_out(self.n, self.params)
        self._e_start = {}
        self._e_open = {}
        # baseline completion counter (lives in cluster 0's TCDM)
        self._ctr_next_free = 0
        self._ctr_count = 0

    # -- recording ---------------------------------------------------------

    def _actor(self, cluster: int, phase: str) -> str:
        return "host" if phase in ("A", "I") else f"cluster{cluster:02d}"

    def _rec(self, cluster: int, phase: str, start: int, end: int) -> None:
        self.intervals.append(PhaseInterval(cluster, phase, start, end))
        self.sim.emit(self._actor(cluster, phase), phase)

    # -- host side ---------------------------------------------------------

    def start(self) -> None:
        if self.job.mode == "ideal":
            for k in range(self.n):
                self._begin_e(k)
            return
        a_end = self.calib.phase_a_cost
        self._check_store_routing()
        self.sim.schedule_at(a_end, self._after_a)

    def _after_a(self) -> None:
        self._rec(0, "A", 0, self.sim.now)
        if self.job.mode == "extended":
            self.jcu.program(self.n)
            self._wakeup_extended()
        else:
            self._wakeup_baseline()

    def _check_store_routing(self) -> None:
        """Decode the phase-A/B store targets against the address map."""
        ranges = address_map(self.topo)
        stride = self.topo.cluster_stride_bytes
        if self.job.mode == "baseline":
            got = route(MulticastAddress(cluster_base_by_index(self.topo, 0)),
                        ranges)
            want = {0}
            if got != want:
                raise ConfigError(
                    f"job-info store decoded to ports {sorted(got)}, "
                    f"expected {sorted(want)}")
            return
        for start, size in prefix_cubes(self.n):
            req = MulticastAddress(cluster_base_by_index(self.topo, start),
                                   (size - 1) * stride)
            got = route(req, ranges)
            want = set(range(start, start + size))
            if got != want:
                raise ConfigError(
                    f"multicast store {req.addr:#x}/{req.mask:#x} decoded to "
                    f"ports {sorted(got)}, expected {sorted(want)}")

    def _wakeup_baseline(self) -> None:
        """One store per cluster, highest index first, fixed issue spacing."""
        b_start = self.sim.now
        for slot, k in enumerate(reversed(range(self.n))):
            issue = b_start + slot * self.calib.host_store_interval
            wake = issue + self.calib.wakeup_hw_latency
            self.sim.schedule_at(
                wake, (lambda k=k, s=b_start: self._on_wake(k, s)))

    def _wakeup_extended(self) -> None:
        """Multicast store(s); every targeted cluster wakes simultaneously."""
        b_start = self.sim.now
        for j, (start, size) in enumerate(prefix_cubes(self.n)):
            issue = b_start + j * self.calib.host_store_interval
            wake = issue + self.calib.wakeup_sw_total
            for k in range(start, start + size):
                self.sim.schedule_at(
                    wake, (lambda k=k, s=b_start: self._on_wake(k, s)))

    # -- cluster side ------------------------------------------------------

    def _on_wake(self, k: int, b_start: int) -> None:
        self._rec(k, "B", b_start, self.sim.now)
        if self.job.mode == "extended" or k == 0:
            c_cost = self.calib.tcdm_local_access
        elif self.topo.quadrant_of(k) == self.topo.quadrant_of(0):
            c_cost = self.calib.narrow_same_quadrant
        else:
            c_cost = self.calib.narrow_cross_quadrant
        self.sim.schedule(
            c_cost, (lambda k=k, s=self.sim.now: self._after_c(k, s)))

    def _after_c(self, k: int, c_start: int) -> None:
        self._rec(k, "C", c_start, self.sim.now)
        if self.job.mode == "extended" or k == 0:
            # arguments are already in local TCDM; zero-length phase D keeps
            # reports phase-aligned across modes
            self._rec(k, "D", self.sim.now, self.sim.now)
            self._begin_e(k)
            return
        d_cost = (self.calib.dma_setup_one_transfer + self.calib.dma_round_trip
                  + -(-self.job.effective_arg_bytes // self.topo.wide_width_bytes))
        self.sim.schedule(
            d_cost, (lambda k=k, s=self.sim.now: self._after_d(k, s)))

    def _after_d(self, k: int, d_start: int) -> None:
        self._rec(k, "D", d_start, self.sim.now)
        self._begin_e(k)

    def _begin_e(self, k: int) -> None:
        start = self.sim.now
        self._e_start[k] = start
        self._e_open[k] = len(self._transfers)
        setup = (self.calib.dma_setup_two_transfers if len(self._transfers) >= 2
                 else self.calib.dma_setup_one_transfer)
        reqs = [
            TransferRequest(origin=k, nbytes=nb, issue_time=start, setup=setup,
                            round_trip=self.calib.dma_round_trip,
                            tag=f"operand{i}")
            for i, nb in enumerate(self._transfers)
        ]
        # one admission event per cluster: its transfers enter the ring
        # back-to-back, in deterministic cluster order on ties
        self.sim.schedule_at(
            start + setup,
            (lambda k=k, reqs=reqs: [
                self.port.submit_transfer(r, self._operand_done) for r in reqs
            ]))

    def _operand_done(self, req: TransferRequest, t: int) -> None:
        k = req.origin
        self._e_open[k] -= 1
        if self._e_open[k]:
            return
        self._rec(k, "E", self._e_start[k], t)
        compute = self.kernel.compute_cycles(self.n, self.params)
        if self.job.mode != "ideal":
            compute += self.calib.cluster_hw_barrier
        self.sim.schedule(
            compute, (lambda k=k, s=self.sim.now: self._after_f(k, s)))

    def _after_f(self, k: int, f_start: int) -> None:
        self._rec(k, "F", f_start, self.sim.now)
        g_cost = (self.calib.dma_setup_one_transfer + self.calib.dma_round_trip
                  + -(-self._result_bytes // self.topo.wide_width_bytes))
        self.sim.schedule(
            g_cost, (lambda k=k, s=self.sim.now: self._after_g(k, s)))

    def _after_g(self, k: int, g_start: int) -> None:
        self._rec(k, "G", g_start, self.sim.now)
        if self.job.mode == "ideal":
            return
        if self.job.mode == "extended":
            arrival = self.sim.now + self.calib.narrow_cross_quadrant
            self.sim.schedule_at(
                arrival, (lambda k=k, s=self.sim.now: self._jcu_arrival(k, s)))
        else:
            travel = (0 if k == 0 else
                      (self.calib.barrier_atomic_remote
                       - self.calib.barrier_atomic_local) // 2)
            self.sim.schedule_at(
                self.sim.now + travel,
                (lambda k=k, s=self.sim.now, tr=travel: self._ctr_arrival(k, s, tr)))

    # -- completion, extended: job completion unit -------------------------

    def _jcu_arrival(self, k: int, h_start: int) -> None:
        self._rec(k, "H", h_start, self.sim.now)
        if self.jcu.arrive():
            self.sim.schedule(self.calib.completion_unit_notify, self._host_irq)

    # -- completion, baseline: central counter in cluster 0's TCDM ---------

    def _ctr_arrival(self, k: int, h_start: int, travel: int) -> None:
        # the TCDM bank serializes increments: one per cycle, FIFO
        slot = max(self.sim.now, self._ctr_next_free)
        self._ctr_next_free = slot + 1
        self._ctr_count += 1
        is_last = self._ctr_count == self.n
        observe = slot + (self.calib.barrier_atomic_local if k == 0
                          else self.calib.barrier_atomic_remote - travel)
        self.sim.schedule_at(
            observe,
            (lambda k=k, s=h_start, last=is_last: self._ctr_observe(k, s, last)))

    def _ctr_observe(self, k: int, h_start: int, is_last: bool) -> None:
        if not is_last:
            self._rec(k, "H", h_start, self.sim.now)
            return
        # the last arriver sends the host IPI; its notify phase extends
        # until the interrupt lands, so the whole completion path is
        # attributed to some cluster's phase H
        self.sim.schedule(
            self.calib.narrow_cross_quadrant + self.calib.completion_unit_notify,
            (lambda k=k, s=h_start: (self._rec(k, "H", s, self.sim.now),
                                     self._host_irq())))

    # -- host resume -------------------------------------------------------

    def _host_irq(self) -> None:
        wake = self.sim.now
        self.sim.schedule(
            self.calib.phase_i_cost,
            (lambda s=wake: self._rec(0, "I", s, self.sim.now)))


def run_offload(topo: Topology, calib: CalibrationConstants,
                job: JobDescriptor, trace=None,
                livelock_cap: int = 1_000_000_000) -> OffloadReport:
    """Simulate one offload and return the recorded report.

    Raises PartitionError when the problem does not divide over
    ``job.n_clusters``, ValueError when the cluster count exceeds the
    topology, and ProtocolError if the run ends with an incomplete phase
    sequence (which would indicate a wiring bug, not a user error).
    """
    if job.n_clusters > topo.total_clusters:
        raise ValueError(
            f"n_clusters {job.n_clusters} exceeds the topology's "
            f"{topo.total_clusters} clusters")
    job.kernel.check_partition(job.n_clusters, job.params)

    sim = Simulator(livelock_cap=livelock_cap, trace=trace)
    port = SharedPort(sim, beat_bytes=topo.wide_width_bytes, name="wide_spm")
    machine = _Offload(topo, calib, job, sim, port)
    machine.start()
    sim.run_until_idle()

    required = {"E", "F", "G"} if job.mode == "ideal" else set("BCDEFGH")
    for k in range(job.n_clusters):
        have = {iv.phase for iv in machine.intervals if iv.cluster == k}
        if not required <= have:
            raise ProtocolError(
                f"cluster {k} finished without phases "
                f"{sorted(required - have)}")
    if job.mode != "ideal":
        host = {iv.phase for iv in machine.intervals if iv.phase in ("A", "I")}
        if host != {"A", "I"}:
            raise ProtocolError(f"host finished without phases "
                                f"{sorted({'A', 'I'} - host)}")

    total = (max(iv.end for iv in machine.intervals)
             - min(iv.start for iv in machine.intervals))
    return OffloadReport(
        mode=job.mode,
        kernel=job.kernel.name,
        params=dict(job.params),
        n_clusters=job.n_clusters,
        intervals=machine.intervals,
        total=total,
    )
