"""Deterministic discrete-event core and the shared single-port DMA model.

Event times are integer cycles; ties fire in scheduling order via a
monotone sequence number, which makes every run a pure function of its
inputs. The one contended resource is ``SharedPort``: all pending transfers
share a single beat of bandwidth per cycle, handed out round-robin. Port
service is advanced lazily — between ring changes the composition is fixed,
so the next completion cycle is computed in closed form and the beat ledger
is only replayed (by the compiled kernel in ``accel``) up to that point.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .accel import serve_window

_EPS = 1e-9


def iceil(x) -> int:
    """Ceiling with a fuzz guard so accumulated float error cannot round up."""
    return int(math.ceil(x - _EPS))


class LivelockError(RuntimeError):
    """Event budget exhausted: the model is livelocked or the cap is too small."""


class Simulator:
    """Priority-queue event loop with integer cycle times.

    Fractional delays (per-element compute costs accumulate in real form)
    are rounded up exactly once, at scheduling, so event times stay integer
    and no drift accumulates across phases.
    """

    def __init__(self, livelock_cap: int = 1_000_000_000, trace=None):
        self.now = 0
        self.livelock_cap = livelock_cap
        self.trace = trace  # callable(cycle, actor, label), or None
        self._queue: list = []
        self._seq = 0
        self._fired = 0

    def schedule(self, delay, action, actor=None, label=None) -> int:
        """Enqueue ``action`` at now + ceil(delay); returns the fire cycle."""
        if delay < 0:
            raise ValueError(f"negative delay: {delay}")
        return self.schedule_at(self.now + iceil(delay), action, actor, label)

    def schedule_at(self, time: int, action, actor=None, label=None) -> int:
        t = iceil(time)
        if t < self.now:
            raise ValueError(f"cannot schedule into the past: {t} < {self.now}")
        heapq.heappush(self._queue, (t, self._seq, action, actor, label))
        self._seq += 1
        return t

    def emit(self, actor, label) -> None:
        if self.trace is not None:
            self.trace(self.now, actor, label)

    def run_until_idle(self) -> int:
        """Fire events in (time, sequence) order; returns the last event's cycle."""
        while self._queue:
            t, _, action, actor, label = heapq.heappop(self._queue)
            self.now = t
            self._fired += 1
            if self._fired > self.livelock_cap:
                raise LivelockError(
                    f"exceeded {self.livelock_cap} events at cycle {t}")
            if label is not None:
                self.emit(actor, label)
            action()
        return self.now


@dataclass
class TransferRequest:
    """One bulk read through the shared wide-SPM port."""

    origin: int
    nbytes: int
    issue_time: int = 0
    setup: int = 0
    round_trip: int = 0
    tag: str = ""
    submit_time: int = field(init=False, default=-1)
    finish_time: int = field(init=False, default=-1)

    def __post_init__(self):
        if self.nbytes <= 0:
            raise ValueError(f"transfer must move at least one byte, got {self.nbytes}")
        for name in ("issue_time", "setup", "round_trip"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def beats(self, beat_bytes: int) -> int:
        return -(-self.nbytes // beat_bytes)


class SharedPort:
    """Beat-granular round-robin arbiter over one read port.

    A transfer submitted at cycle t is eligible for beats from t+1 (next
    beat boundary) and completes ``round_trip`` cycles after its last beat.
    While any transfer is pending exactly one beat is served per cycle, so
    the port is work-conserving, and the round-robin hands each pending
    transfer beats that never differ by more than one within a stable
    window.
    """

    def __init__(self, sim: Simulator, beat_bytes: int = 64,
                 name: str = "wide_spm", capacity: int = 64):
        if beat_bytes <= 0:
            raise ValueError(f"beat_bytes must be positive, got {beat_bytes}")
        self.sim = sim
        self.beat_bytes = beat_bytes
        self.name = name
        self._ids = np.zeros(capacity, np.int64)
        self._rem = np.zeros(capacity, np.int64)
        self._size = 0
        self._ptr = 0
        self._synced = sim.now  # cycle through which service is accounted
        self._gen = 0           # invalidates stale projection events
        self._next_id = 0
        self._live: dict[int, tuple[TransferRequest, object]] = {}

    @property
    def pending(self) -> int:
        """Transfers in the ring as of the last service sync."""
        return self._size

    def submit_transfer(self, req: TransferRequest, on_complete) -> None:
        """Admit a transfer; ``on_complete(req, cycle)`` fires at completion."""
        self._sync_to(self.sim.now)
        nb = req.beats(self.beat_bytes)
        if self._size == len(self._ids):
            self._ids = np.concatenate([self._ids, np.zeros_like(self._ids)])
            self._rem = np.concatenate([self._rem, np.zeros_like(self._rem)])
        tid = self._next_id
        self._next_id += 1
        self._ids[self._size] = tid
        self._rem[self._size] = nb
        self._size += 1
        self._live[tid] = (req, on_complete)
        req.submit_time = self.sim.now
        self._project()

    def _sync_to(self, t: int) -> None:
        budget = t - self._synced
        if budget <= 0:
            return
        if self._size == 0:
            self._synced = t
            return
        size, ptr, nfin, fin_ids, fin_cycles = serve_window(
            self._ids, self._rem, self._size, self._ptr, self._synced, budget)
        self._size = int(size)
        self._ptr = int(ptr)
        self._synced = t
        for i in range(int(nfin)):
            req, cb = self._live.pop(int(fin_ids[i]))
            finish = int(fin_cycles[i]) + req.round_trip
            req.finish_time = finish
            self.sim.schedule_at(
                finish,
                (lambda r=req, f=finish, cb=cb: cb(r, f)),
                actor=f"cluster{req.origin:02d}",
                label=f"{self.name}:{r_tag(req)}:done")

    def _project(self) -> None:
        """Schedule a sync at the next completion cycle (closed form)."""
        self._gen += 1
        if self._size == 0:
            return
        k = self._size
        best = None
        for i in range(k):
            delta = ((i - self._ptr) % k) + 1
            f = self._synced + (int(self._rem[i]) - 1) * k + delta
            if best is None or f < best:
                best = f
        gen = self._gen
        self.sim.schedule_at(best, lambda: self._on_sync(gen))

    def _on_sync(self, gen: int) -> None:
        if gen != self._gen:
            return  # ring changed since this projection; superseded
        self._sync_to(self.sim.now)
        self._project()


def r_tag(req: TransferRequest) -> str:
    return req.tag if req.tag else f"xfer{req.origin}"
