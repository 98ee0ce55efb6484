"""Multicast address cubes and crossbar port routing.

A multicast store names its destination set as an (addr, mask) pair: the
1-bits of ``mask`` are don't-care positions, so the pair encodes the
2^popcount(mask) addresses reachable by substituting 0/1 into the masked
bits ("cube"). Crossbar address-decode ranges are themselves cubes (their
length is a power of two and their base is aligned), so a master port
matches a request exactly when the two cubes intersect, which the hardware
evaluates with a single reduction-AND:

    match = &((req.mask | range.mask) | ~(req.addr ^ range.base))

Only stores are ever multicast; loads keep classical unicast decode.
"""

from __future__ import annotations

from dataclasses import dataclass

ADDR_BITS = 64
_ADDR_MASK = (1 << ADDR_BITS) - 1


class CubeError(ValueError):
    """Address set is not expressible as a single (addr, mask) cube."""


class CapacityError(ValueError):
    """Cube expansion would exceed the caller-supplied limit."""


class DecodeError(LookupError):
    """A unicast request did not decode to exactly one port."""


class ConfigError(ValueError):
    """Address map is inconsistent (overlap, or multicast with no target)."""


@dataclass(frozen=True)
class MulticastAddress:
    """Destination cube: ``addr`` is any member, ``mask`` the don't-care bits."""

    addr: int
    mask: int = 0

    def __post_init__(self):
        if not 0 <= self.addr <= _ADDR_MASK:
            raise ValueError(f"addr out of range: {self.addr:#x}")
        if not 0 <= self.mask <= _ADDR_MASK:
            raise ValueError(f"mask out of range: {self.mask:#x}")

    @property
    def base(self) -> int:
        """Smallest member of the cube (masked bits cleared)."""
        return self.addr & ~self.mask

    @property
    def count(self) -> int:
        return 1 << bin(self.mask).count("1")

    def is_unicast(self) -> bool:
        return self.mask == 0


@dataclass(frozen=True)
class AddressRange:
    """Decode range of one crossbar master port; always cube-shaped."""

    base: int
    length: int
    port: int

    def __post_init__(self):
        if self.length <= 0 or self.length & (self.length - 1):
            raise ValueError(
                f"range length must be a power of two, got {self.length:#x}")
        if self.base % self.length:
            raise ValueError(
                f"range base {self.base:#x} is not aligned to length {self.length:#x}")
        if not 0 <= self.base <= _ADDR_MASK:
            raise ValueError(f"range base out of range: {self.base:#x}")
        if self.port < 0:
            raise ValueError(f"port index must be non-negative, got {self.port}")

    @property
    def mask(self) -> int:
        return self.length - 1

    @property
    def end(self) -> int:
        return self.base + self.length

    def covers(self, addr: int) -> bool:
        return self.base <= addr < self.end


def expand(m: MulticastAddress, limit: int = 4096) -> tuple[int, ...]:
    """Enumerate the cube's members in ascending order.

    Raises CapacityError when the cube has more than ``limit`` members; the
    guard exists because a wide mask encodes exponentially many addresses.
    """
    if m.count > limit:
        raise CapacityError(
            f"cube of {m.count} addresses exceeds expansion limit {limit}")
    base = m.base
    out = []
    sub = 0
    while True:
        out.append(base | sub)
        if sub == m.mask:
            break
        sub = (sub - m.mask) & m.mask  # next subset of the mask bits
    return tuple(sorted(out))


def encode(addresses) -> MulticastAddress:
    """Inverse of expand: fold an address set into its (addr, mask) cube.

    The returned addr is the minimum member (canonical form). Raises
    CubeError when the set is not exactly a cube — e.g. {0x0, 0xC0000}
    differs in two bits but has only two members, not four.
    """
    addrs = sorted(set(addresses))
    if not addrs:
        raise CubeError("cannot encode an empty address set")
    base = addrs[0]
    toggles = 0
    for a in addrs:
        toggles |= a ^ base
    if len(addrs) != (1 << bin(toggles).count("1")):
        raise CubeError(
            f"{len(addrs)} addresses toggle bits {toggles:#x}: not a cube "
            f"(a cube over those bits has {1 << bin(toggles).count('1')} members)")
    for a in addrs:
        if a & ~toggles != base:
            raise CubeError(
                f"address {a:#x} does not share the fixed bits of base {base:#x}")
    return MulticastAddress(base, toggles)


def port_match(req: MulticastAddress, rng: AddressRange) -> bool:
    """Hardware match rule: true iff the request cube intersects the range."""
    want = _ADDR_MASK
    return (req.mask | rng.mask | (~(req.addr ^ rng.base) & want)) == want


def ensure_disjoint(ranges) -> None:
    """Raise ConfigError when any two decode ranges overlap."""
    rs = list(ranges)
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            a, b = rs[i], rs[j]
            # two cubes intersect iff they agree on all mutually-fixed bits
            if (a.base ^ b.base) & ~a.mask & ~b.mask == 0:
                raise ConfigError(
                    f"address ranges overlap: port {a.port} ({a.base:#x}/{a.length:#x}) "
                    f"and port {b.port} ({b.base:#x}/{b.length:#x})")


def route(req: MulticastAddress, ranges) -> set[int]:
    """Decode a store request to the set of matching master ports.

    Unicast requests (mask 0) must hit exactly one port, like a classical
    address decoder; a miss raises DecodeError. A multicast request that
    matches nothing can only arise from a bad address map and raises
    ConfigError.
    """
    ensure_disjoint(ranges)
    ports = {r.port for r in ranges if port_match(req, r)}
    if req.is_unicast():
        if len(ports) != 1:
            raise DecodeError(
                f"unicast {req.addr:#x} matched {len(ports)} ports, expected 1")
    elif not ports:
        raise ConfigError(
            f"multicast {req.addr:#x}/{req.mask:#x} matched no ports")
    return ports


def prefix_cubes(n: int) -> tuple[tuple[int, int], ...]:
    """Split the index range [0, n) into aligned power-of-two blocks.

    Greedy descending decomposition: [0,6) -> (0,4),(4,2). Each (start, size)
    block is a valid cube over the index bits (start is a multiple of size),
    and at most log2(n)+1 blocks are produced. Used to multicast to the
    first n clusters when n is not itself a power of two.
    """
    if n < 1:
        raise ValueError(f"need at least one index, got {n}")
    out = []
    start = 0
    rem = n
    while rem:
        size = 1 << (rem.bit_length() - 1)
        out.append((start, size))
        start += size
        rem -= size
    return tuple(out)
