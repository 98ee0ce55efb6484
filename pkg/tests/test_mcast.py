from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offsim.mcast import (AddressRange, CapacityError, ConfigError, CubeError,
                          DecodeError, MulticastAddress, encode, expand,
                          port_match, prefix_cubes, route)
from offsim.topology import Topology, address_map

# Worked example: a store to cluster (2,1)'s window with don't-care bits 19
# and 21 reaches clusters 1, 3, 9, 11 of the default map.
EXAMPLE_REQ = MulticastAddress(0x1024_0000, 0x0028_0000)
EXAMPLE_PORTS = {1, 3, 9, 11}


def test_expand_example():
    # addr may be any member of the cube, not necessarily the base
    m = MulticastAddress(0x24_0000, 0x28_0000)
    assert m.base == 0x04_0000
    assert m.count == 4
    assert expand(m) == (0x04_0000, 0x0C_0000, 0x24_0000, 0x2C_0000)


def test_expand_unicast():
    m = MulticastAddress(0xDEAD_BEE8)
    assert m.is_unicast()
    assert expand(m) == (0xDEAD_BEE8,)


def test_expand_dense_low_bits():
    assert expand(MulticastAddress(0, 0x3)) == (0, 1, 2, 3)


def test_expand_capacity():
    wide = MulticastAddress(0, (1 << 13) - 1)  # 8192 members
    with pytest.raises(CapacityError):
        expand(wide)
    assert len(expand(wide, limit=8192)) == 8192


def test_encode_example():
    m = encode([0x24_0000, 0x04_0000, 0x2C_0000, 0x0C_0000])
    assert (m.addr, m.mask) == (0x04_0000, 0x28_0000)


def test_encode_rejects_non_cube():
    # two addresses toggling two bits would need four members
    with pytest.raises(CubeError):
        encode([0x0, 0xC_0000])
    with pytest.raises(CubeError):
        encode([0, 1, 2])  # wrong cardinality
    with pytest.raises(CubeError):
        encode([0, 3, 5, 6])  # four members but the XORs span three bits
    with pytest.raises(CubeError):
        encode([])


def test_encode_singleton():
    m = encode({0x1000_0000})
    assert m.is_unicast() and m.addr == 0x1000_0000


def test_address_validation():
    with pytest.raises(ValueError):
        MulticastAddress(-1)
    with pytest.raises(ValueError):
        MulticastAddress(0, 1 << 64)
    with pytest.raises(ValueError):
        AddressRange(0x100, 0x30, 0)  # length not a power of two
    with pytest.raises(ValueError):
        AddressRange(0x100, 0x200, 0)  # base not aligned
    with pytest.raises(ValueError):
        AddressRange(0, 0x100, -1)


def test_port_match_example():
    ranges = address_map(Topology())
    hits = {r.port for r in ranges if port_match(EXAMPLE_REQ, r)}
    assert hits == EXAMPLE_PORTS


def test_port_match_equals_membership_intersection():
    # the reduction-AND rule is exactly "some expanded member lies in range"
    ranges = address_map(Topology())
    members = expand(EXAMPLE_REQ)
    for r in ranges:
        assert port_match(EXAMPLE_REQ, r) == any(r.covers(a) for a in members)


def test_route_example():
    assert route(EXAMPLE_REQ, address_map(Topology())) == EXAMPLE_PORTS


def test_route_unicast():
    ranges = address_map(Topology())
    assert route(MulticastAddress(0x1024_0000), ranges) == {9}
    assert route(MulticastAddress(0x1024_0000 + 0x3FFFF), ranges) == {9}


def test_route_full_cluster_cube():
    topo = Topology()
    req = MulticastAddress(topo.cluster_region_base, 31 * 0x4_0000)
    assert route(req, address_map(topo)) == set(range(32))


def test_route_unicast_miss():
    with pytest.raises(DecodeError):
        route(MulticastAddress(0x0), address_map(Topology()))


def test_route_multicast_no_target():
    with pytest.raises(ConfigError):
        route(MulticastAddress(0x0, 0x3), address_map(Topology()))


def test_route_overlapping_map_rejected():
    bad = [AddressRange(0x0, 0x100, 0), AddressRange(0x0, 0x40, 1)]
    with pytest.raises(ConfigError):
        route(MulticastAddress(0x0), bad)


def test_prefix_cubes_examples():
    assert prefix_cubes(1) == ((0, 1),)
    assert prefix_cubes(4) == ((0, 4),)
    assert prefix_cubes(6) == ((0, 4), (4, 2))
    assert prefix_cubes(7) == ((0, 4), (4, 2), (6, 1))
    assert prefix_cubes(32) == ((0, 32),)
    with pytest.raises(ValueError):
        prefix_cubes(0)


@pytest.mark.parametrize("n", range(1, 65))
def test_prefix_cubes_properties(n):
    blocks = prefix_cubes(n)
    covered = []
    for start, size in blocks:
        assert size & (size - 1) == 0
        assert start % size == 0  # naturally aligned => expressible as a cube
        covered.extend(range(start, start + size))
    assert covered == list(range(n))
    sizes = [s for _, s in blocks]
    assert sizes == sorted(sizes, reverse=True)
    assert len(blocks) <= n.bit_length()


_masks = st.lists(st.integers(0, 23), max_size=8).map(
    lambda bits: reduce(lambda a, b: a | (1 << b), bits, 0))


@settings(deadline=None)
@given(addr=st.integers(0, (1 << 24) - 1), mask=_masks)
def test_expand_encode_round_trip(addr, mask):
    m = MulticastAddress(addr, mask)
    members = expand(m, limit=1 << 8)
    assert len(members) == m.count
    back = encode(members)
    assert (back.addr, back.mask) == (m.base, m.mask)


@settings(deadline=None)
@given(addr=st.integers(0, (1 << 24) - 1), mask=_masks, extra=_masks)
def test_widening_mask_only_adds_ports(addr, mask, extra):
    ranges = address_map(Topology())
    narrow = MulticastAddress(addr, mask)
    wide = MulticastAddress(addr, mask | extra)
    hit_n = {r.port for r in ranges if port_match(narrow, r)}
    hit_w = {r.port for r in ranges if port_match(wide, r)}
    assert hit_n <= hit_w
