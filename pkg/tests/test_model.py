import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mwsn.model import (
    SINK_ID,
    ContractViolation,
    EnergyBudget,
    FieldGeometry,
    Packet,
    PacketKind,
    RandomStream,
    ZoneGrid,
    distance,
    zone_center,
    zone_index,
    zone_indices,
)

GRID = ZoneGrid(4, 4, FieldGeometry(1000, 1000))


@pytest.mark.parametrize(
    "pos, zone",
    [((0, 0), 0), ((999.9, 999.9), 15), ((260, 10), 1), ((1000, 1000), 15), ((1000, 0), 3), ((0, 1000), 12)],
)
def test_zone_index_examples(pos, zone):
    assert zone_index(pos, GRID) == zone


@pytest.mark.parametrize("pos", [(-0.1, 5), (5, 1000.01), (math.nan, 3)])
def test_zone_index_rejects_outside(pos):
    with pytest.raises(ContractViolation):
        zone_index(pos, GRID)


def test_zone_center_examples():
    assert zone_center(0, GRID) == (125, 125)
    assert zone_center(15, GRID) == (875, 875)
    assert zone_center(0, ZoneGrid(1, 1, FieldGeometry())) == (500, 500)
    with pytest.raises(ContractViolation):
        zone_center(16, GRID)
    with pytest.raises(ContractViolation):
        zone_center(-1, GRID)


def test_distance_examples():
    assert distance((0, 0), (0, 0)) == 0
    assert distance((0, 0), (3, 4)) == 5
    assert distance((100, 100), (100, 350)) == 250


def test_zone_partition_and_centers():
    rng = np.random.default_rng(7)
    pts = rng.uniform(0, 1000, size=(10_000, 2))
    zones = zone_indices(pts, GRID)
    assert zones.min() >= 0 and zones.max() < GRID.count
    for p, z in zip(pts[:500], zones[:500]):
        assert zone_index(p, GRID) == z
    for z in range(GRID.count):
        assert zone_index(zone_center(z, GRID), GRID) == z


points = st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))


@given(points, points, points)
def test_distance_metric_properties(a, b, c):
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_random_stream_reproducible_and_independent():
    a = RandomStream(3, 7, "mobility")
    b = RandomStream(3, 7, "mobility")
    assert [a.random() for _ in range(1000)] == [b.random() for _ in range(1000)]
    c = RandomStream(3, 7, "deploy")
    d = RandomStream(3, 8, "mobility")
    first = RandomStream(3, 7, "mobility").random()
    assert c.random() != first
    assert d.random() != first


def test_random_stream_block_draws_match_single_draws():
    a = RandomStream(1, 2, "x")
    b = RandomStream(1, 2, "x")
    singles = [a.gauss(0.0, 1.0) for _ in range(100)]
    blocks = np.concatenate([b.normals(30), b.normals(70)])
    assert singles == blocks.tolist()


def test_gauss_with_zero_sigma_returns_mean():
    assert RandomStream(1, 1, "s").gauss(4.5, 0.0) == 4.5


def test_energy_budget_and_packet_contracts():
    assert EnergyBudget(3.0, 1.5).fraction == 0.5
    with pytest.raises(ContractViolation):
        EnergyBudget(3.0, 3.5)
    with pytest.raises(ContractViolation):
        Packet(PacketKind.DATA, 0, 1)
    assert Packet(PacketKind.DATA, 100, 1).bits == 800
    assert SINK_ID == 2**32 - 1
