import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwsn.mobility import (
    Fleet,
    Kinematics,
    MobilityFactor,
    MobilityParams,
    reflect,
    step,
    update_mobility_factor,
)
from mwsn.model import FieldGeometry, RandomStream, Vec2, ZoneGrid

FIELD = FieldGeometry(1000, 1000)
GRID = ZoneGrid(4, 4, FIELD)


def kin(x, y, heading=0.0, speed=5.0, next_at=1e9):
    return Kinematics(Vec2(x, y), heading, speed, next_at)


def test_stationary_node_does_not_move():
    out = step(kin(300, 300, 1.2, 0.0), 1.0, MobilityParams(0, 0), RandomStream(1, 0, "m"), 0.0, FIELD)
    assert out.position == (300, 300)


def test_straight_line_step():
    out = step(kin(500, 500), 1.0, MobilityParams(), RandomStream(1, 0, "m"), 0.0, FIELD)
    assert out.position.x == pytest.approx(505)
    assert out.position.y == pytest.approx(500)
    assert out.speed == 5.0


def test_step_is_deterministic():
    p = MobilityParams.for_speed(10)
    a = step(kin(10, 10, next_at=0), 1.0, p, RandomStream(4, 2, "m"), 0.0, FIELD)
    b = step(kin(10, 10, next_at=0), 1.0, p, RandomStream(4, 2, "m"), 0.0, FIELD)
    assert a == b
    assert a.next_update_at == p.update_interval


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        step(kin(1, 1), 0.0, MobilityParams(), RandomStream(1, 0, "m"), 0.0, FIELD)


def test_reflect_examples():
    pos, h = reflect((1004, 500), 0.0, FIELD)
    assert pos == (996, 500)
    assert h == pytest.approx(math.pi)
    pos, h = reflect((-3, 500), math.pi, FIELD)
    assert pos == (3, 500)
    assert h == pytest.approx(0.0, abs=1e-12)
    pos, h = reflect((400, 1010), math.pi / 2, FIELD)
    assert pos == (400, 990)
    assert h == pytest.approx(3 * math.pi / 2)
    assert reflect((400, 600), 1.0, FIELD) == ((400, 600), 1.0)


def test_mobility_factor_examples():
    mf = MobilityFactor(0, 3)
    assert update_mobility_factor(mf, (800, 100), GRID) == mf  # still zone 3
    assert update_mobility_factor(MobilityFactor(0, 0), (300, 100), GRID) == MobilityFactor(1, 1)
    assert update_mobility_factor(MobilityFactor(0, 0), (260, 260), GRID) == MobilityFactor(1, 5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), speed=st.floats(0, 120))
def test_fleet_stays_inside_field(seed, speed):
    n = 20
    pos = np.random.default_rng(seed).uniform(0, 1000, (n, 2))
    fleet = Fleet(pos, MobilityParams.for_speed(speed), FIELD, [RandomStream(seed, i, "mobility") for i in range(n)])
    for _ in range(300):
        fleet.advance()
        assert (fleet.xy >= 0).all() and (fleet.xy <= 1000).all()


def test_containment_fuzz_at_50_mps():
    n = 10
    pos = np.random.default_rng(0).uniform(0, 1000, (n, 2))
    fleet = Fleet(pos, MobilityParams.for_speed(50), FIELD, [RandomStream(0, i, "mobility") for i in range(n)])
    for _ in range(10_000):
        fleet.advance()
    assert (fleet.xy >= 0).all() and (fleet.xy <= 1000).all()


def test_momentum_without_noise():
    p = MobilityParams(mean_speed=7.0, speed_stddev=0.0, turn_stddev=0.0)
    k = kin(100, 100, heading=0.3, speed=7.0, next_at=0.0)
    rng = RandomStream(1, 0, "m")
    path = []
    for t in range(20):
        k = step(k, 1.0, p, rng, float(t), FIELD)
        path.append(k.position)
        assert k.heading == pytest.approx(0.3)
        assert k.speed == 7.0
    for a, b in zip(path, path[1:]):
        assert math.hypot(b[0] - a[0], b[1] - a[1]) == pytest.approx(7.0)


@pytest.mark.parametrize("speed, interval", [(5, 5.0), (20, 5.0), (10, 2.5), (30, 0.5), (0, 5.0)])
def test_fleet_matches_scalar_step(speed, interval):
    n = 12
    p = MobilityParams.for_speed(speed, update_interval=interval)
    pos = np.random.default_rng(1).uniform(0, 1000, (n, 2))
    fleet = Fleet(pos, p, FIELD, [RandomStream(9, i, "mobility") for i in range(n)], block=17)
    streams = [RandomStream(9, i, "mobility") for i in range(n)]
    states = []
    for i, s in enumerate(streams):
        heading = s.uniform(0.0, 2 * math.pi)
        speed0 = max(0.0, s.gauss(p.mean_speed, p.speed_stddev))
        states.append(Kinematics(Vec2(*pos[i]), heading, speed0, p.update_interval))
    for t in range(150):
        fleet.advance()
        states = [step(k, 1.0, p, s, float(t), FIELD) for k, s in zip(states, streams)]
        for i, k in enumerate(states):
            got = fleet.kinematics(i)
            assert got.position.x == pytest.approx(k.position.x, abs=1e-8)
            assert got.position.y == pytest.approx(k.position.y, abs=1e-8)
            assert got.speed == pytest.approx(k.speed)
            assert got.next_update_at == k.next_update_at
            dh = (got.heading - k.heading + math.pi) % (2 * math.pi) - math.pi
            assert abs(dh) < 1e-8


def test_stopped_node_stays_put():
    pos = np.array([[500.0, 500.0], [100.0, 100.0]])
    fleet = Fleet(pos, MobilityParams.for_speed(10), FIELD, [RandomStream(1, i, "mobility") for i in range(2)])
    fleet.advance()
    fleet.stop(0)
    frozen = fleet.xy[0].copy()
    for _ in range(50):
        fleet.advance()
    assert (fleet.xy[0] == frozen).all()
    assert not (fleet.xy[1] == pos[1]).all()


def test_mobility_params_validation():
    with pytest.raises(ValueError):
        MobilityParams(mean_speed=-1)
    with pytest.raises(ValueError):
        MobilityParams(update_interval=0)
    assert MobilityParams.for_speed(10).speed_stddev == pytest.approx(2.0)
