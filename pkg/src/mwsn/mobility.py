"""Mass-mobility kinematics with specular boundary reflection.

Nodes keep heading and speed between update instants; at each update the
speed is redrawn around the mean and the heading is perturbed by a small
gaussian turn, so motion never starts, stops or turns abruptly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import FieldGeometry, RandomStream, Vec2, ZoneGrid, zone_index

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MobilityParams:
    mean_speed: float = 5.0
    speed_stddev: float = 1.0
    turn_stddev: float = 0.5
    update_interval: float = 5.0

    def __post_init__(self):
        if self.mean_speed < 0 or self.speed_stddev < 0 or self.turn_stddev < 0:
            raise ValueError("mobility parameters must be nonnegative")
        if self.update_interval <= 0:
            raise ValueError("update_interval must be positive")

    @classmethod
    def for_speed(cls, mean_speed: float, **kw) -> "MobilityParams":
        kw.setdefault("speed_stddev", 0.2 * mean_speed)
        return cls(mean_speed=mean_speed, **kw)


@dataclass(frozen=True)
class Kinematics:
    position: Vec2
    heading: float
    speed: float
    next_update_at: float


@dataclass(frozen=True)
class MobilityFactor:
    count: int
    last_zone: int


def draw_speed(params: MobilityParams, rng: RandomStream) -> float:
    return max(0.0, rng.gauss(params.mean_speed, params.speed_stddev))


def _fold(v: float, limit: float, heading: float, vertical: bool) -> tuple[float, float]:
    """Mirror coordinate ``v`` back into [0, limit], flipping the normal heading component.

    A vertical wall (x = 0 or x = width) maps heading h to pi - h; a
    horizontal wall maps it to -h. Loops in case a long step crosses twice.
    """
    while v > limit or v < 0.0:
        v = 2.0 * limit - v if v > limit else -v
        heading = (math.pi - heading) if vertical else -heading
    return v, heading


def reflect(pos, heading: float, geom: FieldGeometry) -> tuple[Vec2, float]:
    x, heading = _fold(float(pos[0]), geom.width, heading, True)
    y, heading = _fold(float(pos[1]), geom.height, heading, False)
    return Vec2(x, y), heading % TWO_PI


def step(
    kin: Kinematics,
    dt: float,
    params: MobilityParams,
    rng: RandomStream,
    now: float,
    geom: FieldGeometry,
) -> Kinematics:
    """Advance one node by ``dt`` seconds starting at simulation time ``now``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    heading, speed, next_at = kin.heading, kin.speed, kin.next_update_at
    if now >= next_at:
        speed = draw_speed(params, rng)
        heading = heading + rng.gauss(0.0, params.turn_stddev)
        next_at = next_at + params.update_interval
    x = kin.position[0] + speed * dt * math.cos(heading)
    y = kin.position[1] + speed * dt * math.sin(heading)
    pos, heading = reflect((x, y), heading, geom)
    return Kinematics(pos, heading, speed, next_at)


def update_mobility_factor(mf: MobilityFactor, new_pos, grid: ZoneGrid) -> MobilityFactor:
    zone = zone_index(new_pos, grid)
    if zone == mf.last_zone:
        return mf
    return replace(mf, count=mf.count + 1, last_zone=zone)


def _fold_array(u, limit: float):
    """Vectorized fold of unfolded coordinates into [0, limit], plus reflection parity."""
    cells = np.floor(u / limit)
    odd = (cells.astype(np.int64) & 1).astype(bool)
    m = u - limit * cells  # offset inside the cell, in [0, limit)
    return np.where(odd, limit - m, m), odd


def _mirror(theta, odd_x, odd_y):
    """Map a heading between unfolded and field coordinates (an involution)."""
    theta = np.where(odd_x, math.pi - theta, theta)
    theta = np.where(odd_y, -theta, theta)
    return theta - TWO_PI * np.floor(theta / TWO_PI)


class Fleet:
    """Kinematic state for every sensor of a trial, one tick at a time.

    Trajectories are independent of everything but node death, so the fleet
    integrates ``block`` ticks ahead in unfolded coordinates (as if the walls
    were mirrors) and folds them back into the field in one vectorized pass.
    Reflection flips the sense of later turns, which the unfolded heading
    tracks through the fold parity. The result matches calling :func:`step`
    per node with that node's stream, up to float rounding.
    """

    def __init__(self, positions, params: MobilityParams, geom: FieldGeometry, streams,
                 dt: float = 1.0, block: int = 200):
        n = len(positions)
        self.n = n
        self.params = params
        self.geom = geom
        self.streams = streams
        self.dt = float(dt)
        self.block = int(block)
        self.xy = np.array(positions, dtype=float).reshape(n, 2)
        self.now = 0.0
        self._limit = np.array([geom.width, geom.height])
        heading = np.array([s.uniform(0.0, TWO_PI) for s in streams])
        self._nbuf = 64
        self._buf = np.empty((n, self._nbuf))
        for i, s in enumerate(streams):
            self._buf[i] = s.normals(self._nbuf)
        self._cursor = np.zeros(n, dtype=np.int64)
        self.speed = np.maximum(0.0, params.mean_speed + params.speed_stddev * self._take(np.arange(n)))
        self.next_update_at = np.full(n, params.update_interval)
        self.stopped = np.zeros(n, dtype=bool)
        # unfolded integration state at the end of the current block
        self._u = self.xy.copy()
        self._theta = heading
        self._t_end = 0.0
        self._xy_block = self.xy[None].copy()
        self._heading_block = heading[None].copy()
        self._speed_block = self.speed[None].copy()
        self._next_block = self.next_update_at[None].copy()
        self._k = 0

    def _take(self, rows: np.ndarray) -> np.ndarray:
        """Next normal variate for each node in ``rows``."""
        spent = rows[self._cursor[rows] >= self._nbuf]
        for i in spent:
            self._buf[i] = self.streams[i].normals(self._nbuf)
            self._cursor[i] = 0
        z = self._buf[rows, self._cursor[rows]]
        self._cursor[rows] += 1
        return z

    def _extend(self) -> None:
        """Integrate the next ``block`` ticks, one straight segment per update interval."""
        p = self.params
        geom = self.geom
        b, dt = self.block, self.dt
        u = np.empty((b, self.n, 2))
        theta = np.empty((b, self.n))
        speed = np.empty((b, self.n))
        nxt = np.empty((b, self.n))
        cur = self._u
        th = self._theta.copy()
        v = np.column_stack((self.speed * np.cos(th), self.speed * np.sin(th)))
        v[self.stopped] = 0.0
        t0 = self._t_end
        k = 0
        while k < b:
            t = t0 + k * dt
            due = np.flatnonzero((t >= self.next_update_at) & ~self.stopped)
            if len(due):
                # Mirroring reverses the sense of a turn; two mirrors cancel.
                cells = np.floor(cur[due] / self._limit).astype(np.int64)
                sense = 1 - 2 * ((cells[:, 0] + cells[:, 1]) & 1)
                sp = np.maximum(0.0, p.mean_speed + p.speed_stddev * self._take(due))
                h = th[due] + sense * (p.turn_stddev * self._take(due))
                self.speed[due] = sp
                th[due] = h
                self.next_update_at[due] += p.update_interval
                v[due] = sp[:, None] * np.column_stack((np.cos(h), np.sin(h)))
            # ticks until the next update instant (at least one)
            live = self.next_update_at[~self.stopped]
            gap = math.ceil((float(live.min()) - t) / dt) if len(live) else b
            end = min(b, k + max(1, gap))
            steps = np.arange(1, end - k + 1, dtype=float)[:, None, None] * dt
            u[k:end] = cur[None] + steps * v[None]
            theta[k:end] = th
            speed[k:end] = self.speed
            nxt[k:end] = self.next_update_at
            cur = u[end - 1]
            k = end
        self._u, self._theta, self._t_end = cur.copy(), th, t0 + b * dt
        x, odd_x = _fold_array(u[:, :, 0], geom.width)
        y, odd_y = _fold_array(u[:, :, 1], geom.height)
        self._xy_block = np.stack((x, y), axis=2)
        self._heading_block = _mirror(theta, odd_x, odd_y)
        self._speed_block = speed
        self._next_block = nxt

    def advance(self) -> None:
        """Move every running node by one tick."""
        self.now += self.dt
        self._k += 1
        if self._k >= len(self._xy_block):
            self._extend()
            self._k = 0
        frozen = self.xy[self.stopped] if self.stopped.any() else None
        self.xy[:] = self._xy_block[self._k]
        if frozen is not None:
            self.xy[self.stopped] = frozen

    def stop(self, i: int) -> None:
        """Freeze node ``i`` where it is (used when it dies)."""
        self.stopped[i] = True

    @property
    def heading(self) -> np.ndarray:
        return self._heading_block[self._k]

    def kinematics(self, i: int) -> Kinematics:
        k = self._k
        return Kinematics(
            Vec2(float(self.xy[i, 0]), float(self.xy[i, 1])),
            float(self._heading_block[k, i]),
            float(self._speed_block[k, i]),
            float(self._next_block[k, i]),
        )
