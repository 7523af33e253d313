"""Domain types, field/zone geometry and seeded random streams."""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SINK_ID = 2**32 - 1
BROADCAST = -1


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


class Vec2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class FieldGeometry:
    width: float = 1000.0
    height: float = 1000.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ContractViolation("field dimensions must be positive")

    def contains(self, pos) -> bool:
        return 0.0 <= pos[0] <= self.width and 0.0 <= pos[1] <= self.height


@dataclass(frozen=True)
class ZoneGrid:
    rows: int = 4
    cols: int = 4
    field: FieldGeometry = field(default_factory=FieldGeometry)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ContractViolation("zone grid needs at least one row and column")

    @property
    def count(self) -> int:
        return self.rows * self.cols

    @property
    def cell_width(self) -> float:
        return self.field.width / self.cols

    @property
    def cell_height(self) -> float:
        return self.field.height / self.rows

    @property
    def max_centerness(self) -> float:
        # largest Manhattan distance from a cell point to the cell center
        return (self.cell_width + self.cell_height) / 2.0


def zone_index(pos, grid: ZoneGrid) -> int:
    """Row-major zone of ``pos``; points on the far edges clamp to the last row/col."""
    if not grid.field.contains(pos):
        raise ContractViolation(f"position {tuple(pos)} outside field")
    col = min(int(pos[0] // grid.cell_width), grid.cols - 1)
    row = min(int(pos[1] // grid.cell_height), grid.rows - 1)
    return row * grid.cols + col


def zone_center(zone: int, grid: ZoneGrid) -> Vec2:
    if not 0 <= zone < grid.count:
        raise ContractViolation(f"zone {zone} not in [0, {grid.count})")
    row, col = divmod(zone, grid.cols)
    return Vec2((col + 0.5) * grid.cell_width, (row + 0.5) * grid.cell_height)


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class EnergyBudget:
    initial: float = 3.0
    remaining: float = 3.0

    def __post_init__(self):
        if not 0.0 <= self.remaining <= self.initial:
            raise ContractViolation("remaining energy must lie in [0, initial]")

    @property
    def fraction(self) -> float:
        return self.remaining / self.initial if self.initial > 0 else 0.0


class RoleKind(enum.Enum):
    CLUSTER_HEAD = "ClusterHead"
    MEMBER = "Member"
    UNASSOCIATED = "Unassociated"
    DEAD = "Dead"


@dataclass(frozen=True)
class Role:
    kind: RoleKind
    head: int | None = None

    @classmethod
    def cluster_head(cls) -> "Role":
        return cls(RoleKind.CLUSTER_HEAD)

    @classmethod
    def member(cls, head: int) -> "Role":
        return cls(RoleKind.MEMBER, head)


UNASSOCIATED = Role(RoleKind.UNASSOCIATED)
DEAD = Role(RoleKind.DEAD)


class PacketKind(enum.Enum):
    CH_ANNOUNCEMENT = "ChAnnouncement"
    JOIN = "Join"
    HELLO = "Hello"
    DATA = "Data"
    AGGREGATED_DATA = "AggregatedData"
    GRADIENT_BEACON = "GradientBeacon"
    RECOVERY_REQUEST = "RecoveryRequest"
    RECOVERY_REPLY = "RecoveryReply"

    @property
    def is_data(self) -> bool:
        return self in (PacketKind.DATA, PacketKind.AGGREGATED_DATA)


@dataclass(frozen=True)
class Packet:
    kind: PacketKind
    size: int
    src: int
    dst: int = BROADCAST
    origin_round: int = 0
    payload: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.size <= 0:
            raise ContractViolation("packet size must be positive")

    @property
    def bits(self) -> int:
        return self.size * 8


class RandomStream:
    """Mersenne Twister stream keyed by (trial seed, node id, purpose).

    The key is hashed with SHA-256 so streams for different purposes or
    nodes are unrelated, and the sequence does not depend on the order in
    which streams are created. Gaussian draws always consume one normal
    variate, so ``normals(k)`` yields exactly what ``k`` calls to
    ``gauss(0, 1)`` would.
    """

    algorithm = "mt19937/sha256-key"

    def __init__(self, seed: int, node: int, purpose: str):
        self.key = (int(seed), int(node), str(purpose))
        digest = hashlib.sha256(f"{seed}:{node}:{purpose}".encode()).digest()
        self._gen = np.random.Generator(np.random.MT19937(int.from_bytes(digest[:8], "little")))

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * float(self._gen.random())

    def gauss(self, mu: float, sigma: float) -> float:
        return mu + sigma * float(self._gen.standard_normal())

    def normals(self, k: int) -> np.ndarray:
        return self._gen.standard_normal(k)

    def random(self) -> float:
        return float(self._gen.random())


def zone_indices(xy, grid: ZoneGrid):
    """Vectorized :func:`zone_index` over an (n, 2) array of in-field points."""
    xy = np.asarray(xy, dtype=float)
    cols = np.minimum((xy[:, 0] // grid.cell_width).astype(int), grid.cols - 1)
    rows = np.minimum((xy[:, 1] // grid.cell_height).astype(int), grid.rows - 1)
    return rows * grid.cols + cols
