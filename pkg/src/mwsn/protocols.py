"""Cluster-head election, association, and inter-cluster routing for the six protocols.

Two families share the same round structure:

* non-position (DECA, DEMC, DEMC_RECOVERY) elect on energy/id/degree and
  route aggregates along a sink-rooted gradient of cluster heads;
* position-based (MAR, GRC, GRC_RECOVERY) scope election to grid zones
  and route greedily toward the sink using announced head positions.

The ``*_RECOVERY`` variants repair a broken head-to-head hop through one
relay node that can hear both ends.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    BROADCAST,
    SINK_ID,
    EnergyBudget,
    Packet,
    PacketKind,
    Role,
    RoleKind,
    DEAD,
    UNASSOCIATED,
    ZoneGrid,
    zone_center,
    zone_indices,
)
from .mobility import MobilityFactor
from .radio import Delivery, DeliveryOutcome, LOST_OUT_OF_RANGE
from .world import World

INF_LEVEL = math.inf


class ProtocolKind(enum.Enum):
    DECA = "DECA"
    DEMC = "DEMC"
    DEMC_RECOVERY = "DEMC_RECOVERY"
    MAR = "MAR"
    GRC = "GRC"
    GRC_RECOVERY = "GRC_RECOVERY"

    @property
    def position_based(self) -> bool:
        return self in (ProtocolKind.MAR, ProtocolKind.GRC, ProtocolKind.GRC_RECOVERY)

    @property
    def recovery(self) -> bool:
        return self in (ProtocolKind.DEMC_RECOVERY, ProtocolKind.GRC_RECOVERY)

    @property
    def weight_family(self) -> str:
        return {
            ProtocolKind.DECA: "DECA",
            ProtocolKind.DEMC: "DEMC",
            ProtocolKind.DEMC_RECOVERY: "DEMC",
            ProtocolKind.MAR: "MAR",
            ProtocolKind.GRC: "GRC",
            ProtocolKind.GRC_RECOVERY: "GRC",
        }[self]

    @classmethod
    def parse(cls, text: str) -> "ProtocolKind":
        key = text.strip().upper().replace("-", "_").replace("+", "_")
        if key.endswith("_REC"):
            key += "OVERY"
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown protocol {text!r}") from None


ALL_PROTOCOLS = tuple(ProtocolKind)

DEFAULT_WEIGHTS = {
    "GRC": (0.7, 0.3, 0.0),
    "DEMC": (0.9, 0.1, 0.0),
    "DECA": (0.6, 0.3, 0.1),
    "MAR": (0.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class WeightParams:
    w1: float
    w2: float
    w3: float = 0.0
    t_max: float = 1.0

    @classmethod
    def default_for(cls, kind: ProtocolKind, t_max: float = 1.0) -> "WeightParams":
        return cls(*DEFAULT_WEIGHTS[kind.weight_family], t_max=t_max)

    def check(self, kind: ProtocolKind) -> None:
        """Raise ValueError unless the weights suit ``kind``."""
        fam = kind.weight_family
        if fam in ("GRC", "DEMC"):
            if not math.isclose(self.w1 + self.w2, 1.0, abs_tol=1e-9):
                raise ValueError(f"{fam} weights need w1 + w2 = 1 (got {self.w1} + {self.w2})")
            if not 0 < self.w2 < self.w1:
                raise ValueError(f"{fam} weights need 0 < w2 < w1 (got w1={self.w1}, w2={self.w2})")
        elif fam == "DECA":
            if not math.isclose(self.w1 + self.w2 + self.w3, 1.0, abs_tol=1e-9):
                raise ValueError("DECA weights need w1 + w2 + w3 = 1")
            if not self.w1 > self.w2 > self.w3 > 0:
                raise ValueError("DECA weights need w1 > w2 > w3 > 0")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")


def _fraction(e):
    if isinstance(e, EnergyBudget):
        return e.fraction
    return e


# -- weights ----------------------------------------------------------------


def centerness(pos, zone_c) -> float:
    """Manhattan distance from a node to the center of its zone."""
    return abs(zone_c[0] - pos[0]) + abs(zone_c[1] - pos[1])


def grc_weight(e, c, grid: ZoneGrid, wp: WeightParams):
    """Residual-energy/center-ness weight; ``e`` is an EnergyBudget or remaining fraction."""
    return wp.w1 * _fraction(e) - wp.w2 * (c / grid.max_centerness)


def demc_weight(e, node_id, max_id, wp: WeightParams):
    return wp.w1 * _fraction(e) + wp.w2 * (node_id / max(1, max_id))


def deca_weight(e, degree, max_degree, node_id, max_id, wp: WeightParams):
    return (
        wp.w1 * _fraction(e)
        + wp.w2 * (degree / max(1, max_degree))
        + wp.w3 * (node_id / max(1, max_id))
    )


def mar_key(mf: MobilityFactor, node_id: int) -> tuple[int, int]:
    return (mf.count, node_id)


def announcement_delay(rank, t_max: float):
    """Timer length for an election rank in [0, 1]; stronger candidates fire first."""
    return t_max * (1.0 - rank)


# -- per-trial protocol state -----------------------------------------------


class NeighborTables:
    """DECA neighbour lists kept as a last-heard tick matrix.

    ``last_heard[j, i]`` is the tick at which j last received i's Hello.
    """

    NEVER = -(2**40)

    def __init__(self, n: int, hello_period: int):
        self.hello_period = hello_period
        self.last_heard = np.full((n, n), self.NEVER, dtype=np.int64)

    def refresh(self, heard: np.ndarray, senders: np.ndarray, now: int) -> None:
        cols = self.last_heard[:, senders]
        self.last_heard[:, senders] = np.where(heard.T, now, cols)

    def fresh(self, now: int) -> np.ndarray:
        return (now - self.last_heard) < 2 * self.hello_period

    def degree(self, now: int) -> np.ndarray:
        return self.fresh(now).sum(axis=1)

    def table(self, node: int, now: int) -> dict[int, int]:
        row = self.last_heard[node]
        keep = np.flatnonzero(self.fresh(now)[node])
        return {int(i): int(row[i]) for i in keep}


@dataclass
class Election:
    heads: list[int]
    heard: np.ndarray  # heard[k, j]: sensor j received head k's announcement
    score: np.ndarray  # per-node election weight (MAR: rank)
    announced_xy: np.ndarray
    zones: np.ndarray | None
    announcements: int


@dataclass
class Clusters:
    """Roles after association plus what each head knows for routing."""

    election: Election
    head_of: np.ndarray  # -1 unassociated, self for a head, head id for a member
    heads: list[int]
    heard: np.ndarray  # rows follow ``heads`` (fallback heads have empty rows)
    adjacency: np.ndarray  # logical head-to-head links learned at association
    fallback: list[int] = field(default_factory=list)

    def role(self, world: World, node: int) -> Role:
        if not world.alive[node]:
            return DEAD
        h = int(self.head_of[node])
        if h < 0:
            return UNASSOCIATED
        if h == node:
            return Role.cluster_head()
        return Role.member(h)

    def members(self, head: int) -> np.ndarray:
        idx = np.flatnonzero(self.head_of == head)
        return idx[idx != head]


# -- election -----------------------------------------------------------------


def _announcement(world: World, src: int, cfg_bytes: int) -> Packet:
    return Packet(PacketKind.CH_ANNOUNCEMENT, cfg_bytes, src, BROADCAST, world.round)


def election_scores(kind: ProtocolKind, world: World, wp: WeightParams, *, mobility=None, tables=None, now=0):
    """Per-node (score, rank) arrays; a higher rank fires earlier."""
    n = world.n
    ids = np.arange(n)
    max_id = max(1, n - 1)
    frac = world.energy / world.initial
    fam = kind.weight_family
    if fam == "DEMC":
        score = demc_weight(frac, ids, max_id, wp)
        return score, score
    if fam == "GRC":
        zones = zone_indices(world.xy, world.grid)
        centers = np.array([zone_center(z, world.grid) for z in range(world.grid.count)])[zones]
        c = np.abs(centers[:, 0] - world.xy[:, 0]) + np.abs(centers[:, 1] - world.xy[:, 1])
        score = grc_weight(frac, c, world.grid, wp)
        return score, (score + wp.w2) / (wp.w1 + wp.w2)
    if fam == "DECA":
        degree = tables.degree(now) if tables is not None else np.zeros(n)
        alive_deg = degree[world.alive] if world.alive.any() else degree
        score = deca_weight(frac, degree, int(alive_deg.max()) if len(alive_deg) else 0, ids, max_id, wp)
        return score, score
    # MAR: smaller (count, id) is stronger
    counts = mobility if mobility is not None else np.zeros(n, dtype=int)
    max_count = int(counts.max()) if n else 0
    normalized = (counts + ids / (n + 1)) / (max_count + 1)
    rank = 1.0 - normalized
    return rank, rank


def run_election(
    kind: ProtocolKind,
    world: World,
    wp: WeightParams,
    control_bytes: int = 25,
    *,
    mobility=None,
    tables: NeighborTables | None = None,
    now: int = 0,
) -> Election:
    """One election at the current tick with positions frozen.

    ``mobility`` holds per-node MAR mobility-factor counts; ``tables`` the
    DECA neighbour tables.
    """
    ledger = world.ledger
    alive = world.alive_ids()
    ledger.election_denominator += len(alive)
    score, rank = election_scores(kind, world, wp, mobility=mobility, tables=tables, now=now)
    announced_xy = world.xy.copy()
    zones = zone_indices(world.xy, world.grid) if kind.position_based else None

    if kind is ProtocolKind.DECA:
        pkt = _announcement(world, -1, control_bytes)
        heard = world.broadcast_all(alive, pkt, "election")
        ledger.count("election_packets", len(alive))
        s = score[alive]
        # beaten[j]: j heard a stronger announcement (lower id wins exact ties)
        stronger = (s[:, None] > score[None, :]) | ((s[:, None] == score[None, :]) & (alive[:, None] < np.arange(world.n)[None, :]))
        beaten = (heard & stronger).any(axis=0)
        head_mask = np.zeros(world.n, dtype=bool)
        head_mask[alive] = ~beaten[alive]
        head_mask &= world.alive
        keep = head_mask[alive]
        heads = alive[keep].tolist()
        return Election(heads, heard[keep], score, announced_xy, zones, len(alive))

    delays = announcement_delay(rank[alive], wp.t_max)
    order = alive[np.lexsort((alive, delays))]
    suppressed = np.zeros(world.n, dtype=bool)
    heads: list[int] = []
    rows: list[np.ndarray] = []
    count = 0
    for i in order.tolist():
        if suppressed[i] or not world.alive[i]:
            continue
        count += 1
        out = world.transmit(i, BROADCAST, _announcement(world, i, control_bytes), "election")
        if not out.delivered:
            continue
        heads.append(i)
        rx = np.fromiter(out.receivers, dtype=int, count=len(out.receivers))
        row = np.zeros(world.n, dtype=bool)
        row[rx] = True
        rows.append(row)
        if len(rx) == 0:
            continue
        if kind.weight_family == "MAR":
            beats = rank[rx] < rank[i]
        else:
            beats = score[rx] < score[i]
        if zones is not None:
            beats &= zones[rx] == zones[i]
        suppressed[rx[beats]] = True
    ledger.count("election_packets", count)
    heard = np.array(rows, dtype=bool).reshape(len(rows), world.n)
    return Election(heads, heard, score, announced_xy, zones, count)


# -- association ----------------------------------------------------------------


def choose_heads(kind: ProtocolKind, world: World, election: Election, nodes: np.ndarray) -> np.ndarray:
    """Head each node in ``nodes`` would join (-1 when it heard no head)."""
    if len(election.heads) == 0 or len(nodes) == 0:
        return np.full(len(nodes), -1)
    heads = np.asarray(election.heads)
    order = np.argsort(heads, kind="stable")  # lowest id first on ties
    heads = heads[order]
    heard = election.heard[order][:, nodes]
    if kind.position_based:
        hx = election.announced_xy[heads]
        nx = world.xy[nodes]
        d = np.hypot(hx[:, 0][:, None] - nx[:, 0][None, :], hx[:, 1][:, None] - nx[:, 1][None, :])
        own_zone = zone_indices(nx, world.grid)
        head_zone = election.zones[heads]
        same = heard & (head_zone[:, None] == own_zone[None, :])
        reach = heard & (d <= world.radio.range_m)
        cost = np.where(same, d, np.where(reach, d + 1e12, np.inf))
        pick = np.argmin(cost, axis=0)
        ok = np.isfinite(cost[pick, np.arange(len(nodes))])
    else:
        w = election.score[heads]
        val = np.where(heard, w[:, None], -np.inf)
        pick = np.argmax(val, axis=0)
        ok = np.isfinite(val[pick, np.arange(len(nodes))])
    return np.where(ok, heads[pick], -1)


def associate(kind: ProtocolKind, world: World, election: Election, control_bytes: int = 25) -> Clusters:
    """Every alive non-head joins one head with a Join unicast, or heads itself."""
    head_of = np.full(world.n, -1)
    alive_heads = [h for h in election.heads if world.alive[h]]
    head_of[alive_heads] = alive_heads
    joiners = np.array([i for i in world.alive_ids().tolist() if head_of[i] < 0], dtype=int)
    targets = choose_heads(kind, world, election, joiners)
    fallback = joiners[targets < 0].tolist()
    sending = targets >= 0
    senders, dsts = joiners[sending], targets[sending]
    if len(senders):
        pkt = Packet(PacketKind.JOIN, control_bytes, -1, -1, world.round)
        status = world.unicast_all(senders, dsts, pkt, "association")
        world.ledger.count("join_packets", len(senders))
        for s, t, st in zip(senders.tolist(), dsts.tolist(), status):
            if st is Delivery.DELIVERED:
                head_of[s] = t
            elif world.alive[s]:
                fallback.append(s)
    fallback.sort()
    head_of[fallback] = fallback
    heads = list(election.heads) + fallback
    heard = np.vstack([election.heard, np.zeros((len(fallback), world.n), dtype=bool)])
    clusters = Clusters(election, head_of, heads, heard, np.zeros((0, 0), dtype=bool), fallback)
    clusters.adjacency = _learned_adjacency(clusters, world)
    return clusters


def _learned_adjacency(clusters: Clusters, world: World) -> np.ndarray:
    """Head pairs linked because one head, or one of its members, heard the other."""
    heads = clusters.heads
    k = len(heads)
    if k == 0:
        return np.zeros((0, 0), dtype=bool)
    index = {h: i for i, h in enumerate(heads)}
    belong = np.zeros((k, world.n))
    for node in np.flatnonzero(clusters.head_of >= 0).tolist():
        belong[index[int(clusters.head_of[node])], node] = 1.0
    adj = (belong @ clusters.heard.T.astype(float)) > 0
    adj = adj | adj.T
    np.fill_diagonal(adj, False)
    return adj


# -- intra-cluster ----------------------------------------------------------------


def intra_cluster_send(world: World, clusters: Clusters, data_bytes: int = 100) -> list[Delivery]:
    """Each alive member sends one Data packet to its recorded head."""
    members = np.array(
        [i for i in world.alive_ids().tolist() if clusters.head_of[i] >= 0 and clusters.head_of[i] != i],
        dtype=int,
    )
    if len(members) == 0:
        return []
    pkt = Packet(PacketKind.DATA, data_bytes, -1, -1, world.round)
    status = world.unicast_all(members, clusters.head_of[members], pkt, "intra")
    for st in status:
        world.ledger.record_data("intra", st is Delivery.DELIVERED)
    return status


# -- inter-cluster ----------------------------------------------------------------


@dataclass
class GradientState:
    level: float = INF_LEVEL
    parent: int | None = None


def bfs_gradient(heads, links, sink_links) -> dict[int, GradientState]:
    """Breadth-first levels over a head graph rooted at the sink.

    ``links`` maps a head to the heads it can reach; ``sink_links`` are the
    heads adjacent to the sink. Heads are visited in id order within a level,
    so each adopts the lowest-id parent among its shallowest neighbours.
    """
    state = {h: GradientState() for h in heads}
    frontier = sorted(sink_links)
    for h in frontier:
        state[h] = GradientState(1, SINK_ID)
    level = 1
    while frontier:
        level += 1
        found: dict[int, int] = {}
        for u in frontier:  # ascending id, so the first claim is the lowest-id parent
            for v in links.get(u, ()):
                if state[v].level == INF_LEVEL and v not in found:
                    found[v] = u
        for v, u in found.items():
            state[v] = GradientState(level, u)
        frontier = sorted(found)
    return state


def build_gradient(world: World, clusters: Clusters, control_bytes: int = 25) -> dict[int, GradientState]:
    """Flood sink-rooted beacons over alive heads and return each head's level.

    Two heads are linked when they are in range of each other now or when
    association taught them about each other (a member heard the other head).
    """
    heads = sorted(h for h in clusters.heads if world.alive[h])
    index = {h: i for i, h in enumerate(clusters.heads)}
    rng = world.radio.range_m
    links: dict[int, set] = {}
    if heads:
        arr = np.asarray(heads)
        hx = world.xy[arr]
        d = np.hypot(hx[:, 0][:, None] - hx[:, 0][None, :], hx[:, 1][:, None] - hx[:, 1][None, :])
        pos = [index[h] for h in heads]
        link = (d <= rng) | clusters.adjacency[np.ix_(pos, pos)]
        np.fill_diagonal(link, False)
        links = {h: set(arr[link[a]].tolist()) for a, h in enumerate(heads)}
    sink_d = world.distances_from(world.sink)
    sink_links = [h for h in heads if sink_d[h] <= rng]
    state = bfs_gradient(heads, links, sink_links)

    # beacons: the sink first, then every reached head in level order
    ledger = world.ledger
    rx = np.flatnonzero((sink_d <= rng) & world.alive)
    world.debit_many(rx, world.radio.e_elec * control_bytes * 8, world.rx_j)
    beacon = Packet(PacketKind.GRADIENT_BEACON, control_bytes, -1, BROADCAST, world.round)
    ledger.attempts[("gradient", beacon.kind, Delivery.DELIVERED)] += 1
    reached = [h for _, h in sorted((s.level, h) for h, s in state.items() if s.level != INF_LEVEL)]
    if reached:
        world.broadcast_all(np.asarray(reached), beacon, "gradient")
    ledger.count("gradient_packets", 1 + len(reached))
    return state


def greedy_next_hop(world: World, clusters: Clusters, holder: int):
    """Known head (or the sink) making the most progress toward the sink.

    Positions of other heads are the ones they announced; the holder uses its
    own current position. Returns None when no known neighbour is closer.
    """
    rng = world.radio.range_m
    sink = world.sink
    me = world.position(holder)
    my_d = math.hypot(me[0] - sink[0], me[1] - sink[1])
    if my_d <= rng:
        return SINK_ID
    heads = np.asarray(clusters.election.heads, dtype=int)
    if len(heads) == 0:
        return None
    known = clusters.election.heard[:, holder] & (heads != holder)
    if not known.any():
        return None
    cand = heads[known]
    pos = clusters.election.announced_xy[cand]
    d_me = np.hypot(pos[:, 0] - me[0], pos[:, 1] - me[1])
    d_sink = np.hypot(pos[:, 0] - sink[0], pos[:, 1] - sink[1])
    ok = (d_me <= rng) & (d_sink < my_d)
    if not ok.any():
        return None
    cand, d_sink = cand[ok], d_sink[ok]
    best = np.lexsort((cand, d_sink))[0]
    return int(cand[best])


def recover(
    kind: ProtocolKind,
    world: World,
    sender: int,
    target: int,
    packet: Packet,
    control_bytes: int = 25,
    target_pos=None,
) -> DeliveryOutcome:
    """Relay ``packet`` to ``target`` through one node that hears both ends.

    The sender broadcasts a request; every neighbour that has the target in
    range replies. Position-aware senders pick the replier nearest the
    target's known position, the others pick the lowest id.
    """
    ledger = world.ledger
    req = Packet(PacketKind.RECOVERY_REQUEST, control_bytes, sender, BROADCAST, world.round, {"target": target})
    out = world.transmit(sender, BROADCAST, req, "recovery")
    ledger.count("recovery_requests")
    if not out.delivered:
        return out
    rng = world.radio.range_m
    tpos = world.position(target)
    repliers = []
    for r in out.receivers:
        if r == target or not world.alive[r]:
            continue
        p = world.position(r)
        if math.hypot(p[0] - tpos[0], p[1] - tpos[1]) <= rng:
            reply = Packet(PacketKind.RECOVERY_REPLY, control_bytes, r, sender, world.round, {"target": target})
            ledger.count("recovery_replies")
            if world.transmit(r, sender, reply, "recovery").delivered:
                repliers.append(r)
    if not world.alive[sender]:
        return DeliveryOutcome(Delivery.LOST_DEAD_SENDER)
    if not repliers:
        return LOST_OUT_OF_RANGE
    if kind.position_based:
        known = target_pos if target_pos is not None else tpos
        relay = min(repliers, key=lambda r: (world.dist_to(r, known), r))
    else:
        relay = min(repliers)
    ledger.count("recovery_data_legs")
    leg = world.transmit(sender, relay, packet, "recovery")
    if not leg.delivered:
        return leg
    ledger.count("recovery_data_legs")
    return world.transmit(relay, target, packet, "recovery")


def inter_cluster_forward(
    kind: ProtocolKind,
    world: World,
    clusters: Clusters,
    origin: int,
    gradient: dict[int, GradientState] | None,
    *,
    recovery: bool,
    max_hops: int,
    data_bytes: int = 100,
    control_bytes: int = 25,
) -> list[Delivery]:
    """Carry ``origin``'s aggregate hop by hop toward the sink.

    Every hop is one inter-cluster transmission intent; a hop that cannot be
    attempted (no route) counts as lost.
    """
    ledger = world.ledger
    outcomes: list[Delivery] = []
    holder = origin
    announced = clusters.election.announced_xy
    for _ in range(max_hops):
        if kind.position_based:
            nxt = greedy_next_hop(world, clusters, holder)
        else:
            g = gradient.get(holder) if gradient else None
            nxt = g.parent if g is not None and g.level != INF_LEVEL else None
        if nxt is None:
            ledger.record_data("inter", False)
            outcomes.append(Delivery.LOST_OUT_OF_RANGE)
            return outcomes
        pkt = Packet(PacketKind.AGGREGATED_DATA, data_bytes, holder, nxt, world.round, {"origin": origin})
        out = world.transmit(holder, nxt, pkt, "inter")
        if out.status is Delivery.LOST_OUT_OF_RANGE and recovery:
            known = world.sink if nxt == SINK_ID else tuple(announced[nxt])
            out = recover(kind, world, holder, nxt, pkt, control_bytes, target_pos=known)
        ledger.record_data("inter", out.delivered)
        outcomes.append(out.status)
        if not out.delivered or nxt == SINK_ID:
            return outcomes
        holder = nxt
    ledger.record_data("inter", False)
    outcomes.append(Delivery.LOST_OUT_OF_RANGE)
    return outcomes


# -- DECA hellos ------------------------------------------------------------------


def hello_tick(world: World, tables: NeighborTables, now: int, control_bytes: int = 25) -> int:
    alive = world.alive_ids()
    if len(alive) == 0:
        return 0
    pkt = Packet(PacketKind.HELLO, control_bytes, -1, BROADCAST, world.round)
    heard = world.broadcast_all(alive, pkt, "hello")
    tables.refresh(heard, alive, now)
    world.ledger.count("hello_packets", len(alive))
    return len(alive)
