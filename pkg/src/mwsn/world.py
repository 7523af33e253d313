"""Per-trial node state: positions, energy, liveness and radio delivery."""
from __future__ import annotations

import math

import numpy as np

from .metrics import MetricsLedger
from .mobility import Fleet, MobilityParams
from .model import BROADCAST, SINK_ID, FieldGeometry, Packet, RandomStream, Vec2, ZoneGrid
from .radio import (
    LOST_DEAD_RECEIVER,
    LOST_DEAD_SENDER,
    LOST_OUT_OF_RANGE,
    Delivery,
    DeliveryOutcome,
    RadioParams,
    rx_energy,
    tx_energy,
)


class World:
    """Everything one trial mutates. Owned by a single engine thread."""

    def __init__(
        self,
        positions,
        *,
        grid: ZoneGrid,
        radio: RadioParams,
        mobility: MobilityParams,
        initial_energy: float,
        sink=(500.0, 500.0),
        seed: int = 0,
        energies=None,
    ):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.n = len(positions)
        self.grid = grid
        self.geom: FieldGeometry = grid.field
        self.radio = radio
        self.sink = Vec2(float(sink[0]), float(sink[1]))
        self.seed = seed
        streams = [RandomStream(seed, i, "mobility") for i in range(self.n)]
        self.fleet = Fleet(positions, mobility, self.geom, streams)
        self.initial = float(initial_energy)
        if energies is None:
            self.energy = np.full(self.n, self.initial)
        else:
            self.energy = np.array(energies, dtype=float)
        self.start_energy = self.energy.copy()
        self.alive = self.energy > 0
        self.tx_j = np.zeros(self.n)
        self.rx_j = np.zeros(self.n)
        self.fix_j = np.zeros(self.n)
        self.ledger = MetricsLedger()
        self.round = 1
        self.tick = 0
        self.deaths: list[tuple[int, int, int]] = []

    # -- geometry -----------------------------------------------------------

    @property
    def xy(self) -> np.ndarray:
        return self.fleet.xy

    def position(self, node: int) -> Vec2:
        if node == SINK_ID:
            return self.sink
        return Vec2(float(self.xy[node, 0]), float(self.xy[node, 1]))

    def dist(self, a: int, b: int) -> float:
        pa, pb = self.position(a), self.position(b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def dist_to(self, node: int, point) -> float:
        p = self.position(node)
        return math.hypot(p[0] - point[0], p[1] - point[1])

    def distances_from(self, origin) -> np.ndarray:
        return np.hypot(self.xy[:, 0] - origin[0], self.xy[:, 1] - origin[1])

    def neighbors(self, node: int) -> np.ndarray:
        """Alive sensors within range of ``node`` (a sensor or the sink), excluding itself."""
        mask = (self.distances_from(self.position(node)) <= self.radio.range_m) & self.alive
        if node != SINK_ID:
            mask[node] = False
        return np.flatnonzero(mask)

    def alive_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    # -- energy -------------------------------------------------------------

    def _kill(self, node: int) -> None:
        self.alive[node] = False
        self.energy[node] = 0.0
        self.fleet.stop(node)
        self.deaths.append((self.round, self.tick, node))
        if self.ledger.first_death_round is None:
            self.ledger.first_death_round = self.round

    def debit(self, node: int, amount: float, account: np.ndarray) -> bool:
        """Charge ``amount`` joules; returns False if the node could not afford it.

        A node that cannot afford a charge is drained to zero and dies; one
        that exactly affords it completes the action and then dies.
        """
        have = self.energy[node]
        if have < amount:
            account[node] += have
            self._kill(node)
            return False
        self.energy[node] = have - amount
        account[node] += amount
        if self.energy[node] <= 0.0:
            self._kill(node)
        return True

    def debit_many(self, nodes: np.ndarray, amount: float, account: np.ndarray) -> np.ndarray:
        """Charge each node in ``nodes`` once; returns the mask of nodes that paid."""
        have = self.energy[nodes]
        paid = have >= amount
        charge = np.where(paid, amount, have)
        self.energy[nodes] = have - charge
        account[nodes] += charge
        for i in nodes[self.energy[nodes] <= 0.0]:
            self._kill(int(i))
        return paid

    def charge_fix(self, node: int, amount: float) -> bool:
        return self.debit(node, amount, self.fix_j)

    def energy_spent(self) -> np.ndarray:
        return self.tx_j + self.rx_j + self.fix_j

    def audit_error(self) -> float:
        """Largest per-node gap between energy drawn and energy charged.

        Expressed as a fraction of the node's starting budget, which is the
        scale at which subtraction from the battery rounds.
        """
        drawn = self.start_energy - self.energy
        scale = np.where(self.start_energy > 0, self.start_energy, 1.0)
        gap = np.abs(drawn - self.energy_spent()) / scale
        return float(gap.max()) if self.n else 0.0

    # -- radio --------------------------------------------------------------

    def _log_attempt(self, phase: str, packet: Packet, status: Delivery, n: int = 1) -> None:
        self.ledger.attempts[(phase, packet.kind, status)] += n

    def transmit(self, sender: int, dst: int, packet: Packet, phase: str) -> DeliveryOutcome:
        """Send one packet from a sensor, charging sender and receivers.

        Unicast to the sink is free for the sink. Broadcast receivers are all
        alive sensors in range (plus the sink, reported via ``sink_heard``).
        """
        out = self._broadcast(sender, packet) if dst == BROADCAST else self._unicast(sender, dst, packet)
        self.ledger.attempts[(phase, packet.kind, out.status)] += 1
        return out

    def _broadcast(self, sender: int, packet: Packet) -> DeliveryOutcome:
        if not self.alive[sender]:
            return LOST_DEAD_SENDER
        radio = self.radio
        bits = packet.bits
        if not self.debit(sender, tx_energy(bits, radio.range_m, radio), self.tx_j):
            return LOST_DEAD_SENDER
        ox, oy = self.xy[sender].tolist()
        d = np.hypot(self.xy[:, 0] - ox, self.xy[:, 1] - oy)
        mask = (d <= radio.range_m) & self.alive
        mask[sender] = False
        rx = np.flatnonzero(mask)
        paid = self.debit_many(rx, rx_energy(bits, radio), self.rx_j)
        sink_heard = math.hypot(ox - self.sink[0], oy - self.sink[1]) <= radio.range_m
        return DeliveryOutcome(Delivery.DELIVERED, tuple(rx[paid].tolist()), sink_heard)

    def _unicast(self, sender: int, dst: int, packet: Packet) -> DeliveryOutcome:
        if not self.alive[sender]:
            return LOST_DEAD_SENDER
        radio = self.radio
        bits = packet.bits
        sx, sy = self.xy[sender].tolist()
        tx, ty = self.sink if dst == SINK_ID else self.xy[dst].tolist()
        d = math.hypot(sx - tx, sy - ty)
        if not self.debit(sender, tx_energy(bits, d, radio), self.tx_j):
            return LOST_DEAD_SENDER
        if dst != SINK_ID and not self.alive[dst]:
            return LOST_DEAD_RECEIVER
        if d > radio.range_m:
            return LOST_OUT_OF_RANGE
        if dst == SINK_ID:
            return DeliveryOutcome(Delivery.DELIVERED, (dst,), True)
        if not self.debit(dst, rx_energy(bits, radio), self.rx_j):
            return LOST_DEAD_RECEIVER
        return DeliveryOutcome(Delivery.DELIVERED, (dst,), False)

    def broadcast_all(self, senders: np.ndarray, packet: Packet, phase: str) -> np.ndarray:
        """Every node in ``senders`` broadcasts ``packet`` once, in id order.

        Returns a boolean matrix ``heard[k, j]``: sensor j received the k-th
        sender's packet. Uses one vectorized pass when nobody can die during
        the batch, otherwise replays the broadcasts one by one.
        """
        senders = np.asarray(senders, dtype=int)
        radio = self.radio
        bits = packet.bits
        xy = self.xy
        d = np.hypot(xy[senders, 0][:, None] - xy[:, 0][None, :], xy[senders, 1][:, None] - xy[:, 1][None, :])
        heard = (d <= radio.range_m) & self.alive[None, :]
        heard[np.arange(len(senders)), senders] = False
        tx = tx_energy(bits, radio.range_m, radio)
        rx = rx_energy(bits, radio)
        need = np.zeros(self.n)
        need[senders] += tx
        need += heard.sum(axis=0) * rx
        if len(senders) and self.alive[senders].all() and np.all(self.energy - need > 0.0):
            self.energy -= need
            self.tx_j[senders] += tx
            self.rx_j += heard.sum(axis=0) * rx
            self.ledger.attempts[(phase, packet.kind, Delivery.DELIVERED)] += len(senders)
            return heard
        heard = np.zeros((len(senders), self.n), dtype=bool)
        for k, s in enumerate(senders):
            out = self.transmit(int(s), BROADCAST, packet, phase)
            if out.delivered:
                heard[k, list(out.receivers)] = True
        return heard

    def unicast_all(self, senders, dsts, packet: Packet, phase: str) -> list[Delivery]:
        """Unicast ``packet`` from each sender to its paired destination, in order."""
        senders = np.asarray(senders, dtype=int)
        dsts = np.asarray(dsts, dtype=np.int64)
        if len(senders) == 0:
            return []
        radio = self.radio
        bits = packet.bits
        to_sink = dsts == SINK_ID
        dd = np.where(to_sink, 0, dsts).astype(int)
        tx_pos = np.where(to_sink[:, None], np.asarray(self.sink)[None, :], self.xy[dd])
        d = np.hypot(self.xy[senders, 0] - tx_pos[:, 0], self.xy[senders, 1] - tx_pos[:, 1])
        recv_alive = to_sink | self.alive[dd]
        ok = recv_alive & (d <= radio.range_m)
        tx = radio.e_elec * bits + radio.e_amp * bits * d**radio.path_loss_exponent
        rx = rx_energy(bits, radio)
        need = np.zeros(self.n)
        np.add.at(need, senders, tx)
        rx_nodes = dd[ok & ~to_sink]
        np.add.at(need, rx_nodes, rx)
        if self.alive[senders].all() and np.all(self.energy - need > 0.0):
            self.energy -= need
            np.add.at(self.tx_j, senders, tx)
            np.add.at(self.rx_j, rx_nodes, rx)
            status = np.where(ok, 0, np.where(recv_alive, 1, 2))
            names = (Delivery.DELIVERED, Delivery.LOST_OUT_OF_RANGE, Delivery.LOST_DEAD_RECEIVER)
            result = [names[s] for s in status.tolist()]
            for s in range(3):
                c = int(np.count_nonzero(status == s))
                if c:
                    self.ledger.attempts[(phase, packet.kind, names[s])] += c
            return result
        return [
            self.transmit(int(s), int(t), packet, phase).status
            for s, t in zip(senders.tolist(), dsts.tolist())
        ]
