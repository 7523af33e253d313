"""Round/tick orchestration, trial execution and multi-seed sweeps."""
from __future__ import annotations

import itertools
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import SimConfig, config_fingerprint
from .metrics import (
    avg_election_packets_per_node,
    packet_loss_pct,
    pdr,
    phase_loss_pct,
)
from .model import RandomStream, zone_indices
from .protocols import (
    Clusters,
    Election,
    NeighborTables,
    ProtocolKind,
    associate,
    build_gradient,
    hello_tick,
    inter_cluster_forward,
    intra_cluster_send,
    run_election,
)
from .world import World

log = logging.getLogger(__name__)


def deploy(cfg: SimConfig) -> np.ndarray:
    """Uniform random sensor positions, one stream per node."""
    pts = np.empty((cfg.nodes, 2))
    for i in range(cfg.nodes):
        s = RandomStream(cfg.seed, i, "deploy")
        pts[i] = (s.uniform(0.0, cfg.field_width), s.uniform(0.0, cfg.field_height))
    return pts


class Simulation:
    """One trial: a world plus the protocol state carried across rounds."""

    def __init__(self, cfg: SimConfig, positions=None, energies=None, events: list | None = None):
        self.cfg = cfg.validate()
        self.kind: ProtocolKind = cfg.kind
        self.weights = cfg.weights
        if positions is None:
            positions = deploy(cfg)
        self.world = World(
            positions,
            grid=cfg.grid,
            radio=cfg.radio,
            mobility=cfg.mobility,
            initial_energy=cfg.initial_j,
            sink=cfg.sink,
            seed=cfg.seed,
            energies=energies,
        )
        n = self.world.n
        self.recovery = cfg.recovery_enabled
        self.tables = NeighborTables(n, cfg.hello_period) if self.kind is ProtocolKind.DECA else None
        self.mf_zone = zone_indices(self.world.xy, cfg.grid)
        self.mf_count = np.zeros(n, dtype=np.int64)
        self.last_fix = self.world.xy.copy()
        self.clusters: Clusters | None = None
        self.election: Election | None = None
        self.gradient = None
        self.clock = 0  # global tick counter; one tick is one second
        self.events = events
        self.alive_at_start: list[int] = []

    # -- per-tick mechanics --------------------------------------------------

    def _move(self) -> None:
        w = self.world
        w.fleet.advance()
        if self.kind is ProtocolKind.MAR:
            z = zone_indices(w.xy, self.cfg.grid)
            changed = (z != self.mf_zone) & w.alive
            self.mf_count += changed
            self.mf_zone = np.where(w.alive, z, self.mf_zone)

    def _position_fixes(self) -> None:
        if not self.kind.position_based:
            return
        w = self.world
        drift = np.hypot(w.xy[:, 0] - self.last_fix[:, 0], w.xy[:, 1] - self.last_fix[:, 1])
        due = np.flatnonzero(drift >= self.cfg.fix_displacement_m)
        if len(due):
            due = due[w.alive[due]]
            w.debit_many(due, self.cfg.fix_cost_j, w.fix_j)
            self.last_fix[due] = w.xy[due]

    def _hellos(self) -> None:
        if self.tables is not None and self.clock % self.cfg.hello_period == 0:
            hello_tick(self.world, self.tables, self.clock, self.cfg.control_bytes)

    def _log(self, msg: str) -> None:
        if self.events is not None:
            self.events.append(msg)

    # -- phases ---------------------------------------------------------------

    def _elect(self) -> None:
        w = self.world
        self.election = run_election(
            self.kind,
            w,
            self.weights,
            self.cfg.control_bytes,
            mobility=self.mf_count,
            tables=self.tables,
            now=self.clock,
        )
        self.clusters = None

    def _associate(self) -> None:
        self.clusters = associate(self.kind, self.world, self.election, self.cfg.control_bytes)

    def _intra(self) -> None:
        intra_cluster_send(self.world, self.clusters, self.cfg.data_bytes)

    def _inter(self) -> None:
        w = self.world
        cl = self.clusters
        gradient = None
        if not self.kind.position_based:
            gradient = build_gradient(w, cl, self.cfg.control_bytes)
        self.gradient = gradient
        for h in sorted(cl.heads):
            if not w.alive[h] or cl.head_of[h] != h:
                continue
            inter_cluster_forward(
                self.kind,
                w,
                cl,
                h,
                gradient,
                recovery=self.recovery,
                max_hops=self.cfg.max_hops,
                data_bytes=self.cfg.data_bytes,
                control_bytes=self.cfg.control_bytes,
            )

    def run_round(self) -> dict:
        """Play one full round and return the ledger delta it produced."""
        w = self.world
        cfg = self.cfg
        before = w.ledger.snapshot()
        deaths_before = len(w.deaths)
        for tick in range(cfg.ticks_per_round):
            w.tick = tick
            if self.clock > 0:
                self._move()
            self._position_fixes()
            self._hellos()
            if tick == 0:
                if not w.alive.any():
                    break
                self._elect()
            elif tick == 1:
                self._associate()
            elif tick == cfg.data_tick:
                self._intra()
            elif tick == cfg.inter_tick:
                self._inter()
            self.clock += 1
        w.ledger.rounds_completed += 1
        after = w.ledger.snapshot()
        delta = {k: after[k] - before[k] for k in after}
        if self.events is not None:
            heads = len(self.clusters.heads) if self.clusters else 0
            self._log(
                f"round {w.round}: alive={int(w.alive.sum())} heads={heads} "
                + " ".join(f"{k}={v}" for k, v in delta.items() if v)
            )
            for r, t, node in w.deaths[deaths_before:]:
                self._log(f"round {r} tick {t}: node {node} died")
        w.round += 1
        return delta

    def run(self) -> "TrialResult":
        w = self.world
        cfg = self.cfg
        while w.ledger.rounds_completed < cfg.max_rounds:
            if not w.alive.any():
                break
            self.run_round()
            if w.ledger.first_death_round is not None:
                break
        return TrialResult.from_simulation(self)


@dataclass(frozen=True)
class TrialResult:
    protocol: str
    nodes: int
    speed_mps: float
    seed: int
    fingerprint: str
    pdr: float | None
    loss_pct: float | None
    intra_loss_pct: float | None
    inter_loss_pct: float | None
    lifetime_rounds: int
    censored: bool
    rounds_completed: int
    avg_election_pkts: float | None
    election_pkts: int
    hello_pkts: int
    gradient_pkts: int
    join_pkts: int
    recovery_requests: int
    recovery_replies: int
    recovery_data_legs: int
    intra_sent: int
    intra_lost: int
    inter_sent: int
    inter_lost: int

    @classmethod
    def from_simulation(cls, sim: Simulation) -> "TrialResult":
        cfg = sim.cfg
        led = sim.world.ledger
        censored = led.first_death_round is None
        return cls(
            protocol=sim.kind.value,
            nodes=cfg.nodes,
            speed_mps=cfg.mean_speed,
            seed=cfg.seed,
            fingerprint=config_fingerprint(cfg),
            pdr=pdr(led),
            loss_pct=packet_loss_pct(led),
            intra_loss_pct=phase_loss_pct(led, "intra"),
            inter_loss_pct=phase_loss_pct(led, "inter"),
            lifetime_rounds=led.rounds_completed if censored else led.first_death_round,
            censored=censored,
            rounds_completed=led.rounds_completed,
            avg_election_pkts=avg_election_packets_per_node(led),
            election_pkts=led.control["election_packets"],
            hello_pkts=led.control["hello_packets"],
            gradient_pkts=led.control["gradient_packets"],
            join_pkts=led.control["join_packets"],
            recovery_requests=led.control["recovery_requests"],
            recovery_replies=led.control["recovery_replies"],
            recovery_data_legs=led.control["recovery_data_legs"],
            intra_sent=led.intra.sent,
            intra_lost=led.intra.lost,
            inter_sent=led.inter.sent,
            inter_lost=led.inter.lost,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def run_trial(cfg: SimConfig, events: list | None = None) -> TrialResult:
    """Run one trial to first node death (or ``max_rounds``)."""
    return Simulation(cfg, events=events).run()


# -- sweeps ---------------------------------------------------------------------

NUMERIC_FIELDS = (
    "pdr",
    "loss_pct",
    "intra_loss_pct",
    "inter_loss_pct",
    "lifetime_rounds",
    "avg_election_pkts",
    "hello_pkts",
    "gradient_pkts",
    "recovery_requests",
    "recovery_replies",
    "intra_lost",
    "inter_lost",
)


@dataclass(frozen=True)
class CellStats:
    protocol: str
    nodes: int
    speed_mps: float
    seeds: int
    mean: dict
    stddev: dict


@dataclass
class SweepResult:
    trials: list[TrialResult]
    cells: list[CellStats] = field(default_factory=list)

    def cell(self, protocol, nodes, speed) -> CellStats:
        protocol = ProtocolKind.parse(str(getattr(protocol, "value", protocol))).value
        for c in self.cells:
            if c.protocol == protocol and c.nodes == nodes and c.speed_mps == speed:
                return c
        raise KeyError((protocol, nodes, speed))


def _mean_sd(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    m = math.fsum(vals) / len(vals)
    sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return m, sd


def aggregate(trials: list[TrialResult]) -> list[CellStats]:
    cells = []
    key = lambda t: (t.protocol, t.nodes, t.speed_mps)  # noqa: E731
    for (proto, nodes, speed), group in itertools.groupby(sorted(trials, key=lambda t: (key(t), t.seed)), key=key):
        group = list(group)
        mean, sd = {}, {}
        for f in NUMERIC_FIELDS:
            mean[f], sd[f] = _mean_sd([getattr(t, f) for t in group])
        cells.append(CellStats(proto, nodes, speed, len(group), mean, sd))
    return cells


class TrialFailed(RuntimeError):
    pass


def _run_cell(cfg: SimConfig) -> TrialResult:
    try:
        return run_trial(cfg)
    except Exception as exc:  # pragma: no cover - re-raised with the cell named
        raise TrialFailed(f"{cfg.protocol} nodes={cfg.nodes} speed={cfg.mean_speed} seed={cfg.seed}: {exc!r}") from exc


def sweep_configs(base: SimConfig, protocols, node_counts, speeds, seeds) -> list[SimConfig]:
    if not protocols or not node_counts or not speeds or not seeds:
        raise ValueError("sweep axes must be nonempty")
    kinds = sorted({ProtocolKind.parse(str(getattr(p, "value", p))).value for p in protocols})
    cfgs = []
    for proto in kinds:
        for nodes in sorted(set(node_counts)):
            for speed in sorted(set(float(s) for s in speeds)):
                for seed in sorted(set(seeds)):
                    cfgs.append(base.with_(protocol=proto, nodes=nodes, mean_speed=speed, seed=seed).validate())
    return cfgs


def run_sweep(base: SimConfig, protocols, node_counts, speeds, seeds, jobs: int = 1) -> SweepResult:
    """Run every (protocol, nodes, speed, seed) trial; output order is fixed.

    ``seeds`` is either a count (seeds 1..N) or an explicit iterable.
    """
    if isinstance(seeds, int):
        seeds = range(1, seeds + 1)
    cfgs = sweep_configs(base, protocols, node_counts, speeds, list(seeds))
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_run_cell, cfgs))
    else:
        trials = [_run_cell(c) for c in cfgs]
    return SweepResult(trials, aggregate(trials))
