"""Phase-tagged packet counters and the four comparison metrics."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

PHASES = ("intra", "inter")
CONTROL_KINDS = (
    "election_packets",
    "hello_packets",
    "gradient_packets",
    "join_packets",
    "recovery_requests",
    "recovery_replies",
    "recovery_data_legs",
)


@dataclass
class PhaseCounter:
    sent: int = 0
    delivered: int = 0
    lost: int = 0

    def record(self, delivered: bool) -> None:
        self.sent += 1
        if delivered:
            self.delivered += 1
        else:
            self.lost += 1


@dataclass
class MetricsLedger:
    intra: PhaseCounter = field(default_factory=PhaseCounter)
    inter: PhaseCounter = field(default_factory=PhaseCounter)
    control: Counter = field(default_factory=Counter)
    # every radio attempt, keyed by (phase, packet kind, delivery status)
    attempts: Counter = field(default_factory=Counter)
    election_denominator: int = 0
    first_death_round: int | None = None
    rounds_completed: int = 0

    def phase(self, name: str) -> PhaseCounter:
        return getattr(self, name)

    def record_data(self, phase: str, delivered: bool) -> None:
        self.phase(phase).record(delivered)

    def count(self, kind: str, n: int = 1) -> None:
        self.control[kind] += n

    def snapshot(self) -> dict:
        out = {}
        for ph in PHASES:
            c = self.phase(ph)
            out[f"{ph}_sent"] = c.sent
            out[f"{ph}_delivered"] = c.delivered
            out[f"{ph}_lost"] = c.lost
        for k in CONTROL_KINDS:
            out[k] = self.control[k]
        return out

    @property
    def data_sent(self) -> int:
        return self.intra.sent + self.inter.sent

    @property
    def data_delivered(self) -> int:
        return self.intra.delivered + self.inter.delivered

    @property
    def data_lost(self) -> int:
        return self.intra.lost + self.inter.lost


def packet_loss_pct(ledger: MetricsLedger) -> float | None:
    """Percent of data transmissions lost, or None when nothing was sent."""
    if ledger.data_sent == 0:
        return None
    return 100.0 * ledger.data_lost / ledger.data_sent


def pdr(ledger: MetricsLedger) -> float | None:
    if ledger.data_sent == 0:
        return None
    return ledger.data_delivered / ledger.data_sent


def phase_loss_pct(ledger: MetricsLedger, phase: str) -> float | None:
    c = ledger.phase(phase)
    if c.sent == 0:
        return None
    return 100.0 * c.lost / c.sent


def avg_election_packets_per_node(ledger: MetricsLedger) -> float | None:
    """Announcements per alive node per round.

    The denominator sums, over completed rounds, the number of nodes alive
    when the election started.
    """
    if ledger.election_denominator == 0:
        return None
    return ledger.control["election_packets"] / ledger.election_denominator
