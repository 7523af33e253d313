"""CSV emission for trial results, sweep aggregates and per-figure tables.

Floats are written with ``repr`` (shortest round-trip form, ``.`` decimal
separator), missing values as empty cells, and rows in lexicographic
(protocol, nodes, speed, seed) order, so files are byte-stable.
"""
from __future__ import annotations

import csv
import io

from .engine import NUMERIC_FIELDS, CellStats, SweepResult, TrialResult

RAW_COLUMNS = (
    "protocol",
    "nodes",
    "speed_mps",
    "seed",
    "pdr",
    "loss_pct",
    "intra_loss_pct",
    "inter_loss_pct",
    "lifetime_rounds",
    "censored",
    "avg_election_pkts",
    "hello_pkts",
    "gradient_pkts",
    "recovery_requests",
    "recovery_replies",
)

# file name -> (x axis, metric)
FIGURES = {
    "fig_pdr_vs_nodes.csv": ("nodes", "pdr"),
    "fig_pdr_vs_speed.csv": ("speed_mps", "pdr"),
    "fig_loss_vs_speed.csv": ("speed_mps", "loss_pct"),
    "fig_loss_vs_nodes.csv": ("nodes", "loss_pct"),
    "fig_ctrl_pkts.csv": ("nodes", "avg_election_pkts"),
    "fig_lifetime_vs_nodes.csv": ("nodes", "lifetime_rounds"),
    "fig_lifetime_vs_speed.csv": ("speed_mps", "lifetime_rounds"),
}

REFERENCE_NODES = 100
REFERENCE_SPEED = 5.0


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _order(trial: TrialResult):
    return (trial.protocol, trial.nodes, trial.speed_mps, trial.seed)


def raw_csv(trials: list[TrialResult]) -> str:
    rows = [RAW_COLUMNS]
    for t in sorted(trials, key=_order):
        rows.append([fmt(getattr(t, c)) for c in RAW_COLUMNS])
    return _write(rows)


def agg_csv(cells: list[CellStats]) -> str:
    header = ["protocol", "nodes", "speed_mps", "seeds"]
    for f in NUMERIC_FIELDS:
        header += [f"{f}_mean", f"{f}_stddev"]
    rows = [header]
    for c in sorted(cells, key=lambda c: (c.protocol, c.nodes, c.speed_mps)):
        row = [c.protocol, fmt(c.nodes), fmt(c.speed_mps), fmt(c.seeds)]
        for f in NUMERIC_FIELDS:
            row += [fmt(c.mean[f]), fmt(c.stddev[f])]
        rows.append(row)
    return _write(rows)


def _closest(values, target):
    return min(values, key=lambda v: (abs(v - target), v))


def figure_csv(cells: list[CellStats], axis: str, metric: str) -> str:
    """One row per x value, one column per protocol, cell means as values.

    The axis not being swept is held at the value closest to 100 nodes or
    5 m/s among those present in the sweep.
    """
    protocols = sorted({c.protocol for c in cells})
    if axis == "nodes":
        fixed = _closest({c.speed_mps for c in cells}, REFERENCE_SPEED)
        chosen = [c for c in cells if c.speed_mps == fixed]
        xs = sorted({c.nodes for c in chosen})
        key = lambda c: c.nodes  # noqa: E731
    else:
        fixed = _closest({c.nodes for c in cells}, REFERENCE_NODES)
        chosen = [c for c in cells if c.nodes == fixed]
        xs = sorted({c.speed_mps for c in chosen})
        key = lambda c: c.speed_mps  # noqa: E731
    table = {(c.protocol, key(c)): c.mean[metric] for c in chosen}
    rows = [[axis] + protocols]
    for x in xs:
        rows.append([fmt(x)] + [fmt(table.get((p, x))) for p in protocols])
    return _write(rows)


def sweep_files(result: SweepResult) -> dict[str, str]:
    """Every file a sweep writes, keyed by name."""
    files = {
        "sweep_raw.csv": raw_csv(result.trials),
        "sweep_agg.csv": agg_csv(result.cells),
    }
    for name, (axis, metric) in FIGURES.items():
        files[name] = figure_csv(result.cells, axis, metric)
    return files
