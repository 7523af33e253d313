"""Trial configuration and the ``key = value`` config file format."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Any

from .mobility import MobilityParams
from .model import FieldGeometry, ZoneGrid
from .protocols import ProtocolKind, WeightParams
from .radio import RadioParams

AUTO = "auto"


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.message = message
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class Key:
    name: str
    attr: str
    kind: type
    unit: str
    source: str
    help: str


KEYS = [
    Key("field.width", "field_width", float, "m", "reference setup", "field width"),
    Key("field.height", "field_height", float, "m", "reference setup", "field height"),
    Key("zones.rows", "zone_rows", int, "count", "reference setup (16 zones as 4x4)", "zone grid rows"),
    Key("zones.cols", "zone_cols", int, "count", "reference setup (16 zones as 4x4)", "zone grid columns"),
    Key("radio.range_m", "range_m", float, "m", "derived (zone cell diagonal)", "transmission range"),
    Key("radio.e_elec_nj_per_bit", "e_elec_nj", float, "nJ/bit", "reference setup", "transceiver electronics energy"),
    Key("radio.e_amp_pj_per_bit_m_exp", "e_amp_pj", float, "pJ/bit/m^k", "reference setup", "amplifier energy"),
    Key("radio.path_loss_exponent", "path_loss_exponent", int, "-", "design decision (square-law path loss)", "2 or 4"),
    Key("energy.initial_j", "initial_j", float, "J", "reference setup", "battery at startup"),
    Key("packet.data_bytes", "data_bytes", int, "bytes", "reference setup", "data packet size"),
    Key("packet.control_bytes", "control_bytes", int, "bytes", "reference setup", "broadcast/control packet size"),
    Key("mobility.mean_speed_mps", "mean_speed", float, "m/s", "design decision (sweep axis)", "mass-mobility mean speed"),
    Key("mobility.speed_stddev_mps", "speed_stddev", float, "m/s", "design decision (auto = 0.2 x mean)", "speed spread"),
    Key("mobility.turn_stddev_rad", "turn_stddev", float, "rad", "design decision", "heading perturbation per update"),
    Key("mobility.update_interval_s", "update_interval", float, "s", "design decision", "time between speed/heading updates"),
    Key("round.ticks_per_round", "ticks_per_round", int, "ticks", "design decision", "1 s ticks in a round"),
    Key("round.data_tick", "data_tick", int, "tick", "design decision", "intra-cluster send tick"),
    Key("round.inter_tick", "inter_tick", int, "tick", "design decision", "inter-cluster forwarding tick"),
    Key("protocol.kind", "protocol", str, "-", "design decision", "DECA, DEMC, DEMC_RECOVERY, MAR, GRC, GRC_RECOVERY"),
    Key("protocol.w1", "w1", float, "-", "design decision (auto = per-protocol default)", "energy weight"),
    Key("protocol.w2", "w2", float, "-", "design decision (auto = per-protocol default)", "center-ness/id/degree weight"),
    Key("protocol.w3", "w3", float, "-", "design decision (auto = per-protocol default)", "DECA id weight"),
    Key("protocol.t_max_s", "t_max", float, "s", "design decision", "election timer window"),
    Key("deca.hello_period_ticks", "hello_period", int, "ticks", "design decision", "DECA hello period"),
    Key("loc.fix_cost_j", "fix_cost_j", float, "J", "design decision", "energy per localization fix"),
    Key("loc.fix_displacement_m", "fix_displacement_m", float, "m", "design decision", "drift that triggers a fix"),
    Key("recovery.enabled", "recovery", bool, "-", "design decision (auto = on for *_RECOVERY)", "hop-by-hop recovery"),
    Key("sink.x", "sink_x", float, "m", "design decision (field center)", "sink x"),
    Key("sink.y", "sink_y", float, "m", "design decision (field center)", "sink y"),
    Key("sim.nodes", "nodes", int, "count", "reference setup", "sensor count"),
    Key("sim.max_rounds", "max_rounds", int, "rounds", "design decision", "round cap (censors lifetime)"),
    Key("sim.seed", "seed", int, "-", "design decision", "trial seed"),
]
KEY_BY_NAME = {k.name: k for k in KEYS}


@dataclass(frozen=True)
class SimConfig:
    """Complete parameterization of one trial. ``None`` means derived (``auto``)."""

    field_width: float = 1000.0
    field_height: float = 1000.0
    zone_rows: int = 4
    zone_cols: int = 4
    range_m: float | None = None
    e_elec_nj: float = 50.0
    e_amp_pj: float = 0.0013
    path_loss_exponent: int = 2
    initial_j: float = 3.0
    data_bytes: int = 100
    control_bytes: int = 25
    mean_speed: float = 5.0
    speed_stddev: float | None = None
    turn_stddev: float = 0.5
    update_interval: float = 5.0
    ticks_per_round: int = 20
    data_tick: int = 5
    inter_tick: int = 10
    protocol: str = "DEMC"
    w1: float | None = None
    w2: float | None = None
    w3: float | None = None
    t_max: float = 1.0
    hello_period: int = 10
    fix_cost_j: float = 2e-4
    fix_displacement_m: float = 10.0
    recovery: bool | None = None
    sink_x: float | None = None
    sink_y: float | None = None
    nodes: int = 100
    max_rounds: int = 100000
    seed: int = 1

    # -- derived views ------------------------------------------------------

    @property
    def kind(self) -> ProtocolKind:
        return ProtocolKind.parse(self.protocol)

    @property
    def geometry(self) -> FieldGeometry:
        return FieldGeometry(self.field_width, self.field_height)

    @property
    def grid(self) -> ZoneGrid:
        return ZoneGrid(self.zone_rows, self.zone_cols, self.geometry)

    @property
    def effective_range(self) -> float:
        if self.range_m is not None:
            return self.range_m
        g = self.grid
        return min(g.cell_width, g.cell_height) * math.sqrt(2.0)

    @property
    def radio(self) -> RadioParams:
        return RadioParams(
            self.effective_range,
            self.e_elec_nj * 1e-9,
            self.e_amp_pj * 1e-12,
            self.path_loss_exponent,
        )

    @property
    def mobility(self) -> MobilityParams:
        sd = 0.2 * self.mean_speed if self.speed_stddev is None else self.speed_stddev
        return MobilityParams(self.mean_speed, sd, self.turn_stddev, self.update_interval)

    @property
    def weights(self) -> WeightParams:
        base = WeightParams.default_for(self.kind, self.t_max)
        return WeightParams(
            base.w1 if self.w1 is None else self.w1,
            base.w2 if self.w2 is None else self.w2,
            base.w3 if self.w3 is None else self.w3,
            self.t_max,
        )

    @property
    def recovery_enabled(self) -> bool:
        return self.kind.recovery if self.recovery is None else self.recovery

    @property
    def sink(self) -> tuple[float, float]:
        x = self.field_width / 2 if self.sink_x is None else self.sink_x
        y = self.field_height / 2 if self.sink_y is None else self.sink_y
        return (x, y)

    @property
    def max_hops(self) -> int:
        return 2 * (self.zone_rows + self.zone_cols)

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    # -- validation ---------------------------------------------------------

    def validate(self) -> "SimConfig":
        """Return self or raise ConfigError naming the offending key."""

        def bad(attr, msg):
            name = next(k.name for k in KEYS if k.attr == attr)
            raise ConfigError(msg, key=name)

        for k in KEYS:
            v = getattr(self, k.attr)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                if not math.isfinite(v):
                    bad(k.attr, "must be finite")
                if v < 0:
                    bad(k.attr, "must be nonnegative")
        for attr in ("field_width", "field_height", "initial_j", "data_bytes", "control_bytes",
                     "update_interval", "ticks_per_round", "t_max", "hello_period", "fix_displacement_m"):
            if getattr(self, attr) <= 0:
                bad(attr, "must be positive")
        if self.zone_rows < 1:
            bad("zone_rows", "must be at least 1")
        if self.zone_cols < 1:
            bad("zone_cols", "must be at least 1")
        if self.range_m is not None and self.range_m <= 0:
            bad("range_m", "must be positive")
        if self.path_loss_exponent not in (2, 4):
            bad("path_loss_exponent", "must be 2 or 4")
        if not 0 < self.data_tick < self.inter_tick < self.ticks_per_round:
            bad("data_tick", "need 0 < data_tick < inter_tick < ticks_per_round")
        try:
            kind = self.kind
        except ValueError as exc:
            bad("protocol", str(exc))
        try:
            self.weights.check(kind)
        except ValueError as exc:
            bad("w2", str(exc))
        sx, sy = self.sink
        if not (0 <= sx <= self.field_width and 0 <= sy <= self.field_height):
            bad("sink_x", "sink must lie inside the field")
        if self.nodes < 1:
            bad("nodes", "need at least one sensor")
        return self


DEFAULTS = SimConfig()


def _format(value: Any) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(key: Key, text: str, line: int | None):
    text = text.strip()
    if text.lower() == AUTO:
        if getattr(DEFAULTS, key.attr) is not None:
            raise ConfigError("has no automatic default", key.name, line)
        return None
    try:
        if key.kind is bool:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if key.kind is int:
            return int(text)
        if key.kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {key.kind.__name__}", key.name, line) from None


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse ``key = value`` lines (``#`` comments) over ``base`` and validate."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", None, lineno)
        name, _, value = line.partition("=")
        name = name.strip()
        key = KEY_BY_NAME.get(name)
        if key is None:
            raise ConfigError("unknown key", name, lineno)
        values[key.attr] = _parse_value(key, value, lineno)
        lines[key.name] = lineno
    cfg = replace(base or DEFAULTS, **values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.key, lines.get(exc.key)) from None


def load_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: SimConfig) -> str:
    return "".join(f"{k.name} = {_format(getattr(cfg, k.attr))}\n" for k in KEYS)


def describe_keys() -> str:
    rows = ["# key | type | unit | default | provenance"]
    for k in KEYS:
        default = getattr(DEFAULTS, k.attr)
        shown = _format(default)
        if k.name == "radio.range_m":
            shown = f"auto ({DEFAULTS.effective_range:.2f}, derived)"
        rows.append(f"{k.name} | {k.kind.__name__} | {k.unit} | {shown} | {k.source}")
    return "\n".join(rows) + "\n"


def config_fingerprint(cfg: SimConfig) -> str:
    text = format_config(replace(cfg, seed=0))
    return hashlib.sha256(text.encode()).hexdigest()[:12]

