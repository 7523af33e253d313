"""Command line: ``run``, ``sweep`` and ``describe-config``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
Data goes to files under ``--out``; diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from .config import DEFAULTS, ConfigError, describe_keys, load_config
from .engine import Simulation, run_sweep
from .protocols import ALL_PROTOCOLS, ProtocolKind
from .results import raw_csv, sweep_files

log = logging.getLogger("mwsn")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
SEED_ENV = "MWSN_SEED"


class UsageError(Exception):
    pass


def _load(path):
    if path is None:
        return DEFAULTS
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}") from None


def resolve_seed(cfg, flag):
    """Seed precedence: command-line flag, then $MWSN_SEED, then the file."""
    if flag is not None:
        return replace(cfg, seed=flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer", "sim.seed") from None
        if seed < 0:
            raise ConfigError(f"{SEED_ENV} must be nonnegative", "sim.seed")
        return replace(cfg, seed=seed)
    return cfg


class _Staging:
    """Write files into a hidden directory and publish them only on success."""

    def __init__(self, out: Path):
        self.out = out
        self.created = not out.exists()
        out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))

    def write(self, name: str, text: str) -> None:
        (self.tmp / name).write_text(text, encoding="utf-8", newline="")

    def commit(self) -> None:
        for f in sorted(self.tmp.iterdir()):
            os.replace(f, self.out / f.name)
        self.tmp.rmdir()

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)
        if self.created:
            try:
                self.out.rmdir()
            except OSError:
                pass


def _staged(out, produce) -> None:
    stage = _Staging(Path(out))
    try:
        for name, text in produce():
            stage.write(name, text)
    except BaseException:
        stage.abort()
        raise
    stage.commit()


def cmd_run(args) -> int:
    cfg = resolve_seed(_load(args.config), args.seed).validate()
    log.info("run %s nodes=%d speed=%g seed=%d", cfg.protocol, cfg.nodes, cfg.mean_speed, cfg.seed)

    def produce():
        events: list[str] = []
        result = Simulation(cfg, events=events).run()
        yield "trial.csv", raw_csv([result])
        yield "events.log", "\n".join(events) + ("\n" if events else "")

    _staged(args.out, produce)
    return EXIT_OK


def _csv_list(text: str, kind, name: str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError(f"--{name} must list at least one value")
    try:
        return [kind(t) for t in items]
    except ValueError:
        raise UsageError(f"--{name}: cannot parse {text!r}") from None


def _protocols(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return [p.value for p in ALL_PROTOCOLS]
    try:
        return [ProtocolKind.parse(p).value for p in _csv_list(text, str, "protocols")]
    except ValueError as exc:
        raise UsageError(f"--protocols: {exc}") from None


def cmd_sweep(args) -> int:
    cfg = resolve_seed(_load(args.config), None).validate()
    protocols = _protocols(args.protocols)
    nodes = _csv_list(args.nodes, int, "nodes")
    speeds = _csv_list(args.speeds, float, "speeds")
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if any(n < 1 for n in nodes):
        raise UsageError("--nodes values must be positive")
    if any(s < 0 for s in speeds):
        raise UsageError("--speeds values must be nonnegative")
    seeds = range(cfg.seed, cfg.seed + args.seeds)
    log.info("sweep %d protocols x %d node counts x %d speeds x %d seeds, %d jobs",
             len(protocols), len(nodes), len(speeds), args.seeds, args.jobs)

    def produce():
        result = run_sweep(cfg, protocols, nodes, speeds, seeds, jobs=args.jobs)
        yield from sweep_files(result).items()

    _staged(args.out, produce)
    return EXIT_OK


def cmd_describe(args) -> int:
    sys.stdout.write(describe_keys())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mwsn", description="Mobile WSN clustering protocol simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one trial")
    run.add_argument("--config", help="key = value config file (defaults if omitted)")
    run.add_argument("--seed", type=int, help=f"trial seed (overrides ${SEED_ENV} and sim.seed)")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a protocol x nodes x speed x seed grid")
    sweep.add_argument("--config", help="key = value config file (defaults if omitted)")
    sweep.add_argument("--protocols", default="all", help="comma-separated list or 'all'")
    sweep.add_argument("--nodes", default="50,100,150,200", help="comma-separated node counts")
    sweep.add_argument("--speeds", default="0,5,10,15,20", help="comma-separated mean speeds (m/s)")
    sweep.add_argument("--seeds", type=int, default=10, help="seeds per cell, counting up from sim.seed")
    sweep.add_argument("--jobs", type=int, default=1, help="worker processes")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.set_defaults(func=cmd_sweep)

    desc = sub.add_parser("describe-config", help="list every config key with its default and provenance")
    desc.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mwsn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"mwsn: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("mwsn: interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"mwsn: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
