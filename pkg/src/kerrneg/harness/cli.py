"""``kerrneg run <config.json> [--out DIR] [--threads K]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from ..errors import ConfigError, KerrNegError
from .config import config_hash, load_config
from .experiments import DRIVERS
from .io import write_csv, write_sidecar

log = logging.getLogger("kerrneg")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def run(config_path, out_dir=None, threads: int | None = None) -> Path:
    """Validate, run and write ``<name>.csv`` files plus ``run.json`` into ``out_dir``."""
    cfg = load_config(config_path)
    if threads is not None and threads < 1:
        raise ConfigError("--threads must be >= 1")
    out = Path(out_dir) if out_dir is not None else Path("out") / cfg.name
    digest = config_hash(cfg)
    start = time.perf_counter()
    try:
        tables, summary = DRIVERS[cfg.kind](cfg, threads)
    except ConfigError:
        raise
    except KerrNegError as exc:
        raise type(exc)(f"[{cfg.kind} run '{cfg.name}', config {digest[:12]}] {exc}") from exc
    wall = time.perf_counter() - start
    out.mkdir(parents=True, exist_ok=True)
    for t in tables:
        write_csv(out / f"{t.name}.csv", t)
    write_sidecar(out / "run.json", cfg.model_dump(mode="json"), digest, wall, tables, summary)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kerrneg", description="Kerr-oscillator negativity experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config", help="path to the JSON run config")
    r.add_argument("--out", default=None, help="output directory (default: out/<name>)")
    r.add_argument("--threads", type=int, default=None, help="worker processes / kernel threads")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    # numba falls back to another threading layer on old TBB builds; nothing to act on
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    args = build_parser().parse_args(argv)
    try:
        out = run(args.config, args.out, args.threads)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except KerrNegError as exc:
        log.error("numerical failure (%s): %s", type(exc).__name__, exc)
        return EXIT_NUMERICAL
    log.info("wrote %s", out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
