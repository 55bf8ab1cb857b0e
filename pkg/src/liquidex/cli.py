"""Command-line entry point: ``liquidex <command> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import InputError, LiquidexError, ParameterError
from .experiments import COMMANDS, ConfigError, load_config, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_TOLERANCE = 4
EXIT_IO = 5

# which config entry --paths overrides for each command
_PATH_KEYS = {
    "paths": ("paths", "count"),
    "sweep": None,
    "oracle-check": ("oracle", "mc_paths"),
    "multi": ("multi", "paths"),
    "drift-demo": None,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liquidex", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file; omitted keys take their defaults")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, help="master seed (overrides config)")
    ap.add_argument("--paths", type=int, help="path count (overrides the command's config entry)")
    ap.add_argument("--workers", type=int, help="worker threads; does not affect outputs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must fit in an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be positive")
            cfg["workers"] = args.workers
        if args.paths is not None:
            key = _PATH_KEYS[args.command]
            if key is None:
                raise ConfigError(f"--paths has no meaning for {args.command}")
            if args.paths < 1:
                raise ConfigError("--paths must be positive")
            cfg[key[0]][key[1]] = args.paths
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        checks = run(args.command, cfg, args.out)
    except (ConfigError, ParameterError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LiquidexError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    failed = False
    for c in checks:
        status = ("PASS" if c.passed else "FAIL") + (" (informational)" if c.informational else "")
        failed |= not c.passed and not c.informational
        print(f"{status} {c.name}: {c.value:.6g} (tolerance {c.tolerance:g})")
    print(f"wrote {args.out}")
    return EXIT_TOLERANCE if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
