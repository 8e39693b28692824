"""Command line entry point: ``conelab <kind> --config <path>``."""

from __future__ import annotations

import argparse
import os
import sys

from .lab.config import KINDS, SCHEMA, load_config
from .errors import ConfigError

EXIT_ERROR = 2


def _schema_help():
    lines = ["config keys (flat 'key: value' lines, '#' comments):"]
    for key, (typ, default, _, text) in SCHEMA.items():
        lines.append(f"  {key:<18} {typ.__name__:<6} default={default!r}  {text}")
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(
        prog="conelab", description="Contact-set experiments on structured grids.",
        epilog=_schema_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="flat key: value config file")
    p.add_argument("--out", default="conelab_out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (overrides CONELAB_THREADS)")
    return p


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("CONELAB_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"CONELAB_THREADS must be an integer, got {env!r}") from None


def _set_threads(n):
    import numba

    if n < 1:
        raise ConfigError("thread count must be at least 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.kind)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
            cfg = cfg.with_updates(seed=args.seed)
        n = _threads(args.threads)
        if n is not None:
            _set_threads(n)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    from .lab.runner import execute

    return execute(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
