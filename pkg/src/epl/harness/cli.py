"""``epl <experiment> --config <path> [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from ..analysis.tomography import NonConvergenceError
from . import campaigns, config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

log = logging.getLogger("epl")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="epl", description="Entangled-pair source simulation campaigns.")
    ap.add_argument("experiment", choices=config.EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON campaign config")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--out", default=None, help="output directory (default: config output.dir or ./out)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(config_file, experiment=None, seed=None, out=None) -> int:
    try:
        cc = config.load(config_file, experiment, seed, out)
        if cc.seed < 0:
            raise config.ConfigError("seed must be non-negative", "$.seed")
        results = campaigns.run_campaign(cc)
    except config.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        log.error("non-convergence: %s", exc)
        return EXIT_NONCONVERGENCE
    written = campaigns.emit_figure_data(results, cc.out_dir)
    print(json.dumps(results.summary, sort_keys=True))
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    return run(args.config, args.experiment, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
