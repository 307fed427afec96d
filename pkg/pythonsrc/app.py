import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

from functions.construct import construct_handler
from functions.demo import demo_handler
from functions.dichotomy import dichotomy_handler
from functions.expansive import expansive_handler
from functions.growth import decay_handler, growth_handler
from functions.noncritical import noncritical_handler
from functions.pipeline import pipeline_handler
from functions.rescale import rescale_handler
from helpers.config import apply_overrides, load_config
from helpers.errors import EXIT_NUMERICAL_ERROR, HDichotomyError
from helpers.storage import out_dir
from hdichotomy import __version__

LOG = logging.getLogger()
LOG.setLevel(logging.INFO)

TASKS: Dict[str, Callable[..., Dict]] = {
    "check-growth": growth_handler,
    "check-decay": decay_handler,
    "check-dichotomy": dichotomy_handler,
    "check-expansive": expansive_handler,
    "check-noncritical": noncritical_handler,
    "rescale": rescale_handler,
    "construct": construct_handler,
    "pipeline": pipeline_handler,
    "demo": demo_handler,
}

EXIT_CODES = {
    "pass": 0,
    "dichotomic": 0,
    "fail": 1,
    "not-dichotomic": 1,
    "inconclusive": 2,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config, .toml or .json")
    common.add_argument("--out", help="output directory or s3://bucket/prefix (default $HDICHOTOMY_OUT_DIR or ./reports)")
    common.add_argument("--seed", type=int, help="seed for sphere sampling")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="csv also writes plot data")
    common.add_argument("--workers", type=int, help="threads for grid sweeps (default $HDICHOTOMY_WORKERS or 1)")
    common.add_argument("--system", help="builtin system name")
    common.add_argument("--rate", help="builtin rate name")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="system parameter, repeatable")
    common.add_argument("--rate-param", action="append", metavar="KEY=VALUE", help="rate parameter, repeatable")
    common.add_argument("--C", dest="C", type=float, help="noncriticality window in log-h units")
    common.add_argument("--beta", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--D", dest="D", type=float)
    common.add_argument("--horizon", type=float, help="sigma horizon for the stable subspace")
    common.add_argument("--margin", type=float)

    parser = argparse.ArgumentParser(prog="hdichotomy", description="Check h-dichotomies of evolution families")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in TASKS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entrypoint. Exit 0 pass/dichotomic, 1 fail/not-dichotomic,
    2 inconclusive, 64 config error, 70 numerical error."""
    logging.basicConfig(level=os.environ.get("HDICHOTOMY_LOG_LEVEL", "INFO").upper(),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        config = apply_overrides(load_config(args.config), args)
        result = TASKS[args.command](config, out_dir(args.out), args.format)
    except HDichotomyError as e:
        LOG.error("%s failed: %s: %s", args.command, type(e).__name__, e)
        return e.exit_code
    except Exception as e:
        LOG.exception("%s failed unexpectedly: %s", args.command, e)
        return EXIT_NUMERICAL_ERROR
    LOG.info("%s: %s (%s files)", args.command, result["status"], len(result["written"]))
    return EXIT_CODES[result["status"]]


if __name__ == "__main__":
    sys.exit(main())
