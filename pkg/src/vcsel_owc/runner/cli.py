"""``vcsel-owc`` command line.

Exit status: 0 on success, 2 for usage or configuration errors, 1 when an
experiment fails at run time.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS, run_ann_accuracy

log = logging.getLogger("vcsel_owc")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcsel-owc", description="VCSEL-array optical wireless downlink simulations.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p):
        p.add_argument("--config", type=Path, help="JSON scenario file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field (dotted path)")
        return p

    helps = {
        "snr-map": "SNR over the central cell and the whole array",
        "pdf": "central-beam SNR histogram against the analytical densities",
        "rate-vs-cell": "central-beam mean rate against cell size",
        "rate-vs-array": "single-user system rate against array size",
        "multiuser": "system rate against number of users, with and without ICI",
        "mobility": "throughput and outage against user speed per selection scheme",
        "eyesafety": "largest eye-safe transmit power per beam angle",
        "train-ann": "train the beam-activation classifier and report accuracy",
    }
    for name, text in helps.items():
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--dat", action="store_true", help="also write a .dat mirror")
    common(sub.add_parser("validate-config", help="check a config file and print it resolved"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        print(f"config OK (hash {cfg.digest()})", file=sys.stderr)
        return 0

    try:
        if args.command == "train-ann":
            args.out.mkdir(parents=True, exist_ok=True)
            table = run_ann_accuracy(cfg, model_dir=str(args.out))
        else:
            table = EXPERIMENTS[args.command](cfg)
        paths = table.write(args.out, dat=args.dat)
    except (ValueError, ArithmeticError, OSError) as exc:
        log.debug("experiment failed", exc_info=True)
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    print(f"{table.experiment}: {len(table.rows)} rows in {table.wall_time:.1f} s "
          f"-> {paths[0]}")
    if args.command == "eyesafety":
        for row in table.where():
            print(f"  theta={row['theta_fwhm_deg']:g} deg  t={row['t_exp']:g} s  "
                  f"P_max={row['p_max_mw']:.1f} mW")
    return 0


if __name__ == "__main__":
    sys.exit(main())
