"""Command-line front end: ``mrumor <command> [--config FILE] [flags]``.

Flags override values read from the config file. Exit codes: 0 success,
2 configuration or validation error, 3 work-size guard tripped.
Ensembles use ``$MRUMOR_WORKERS`` worker processes (default 1); results do
not depend on it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any

from .core import ParamError
from .harness import COMMANDS, BudgetError, ConfigError, RunConfig, loads_config, render

EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _csv_list(conv):
    def parse(text: str) -> list:
        return [conv(x) for x in text.split(",") if x.strip()]
    return parse


def _n0_token(text: str) -> Any:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML file of key = value pairs")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out", type=Path, help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    g = common.add_argument_group("model parameters")
    g.add_argument("--N", type=int, dest="N", help="community size")
    g.add_argument("--s", type=int, dest="s", help="number of Seeds")
    g.add_argument("--b", type=float, dest="b", help="fraction of Agnostics")
    g.add_argument("--d", type=float, dest="d", help="Believer flip probability per round")
    g.add_argument("--m", type=int, dest="m", help="conversion threshold")
    g.add_argument("--r", type=int, dest="r", help="room size")
    g.add_argument("--N0", type=_n0_token, dest="N0",
                   help="initial believers: integer, 's', or a fraction like 0.05N")
    k = common.add_argument_group("command knobs")
    k.add_argument("--T", type=int, dest="T", help="trajectory rounds")
    k.add_argument("--trials", type=int)
    k.add_argument("--max-rounds", type=int, dest="max_rounds")
    k.add_argument("--method", choices=("shuffle", "hypergeometric"))
    k.add_argument("--n-min", type=float, dest="n_min")
    k.add_argument("--n-max", type=float, dest="n_max")
    k.add_argument("--points", type=int)
    k.add_argument("--grid-N0", type=_csv_list(_n0_token), dest="grid_N0")
    k.add_argument("--grid-m", type=_csv_list(int), dest="grid_m")
    k.add_argument("--grid-d", type=_csv_list(float), dest="grid_d")
    k.add_argument("--grid-b", type=_csv_list(float), dest="grid_b")
    k.add_argument("--max-cells", type=int, dest="max_cells")
    k.add_argument("--extension", action="store_true", default=None,
                   help="allow the general binomial mean-field map for other (m, r)")

    parser = argparse.ArgumentParser(
        prog="mrumor", description="m-rumor spreading model: analysis and simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "expect": "expected next-round believers f(n) and drift on a log grid",
        "trajectory": "iterated expected believer counts",
        "simulate": "one seeded stochastic run",
        "ensemble": "seeded ensemble of runs",
        "sweep": "ensemble takeover frequency over a parameter grid",
        "fixed-points": "mean-field fixed points and their stability",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    flat: dict[str, Any] = {}
    if args.config is not None:
        try:
            flat.update(loads_config(args.config.read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    skip = {"config", "out", "command"}
    flat.update({k: v for k, v in vars(args).items() if k not in skip and v is not None})
    return RunConfig.from_flat(flat)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        table = COMMANDS[args.command](cfg)
        text = render(table)
    except (ConfigError, ParamError) as exc:
        print(f"mrumor: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"mrumor: budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
