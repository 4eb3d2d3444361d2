"""Command-line interface.

Subcommands: rates, exact-sfs, sim-coalescent, sim-ancestral, sim-quenched,
cn-scaling, compare.  Parameters come from an optional key=value config file
plus command-line overrides.  Exit codes: 0 success, 2 configuration error,
3 replicate-abort threshold breached.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    AbortThresholdExceeded,
    ConfigError,
    build_rate_table,
    cn_scaling_report,
    config_from_mapping,
    parse_config_file,
    run_compare,
    run_exact,
    run_experiment,
    write_rates_csv,
)

_OVERRIDE_KEYS = [
    ("n", int),
    ("N", int),
    ("model", str),
    ("regime", str),
    ("alpha", float),
    ("kappa", float),
    ("gamma", float),
    ("c", float),
    ("beta", float),
    ("rho", float),
    ("eps", str),
    ("zeta", str),
    ("max_generations", int),
    ("N_list", str),
]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value parameter file")
    parser.add_argument("--seed", type=str, help="64-bit replication seed")
    parser.add_argument("--reps", type=int, help="number of replicates M")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--threads", type=int, help="worker processes")
    for key, typ in _OVERRIDE_KEYS:
        flag = "--" + key.replace("_", "-")
        parser.add_argument(flag, dest=key, type=typ)
    parser.add_argument("--validate", action="store_true", default=None,
                        help="assert the holding-time inversion identity per draw")
    parser.add_argument("--normalize-beta-pd", dest="normalize_beta_pd",
                        action="store_true", default=None)


_KIND_BY_COMMAND = {
    "sim-ancestral": "annealed",
    "sim-quenched": "quenched",
    "exact-sfs": "exact",
    "cn-scaling": "cn-scaling",
}


def _gather_config(args: argparse.Namespace, command: str) -> dict:
    mapping: dict = {}
    if args.config:
        mapping.update(parse_config_file(args.config))
    for key, _ in _OVERRIDE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    for key in ("seed", "reps", "out", "threads", "validate", "normalize_beta_pd"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    if command in _KIND_BY_COMMAND:
        mapping["kind"] = _KIND_BY_COMMAND[command]
    elif command in ("sim-coalescent", "compare", "rates"):
        model = mapping.get("model", "")
        mapping["kind"] = "coalescent-xi" if model in ("delta0-pd", "beta-pd") else "coalescent-lambda"
    return mapping


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sweepcoal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("rates", "dump a rate table as CSV (b,config,total_rate)"),
        ("exact-sfs", "exact expected branch lengths and phi (i,E_Li,phi_i)"),
        ("sim-coalescent", "Monte Carlo spectrum of a limiting coalescent"),
        ("sim-ancestral", "Monte Carlo spectrum of the discrete ancestral process"),
        ("sim-quenched", "Monte Carlo spectrum conditioned on population ancestries"),
        ("cn-scaling", "pair-coalescence probability across population sizes"),
        ("compare", "Monte Carlo spectrum next to the exact phi"),
    ]:
        _add_common(sub.add_parser(name, help=helptext))
    args = parser.parse_args(argv)

    try:
        cfg = config_from_mapping(_gather_config(args, args.command))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "rates":
            table = build_rate_table(cfg)
            if not cfg.out:
                print("config error: rates needs --out", file=sys.stderr)
                return 2
            write_rates_csv(cfg.out, table)
        elif args.command == "exact-sfs":
            run_exact(cfg)
        elif args.command in ("sim-coalescent", "sim-ancestral", "sim-quenched"):
            result = run_experiment(cfg)
            if result.aborts:
                print(f"note: {result.aborts} replicate(s) aborted at the generation cap",
                      file=sys.stderr)
        elif args.command == "cn-scaling":
            cn_scaling_report(cfg)
        elif args.command == "compare":
            run_compare(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AbortThresholdExceeded as exc:
        print(f"replicate aborts over threshold: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
