"""Command line front end.

    tdgibbs run <config>
    tdgibbs verify <preset> <bridge> <q> <algorithm> [--mutate-weight [DELTA]]
    tdgibbs compare <config>

Exit codes: 0 success; 1 verification or comparison failed; 2 bad input;
3 numerical failure during a run.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

from .bridges import bridge_from_name
from .config import ConfigError, load_config
from .diagnostics import summarize
from .gibbs import MoveLaw
from .model import ContractViolation, ImpossibleStateError
from .runner import (
    COMPARE_HEADER,
    build_model,
    compare_one,
    execute,
    summary_path,
    tv_to_oracle,
    write_chain_csv,
    write_compare_table,
    write_summary,
)
from .testbeds import grid_toy_make
from .verify import invariance_report

NUMERICAL_ERRORS = (ImpossibleStateError, ContractViolation, ArithmeticError, FloatingPointError)


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        _err(str(e))
        return 2
    try:
        model = build_model(cfg)
        chain = execute(cfg, model=model)
    except NUMERICAL_ERRORS as e:
        _err(f"numerical failure: {e}")
        return 3
    summary = summarize(chain)
    tv = tv_to_oracle(summary, model)
    chain_file = write_chain_csv(cfg.output_path, chain, cfg)
    summary_file = write_summary(summary_path(cfg.output_path), summary, cfg, tv)
    print(f"wrote {len(chain)} records to {chain_file}")
    print(f"wrote summary to {summary_file}")
    posterior = ", ".join(f"{k}: {p:.4f}" for k, p in sorted(summary.posterior_k.items()))
    print(f"posterior_k {{{posterior}}}  switch_rate {summary.switch_rate:.4f}  ess_k {summary.ess_k:.1f}")
    if tv is not None:
        print(f"tv_to_exact {tv:.5f}")
    return 0


def cmd_verify(args) -> int:
    try:
        toy = grid_toy_make(args.preset)
        bridge = bridge_from_name(toy.spec, args.bridge)
        law = MoveLaw(args.q)
        if args.algorithm not in ("gibbs", "rj"):
            raise ValueError(f"unknown algorithm {args.algorithm!r}; expected 'gibbs' or 'rj'")
    except (KeyError, ValueError) as e:
        _err(str(e))
        return 2
    report = invariance_report(toy, bridge, law, args.algorithm, mode=args.mode,
                               log_weight_offset=args.mutate_weight)
    print(report.text())
    print(report.key_values())
    return 0 if report.passed else 1


def cmd_compare(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        _err(str(e))
        return 2
    if build_model(cfg).oracle is None:
        _err(f"model {cfg.model!r} has no exact posterior to compare against")
        return 2
    jobs = [("gibbs", 0), ("rj", 1)]
    try:
        if args.serial:
            rows = [compare_one(cfg, alg, chain) for alg, chain in jobs]
        else:
            with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
                futures = [pool.submit(compare_one, cfg, alg, chain) for alg, chain in jobs]
                rows = [f.result() for f in futures]
    except NUMERICAL_ERRORS as e:
        _err(f"numerical failure: {e}")
        return 3
    path = write_compare_table(cfg.output_path, rows, cfg)

    print("  ".join(f"{c:>13}" for c in COMPARE_HEADER))
    for row in rows:
        print("  ".join(f"{row[c]:>13.6g}" if isinstance(row[c], float) else f"{row[c]:>13}"
                        for c in COMPARE_HEADER))
    passed = all(row["tv_to_exact"] <= cfg.threshold for row in rows)
    print(f"{'PASS' if passed else 'FAIL'}: threshold {cfg.threshold}; table written to {path}")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdgibbs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one chain from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="exact invariance check on a grid preset")
    p.add_argument("preset")
    p.add_argument("bridge", help="prior_birth or gaussian(TAU)")
    p.add_argument("q", type=float)
    p.add_argument("algorithm", help="gibbs or rj")
    p.add_argument("--mode", choices=("general", "balanced"), default=None,
                   help="jump-weight formula for gibbs (default: balanced iff the bridge is)")
    p.add_argument("--mutate-weight", type=float, nargs="?", const=0.1, default=0.0,
                   metavar="DELTA", help="debug hook: corrupt one jump log-weight by DELTA")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="Gibbs vs reversible jump against the exact posterior")
    p.add_argument("config")
    p.add_argument("--serial", action="store_true", help="run the two chains one after the other")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
