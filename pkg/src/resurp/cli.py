"""Command-line entry point.

Subcommands::

    resurp simulate    Monte Carlo expected-surprisal trajectory -> CSV
    resurp oracle      exact trajectory and absorption time -> CSV + stdout
    resurp approx      step-0 closed-form predictions -> stdout table
    resurp experiment  full study suite -> five CSV/JSON products
    resurp fit         correlation report from a records CSV -> JSON

All randomness flows from ``--seed``; ``--threads`` caps workers without
changing any output byte.  Numeric output is printed with 17 significant
digits so files diff cleanly.  The ``RESURP_OUT_DIR`` environment
variable supplies the default output directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from resurp import dynamics, experiments, oracle
from resurp.approx import fixation_time, linear_diffusion_delta, second_order_delta
from resurp.model import ModelSpec


def _fmt(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def _vector(text: str) -> list:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def _out_dir(path: str | None) -> Path:
    return Path(path or os.environ.get("RESURP_OUT_DIR", "."))


def _spec_from_args(args) -> ModelSpec:
    if len(args.prior) != len(args.q):
        raise SystemExit(
            f"error: --prior has {len(args.prior)} entries but --q has {len(args.q)}"
        )
    try:
        return ModelSpec(
            prior=args.prior,
            likelihood=args.q,
            allow_parse_failure=getattr(args, "allow_parse_failure", False),
        )
    except ValueError as err:
        raise SystemExit(f"error: {err}") from err


def _add_spec_flags(parser):
    parser.add_argument("--prior", type=_vector, required=True,
                        help="comma-separated prior over structures, e.g. 0.8,0.2")
    parser.add_argument("--q", type=_vector, required=True,
                        help="comma-separated word likelihood per structure, e.g. 0.004,0.5")
    parser.add_argument("--n", type=int, required=True, help="particle count N")


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    stats = dynamics.estimate_expected_surprisal(
        spec, args.n, args.steps, args.trials, args.seed, threads=args.threads
    )
    columns = [
        "step", "mean_surprisal", "stdev_surprisal", "stderr", "absorbed_fraction",
        "failed_fraction", "trials", "mean_surprisal_finite", "finite_trials",
    ]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for s in stats:
            writer.writerow([_fmt(getattr(s, c)) for c in columns])
    print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    spec = _spec_from_args(args)
    try:
        chain = oracle.build_chain(spec, args.n, state_budget=args.state_budget)
    except oracle.StateBudgetExceededError as err:
        raise SystemExit(f"error: {err}") from err
    trajectory = oracle.exact_expected_surprisal(chain, spec, args.steps)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "expected_surprisal"])
        for i, value in enumerate(trajectory):
            writer.writerow([i, _fmt(float(value))])
    if args.dump_chain:
        oracle.dump_chain_csv(chain, args.dump_chain)
        print(f"wrote {args.dump_chain}")
    print(f"wrote {args.out}")
    print(f"states {chain.num_states}")
    print(f"absorption_time {_fmt(oracle.exact_absorption_time(chain))}")
    return 0


def cmd_approx(args) -> int:
    spec = _spec_from_args(args)
    so = second_order_delta(spec, [spec.prior], args.n)
    tau = fixation_time(spec.prior, args.n)
    ld = linear_diffusion_delta(spec, [spec.prior], args.n)
    print(f"second_order_delta {_fmt(so.value)}")
    print(f"fixation_time {_fmt(tau)}")
    print(f"linear_diffusion_delta {_fmt(ld.value)}")
    return 0


def cmd_experiment(args) -> int:
    try:
        config = (
            experiments.load_suite_config(args.config)
            if args.config
            else experiments.default_suite(scale=args.scale, seed=args.seed)
        )
    except (ValueError, OSError) as err:
        raise SystemExit(f"error: {err}") from err
    paths = experiments.run_paper_suite(_out_dir(args.out), config, threads=args.threads)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def cmd_fit(args) -> int:
    try:
        records = experiments.read_records(args.records)
        report = experiments.fit_deltas(records)
    except (ValueError, OSError) as err:
        raise SystemExit(f"error: {err}") from err
    experiments.emit_records(report, args.out, format="json")
    if args.points:
        experiments.emit_records(report, args.points, format="csv")
        print(f"wrote {args.points}")
    print(f"wrote {args.out}")
    for name in (
        "pearson_r2_second_order",
        "pearson_r2_linear_diffusion",
        "spearman_rho_second_order",
        "spearman_rho_linear_diffusion",
    ):
        print(f"{name} {_fmt(getattr(report, name))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resurp",
        description="Expected-surprisal dynamics of particle-filter parsers under resampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo expected-surprisal trajectory")
    _add_spec_flags(p)
    p.add_argument("--steps", type=int, required=True, help="number of resampling steps")
    p.add_argument("--trials", type=int, default=50_000, help="Monte Carlo trials")
    p.add_argument("--seed", type=int, default=experiments.DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=1, help="worker cap; never changes output")
    p.add_argument("--allow-parse-failure", action="store_true",
                   help="permit zero likelihood entries (infinite surprisal branch)")
    p.add_argument("--out", type=Path, required=True, help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact trajectory and absorption time")
    _add_spec_flags(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--state-budget", type=int, default=oracle.DEFAULT_STATE_BUDGET,
                   help="refuse chains with more composition states than this")
    p.add_argument("--dump-chain", type=Path, default=None,
                   help="also dump states and transition rows to this CSV (debugging)")
    p.add_argument("--allow-parse-failure", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("approx", help="closed-form step-0 predictions at the exact prior")
    _add_spec_flags(p)
    p.add_argument("--allow-parse-failure", action="store_true")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("experiment", help="run the full study suite")
    p.add_argument("--config", type=Path, default=None, help="suite config JSON")
    p.add_argument("--scale", choices=("desk", "paper"), default="desk",
                   help="trial counts preset when no config is given")
    p.add_argument("--seed", type=int, default=experiments.DEFAULT_SEED)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default: $RESURP_OUT_DIR or .)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fit", help="correlation report from a records CSV")
    p.add_argument("--records", type=Path, required=True, help="fig3-style records CSV")
    p.add_argument("--out", type=Path, required=True, help="report JSON path")
    p.add_argument("--points", type=Path, default=None, help="optional scatter-points CSV")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
