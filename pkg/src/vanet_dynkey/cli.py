"""Command-line entry point: ``vanet-dynkey run|analytic|attack``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import analytics
from .errors import VanetError

# The harness pulls in scipy; keep it out of the quick subcommands.
EXPERIMENTS = ("E1", "E2", "E3", "E4", "E5", "E6")
SCENARIOS = ("replay", "mitm", "sybil", "masquerade", "masquerade-vehicle")

log = logging.getLogger("vanet_dynkey")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vanet-dynkey", description="Dynamic key distribution and revocation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run one experiment and write CSV and plot data")
    run.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    run.add_argument("--config", help="flat key=value file overriding the experiment presets")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True)
    run.add_argument("--crypto", choices=("mock", "real"))
    run.add_argument("--replications", type=int)

    an = sub.add_parser("analytic", help="closed-form revocation cost")
    an.add_argument("--v", type=float, required=True, help="speed, km/h")
    an.add_argument("--l", type=float, required=True, help="certificate lifetime, s")
    an.add_argument("--d", type=float, required=True, help="RSU spacing, m")
    an.add_argument("--N", type=int, required=True, help="total RSUs")

    at = sub.add_parser("attack", help="run an attack scenario and print its report")
    at.add_argument("--scenario", required=True, choices=SCENARIOS)
    at.add_argument("--replications", type=int, default=1)
    at.add_argument("--seed", type=int, default=0)
    at.add_argument("--crypto", choices=("mock", "real"), default="mock")
    return p


def cmd_run(args: argparse.Namespace) -> int:
    from .harness import emit_results, experiment_configs, load_overrides, run_experiment

    over = load_overrides(args.config)
    # Explicit flags win over the config file; the seed flag also wins over the environment.
    if args.seed is not None:
        over["seed"] = args.seed
    if args.crypto:
        over["crypto"] = args.crypto
    if args.replications is not None:
        over["replications"] = args.replications
    cfgs = experiment_configs(args.experiment, over)
    table = run_experiment(cfgs, progress=log.info)
    for path in emit_results(table, args.out):
        print(path)
    return 0


def cmd_analytic(args: argparse.Namespace) -> int:
    res = analytics.evaluate(analytics.AnalyticParams(args.l, args.v, args.d, args.N))
    print(f"r = {res.r:.2f} m")
    print(f"m = {res.m}")
    print(f"p = {res.p:g} %")
    if res.saturated:
        print("note: m exceeds N, the whole network is covered")
    return 0


def cmd_attack(args: argparse.Namespace) -> int:
    from .adversary import AttackKind, run_suite

    outcomes = run_suite([args.scenario], args.replications, args.seed, args.crypto)[AttackKind(args.scenario)]
    for o in outcomes:
        print(o.report())
        print()
    failed = sum(o.succeeded for o in outcomes)
    print(f"attacks succeeded: {failed}/{len(outcomes)}")
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return {"run": cmd_run, "analytic": cmd_analytic, "attack": cmd_attack}[args.cmd](args)
    except (VanetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
