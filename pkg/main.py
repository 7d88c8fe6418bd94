#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
نقطه ورود خط فرمان

    python main.py run configs/fermi_chain_6.yaml --oracle krylov
    python main.py verify configs/fermi_chain_6.yaml
    python main.py convert-mps state_mps.npz state_qgn.npz
    python main.py benchmark configs/fermi_chain_10.yaml --chis 4 8 16 32
"""

import argparse
import sys

from threadpoolctl import threadpool_limits

import config
from core.error_handler import ConfigError, QGNError, error_handler
from utils.logger import setup_logger


def _add_experiment_flags(parser: argparse.ArgumentParser):
    parser.add_argument("config", help="experiment YAML file")
    parser.add_argument("--dt", type=float, help="time step")
    parser.add_argument("--chi", type=int, help="target minimum bond dimension")
    parser.add_argument("--time", type=float, help="total evolution time T")
    parser.add_argument("--oracle", choices=config.ORACLE_MODES, help="oracle mode")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgn", description=f"{config.PROJECT_TITLE} v{config.VERSION}")
    parser.add_argument("--threads", type=int, help="worker threads (env QGN_THREADS)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_experiment_flags(sub.add_parser("run", help="evolve a quench and compare against an oracle"))
    _add_experiment_flags(sub.add_parser("verify", help="run the invariant suite"))

    convert = sub.add_parser("convert-mps", help="convert an MPS container into a QGN container")
    convert.add_argument("input")
    convert.add_argument("output")
    convert.add_argument("--path-style", default="snake", choices=config.PATH_STYLES)

    bench = sub.add_parser("benchmark", help="seconds per RK step against chi")
    bench.add_argument("config")
    bench.add_argument("--chis", type=int, nargs="+", default=[4, 8, 16, 32])
    bench.add_argument("--steps", type=int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    return parser


def _overrides(args) -> dict:
    return {key: getattr(args, key, None) for key in ("dt", "chi", "time", "oracle", "out", "seed", "threads")}


def cmd_run(args) -> int:
    from harness.experiment import load_experiment
    from harness.runner import run

    cfg = load_experiment(args.config, _overrides(args))
    with threadpool_limits(limits=cfg.threads):
        result = run(cfg)
    report = result.report
    print(f"✅ {cfg.name}: worst error {report.worst_error:.3e}, energy drift {report.energy_drift:.3e}, "
          f"outputs in {result.output}")
    return 0


def cmd_verify(args) -> int:
    from harness.experiment import load_experiment
    from harness.verifier import verify

    cfg = load_experiment(args.config, _overrides(args))
    with threadpool_limits(limits=cfg.threads):
        report = verify(cfg)
    for check in report.checks:
        marker = "✅" if check.passed else "❌"
        print(f"{marker} {check.name:22s} {check.detail}")
    return report.exit_code


def cmd_convert_mps(args) -> int:
    from harness.runner import convert_mps

    chis = convert_mps(args.input, args.output, path_style=args.path_style)
    for site, chi in enumerate(chis):
        print(f"site {site}: chi = {chi}")
    return 0


def cmd_benchmark(args) -> int:
    from core.lattice import build_nn_patch_graph
    from harness.benchmark import benchmark_step_scaling
    from harness.experiment import load_experiment

    cfg = load_experiment(args.config, {'threads': args.threads})
    graph = build_nn_patch_graph(cfg.lattice())
    with threadpool_limits(limits=cfg.threads):
        result = benchmark_step_scaling(graph, args.chis, steps=args.steps, seed=args.seed,
                                        n_jobs=cfg.threads)
    for chi, seconds in zip(result.chis, result.seconds_per_step):
        print(f"chi={chi:4d}  {seconds:.4f}s/step")
    print(f"📊 fitted exponent: {result.exponent:.2f}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "verify": cmd_verify,
    "convert-mps": cmd_convert_mps,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger("", log_level=args.log_level, file_stem="qgn")

    try:
        return COMMANDS[args.command](args)
    except QGNError as e:
        info = error_handler.handle_error(e, {'command': args.command})
        if info.get('hint'):
            print(f"💡 {info['hint']}", file=sys.stderr)
        return 2 if isinstance(e, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())
