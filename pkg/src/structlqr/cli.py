"""Command-line front end.

Subcommands: synth (model-based only), learn (full explore/learn pipeline,
optionally from a recorded CSV), simulate (exploration record only), bound
(suboptimality certificate), bench-paper (the bundled 6-agent consensus
benchmark). Verbosity comes from the RSRL_LOG environment variable
(debug/info/warning/error). Error classes map to distinct exit codes.
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import errors as err
from .bounds import bound_report
from .experiment import ExperimentConfig, run_experiment, synth_only, write_report
from .model import RobustnessParams, StructurePattern, SynthesisProblem
from .sim import Trajectory, simulate
from .synthesis import structured_policy_iteration

log = logging.getLogger("structlqr")

EXIT_CODES = {
    err.InvalidProblem: 3,
    err.NotHurwitz: 4,
    err.SingularSystem: 5,
    err.ShapeMismatch: 6,
    err.NotStabilizing: 7,
    err.NoConvergence: 8,
    err.Diverged: 9,
    err.NotSettled: 10,
    err.WindowOutOfRange: 11,
    err.AvailabilityViolated: 12,
    err.RankDeficient: 13,
    err.AsymmetricP: 14,
    err.OperatorSingular: 15,
    err.InvalidEdge: 16,
}
USAGE_EXIT = 2


def _setup_logging():
    level = os.environ.get("RSRL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def bundled_config_path():
    return resources.files("structlqr").joinpath("data/paper-6agent.json")


def _load_config(path, seed=None):
    config = ExperimentConfig.from_json(path)
    if seed is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        raw["seed"] = seed
        config = ExperimentConfig.from_dict(raw)
    return config


def _exit_code(exc):
    for klass, code in EXIT_CODES.items():
        if isinstance(exc, klass):
            return code
    return 1


def _run_many(paths, worker, jobs):
    if len(paths) == 1 or jobs <= 1:
        return [worker(p) for p in paths]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, paths))


def cmd_synth(args):
    def worker(path):
        config = _load_config(path, args.seed)
        out = _out_dir(args, path)
        report = synth_only(config, out_dir=out)
        print(f"{path}: synthesized gain in {report['model_based']['iterations']} "
              f"sweeps, residual {report['model_based']['residual']:.3e}")
        return report
    _run_many(args.config, worker, args.jobs)
    return 0


def cmd_learn(args):
    def worker(path):
        config = _load_config(path, args.seed)
        trajectory = Trajectory.from_csv(args.trajectory) if args.trajectory else None
        out = _out_dir(args, path)
        report = run_experiment(config, out_dir=out, ls_mode=args.mode,
                                trajectory=trajectory)
        print(f"{path}: learned gain in {report['learned']['iterations']} sweeps; "
              f"rel gain gap vs model "
              f"{report['cross_verification']['rel_gain_difference']:.3e}; "
              f"rank {report['rank']['observed']}/{report['rank']['required']}"
              f" (windows {report['rank']['windows']})")
        return report
    _run_many(args.config, worker, args.jobs)
    return 0


def cmd_simulate(args):
    def worker(path):
        config = _load_config(path, args.seed)
        trajectory = simulate(config.system, gain=None,
                              exploration=config.exploration_signal(),
                              exo=config.exo, x0=config.x0,
                              t_end=config.t_explore, dt=config.dt,
                              blowup=config.blowup)
        out = _out_dir(args, path) or "."
        Path(out).mkdir(parents=True, exist_ok=True)
        dest = Path(out) / "trajectory.csv"
        trajectory.to_csv(dest)
        print(f"{path}: wrote {len(trajectory.t)} samples to {dest}")
    _run_many(args.config, worker, args.jobs)
    return 0


def cmd_bound(args):
    def worker(path):
        config = _load_config(path, args.seed)
        base = RobustnessParams(alpha=0.0, beta=0.0, d=0.0)
        problem = SynthesisProblem(system=config.system, pattern=config.pattern,
                                   weights=config.weights, robustness=base)
        struct = structured_policy_iteration(problem, initial_gain=config.initial_gain)
        dense = structured_policy_iteration(SynthesisProblem(
            system=config.system,
            pattern=StructurePattern.dense(*config.pattern.shape),
            weights=config.weights, robustness=base),
            initial_gain=config.initial_gain)
        rep = bound_report(problem, struct.off_pattern, config.x0,
                           structured_p=struct.value_matrix,
                           dense_p=dense.value_matrix)
        payload = rep.to_dict()
        out = _out_dir(args, path)
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            write_report(payload, Path(out) / "bound.json")
        print(json.dumps(payload, indent=2, sort_keys=True))
    _run_many(args.config, worker, args.jobs)
    return 0


def cmd_bench_paper(args):
    args.config = [str(bundled_config_path())]
    args.trajectory = None
    return cmd_learn(args)


def _out_dir(args, config_path):
    if args.out is None:
        return None
    if len(args.config) == 1:
        return args.out
    return str(Path(args.out) / Path(config_path).stem)


def _add_common(parser, config_required=True):
    if config_required:
        parser.add_argument("--config", required=True, action="append",
                            help="experiment config JSON (repeatable)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="run multiple configs concurrently")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="structlqr",
        description="Structured robust LQR synthesis and trajectory-data learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="model-based synthesis only")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("learn", help="full pipeline: explore, learn, verify")
    _add_common(p)
    p.add_argument("--trajectory", default=None,
                   help="recorded trajectory CSV to learn from (skips exploration)")
    p.add_argument("--mode", choices=["paper-faithful", "reduced"], default=None,
                   help="least-squares parametrization override")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("simulate", help="write an exploration trajectory CSV")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="suboptimality certificate for the config")
    _add_common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("bench-paper", help="run the bundled 6-agent benchmark")
    _add_common(p, config_required=False)
    p.add_argument("--mode", choices=["paper-faithful", "reduced"], default=None)
    p.set_defaults(func=cmd_bench_paper)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_EXIT if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except err.StructLqrError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"[{stage}] " if stage else ""
        print(f"error: {prefix}{exc}", file=sys.stderr)
        return _exit_code(exc)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: bad configuration or input: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
