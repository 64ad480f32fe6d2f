"""Command-line entry point: ``rankreg {register,benchmark,generate}``.

Exit codes: 0 converged / success, 2 best-effort (not converged), 1 error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, io, solver
from .errors import BadSpec, InsufficientInliers, ParseError, RegistrationError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BEST_EFFORT = 2

log = logging.getLogger("rankreg")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_ERROR; 2 is reserved for best-effort results."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _ratios(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None


def _solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--scale", type=_positive(float), default=None,
                   help="known relative scale; switches to the known-scale solver")
    g.add_argument("--epsilon", type=_positive(float), default=0.1)
    g.add_argument("--inlier-threshold", type=_positive(float), default=0.05,
                   help="inlier residual bound in b-frame units (5x the benchmark noise)")
    g.add_argument("--batch", type=_positive(int), default=1000)
    g.add_argument("--max-hypotheses", type=_positive(int), default=None)
    g.add_argument("--time-budget", type=_positive(float), default=None, help="seconds")
    g.add_argument("--sampling", choices=("ordered", "random"), default="ordered")


def _scene_flags(p, ratio_flag):
    g = p.add_argument_group("scene")
    g.add_argument("--n", type=_positive(int), default=1000)
    g.add_argument("--sigma", type=float, default=0.01)
    if ratio_flag:
        g.add_argument("--outlier-ratio", type=float, default=0.0)
    g.add_argument("--scale-range", type=_positive(float), nargs=2, default=(1.0, 5.0),
                   metavar=("LO", "HI"))
    g.add_argument("--points", type=Path, default=None,
                   help="external x y z point file used instead of a random cube cloud")
    g.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="register one correspondence file")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, default=None, help="JSON result path")
    p.add_argument("--seed", type=int, default=0, help="seed for --sampling random")
    _solver_flags(p)

    p = sub.add_parser("benchmark", help="Monte-Carlo sweep over outlier ratios")
    _solver_flags(p)
    _scene_flags(p, ratio_flag=False)
    p.add_argument("--ratios", type=_ratios, default=list(bench.DEFAULT_RATIOS))
    p.add_argument("--trials", type=_positive(int), default=10)
    p.add_argument("--jobs", type=_positive(int), default=1)
    p.add_argument("--output", type=Path, default=Path("results.csv"))
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock times (makes the CSV non-reproducible)")

    p = sub.add_parser("generate", help="write a synthetic correspondence file")
    _scene_flags(p, ratio_flag=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--gt-output", type=Path, default=None,
                   help="ground-truth JSON (default: <output>.gt.json)")
    return parser


def _config(args, seed=0) -> solver.SolverConfig:
    return solver.SolverConfig(
        epsilon=args.epsilon,
        inlier_threshold=args.inlier_threshold,
        batch=args.batch,
        max_hypotheses=args.max_hypotheses,
        time_budget=args.time_budget,
        sampling_mode=args.sampling,
        seed=seed,
    )


def _scene_template(args, ratio=0.0) -> bench.SceneSpec:
    points = io.read_points(args.points) if args.points is not None else None
    scale_range = (args.scale, args.scale) if getattr(args, "scale", None) else tuple(args.scale_range)
    return bench.SceneSpec(n=args.n, outlier_ratio=ratio, noise_sigma=args.sigma,
                           scale_range=scale_range, seed=args.seed, points=points)


def cmd_register(args) -> int:
    corr = io.read_correspondences(args.input)
    cfg = _config(args, seed=args.seed)
    try:
        res = solver.register(corr, cfg, s=args.scale)
    except InsufficientInliers as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    T = res.transform
    status = "converged" if res.converged else "NOT converged (best effort)"
    print(f"correspondences : {corr.n}")
    print(f"status          : {status}")
    print(f"scale           : {T.s:.10g}")
    with np.printoptions(precision=8, suppress=True):
        print(f"rotation        :\n{T.R}")
        print(f"translation     : {T.t}")
    print(f"inliers         : {len(res.inliers)}")
    print(f"hypotheses      : {res.hypotheses_tested} tested, "
          f"{res.prescreen_rejections} prescreened out, {res.samples_drawn} drawn")
    print(f"elapsed         : {res.elapsed:.3f} s")
    if args.output is not None:
        io.write_json(args.output, io.result_to_dict(res))
    return EXIT_OK if res.converged else EXIT_BEST_EFFORT


def cmd_benchmark(args) -> int:
    template = _scene_template(args)
    for r in args.ratios:
        replace(template, outlier_ratio=r).validate()
    cfg = _config(args)
    known = args.scale is not None
    records = bench.run_trials(template, args.ratios, args.trials, cfg,
                               known_scale=known, base_seed=args.seed, jobs=args.jobs)
    bench.write_records_csv(args.output, records, timing=args.timing)
    summary = bench.aggregate(records)
    summary_path = args.output.with_name(args.output.stem + "_summary.csv")
    summary_path.write_text(bench.summary_to_csv(summary), encoding="utf-8")
    print(f"{'known' if known else 'unknown'}-scale, {args.sampling} sampling, "
          f"n={args.n}, sigma={args.sigma}, {args.trials} trials per ratio")
    print(bench.format_table(summary, timing=args.timing))
    print(f"records: {args.output}\nsummary: {summary_path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = _scene_template(args, ratio=args.outlier_ratio)
    corr, gt = bench.generate_scene(spec)
    io.write_correspondences(args.output, corr,
                             header=f"n={spec.n} outlier_ratio={spec.outlier_ratio} "
                                    f"sigma={spec.noise_sigma} seed={spec.seed}")
    gt_path = args.gt_output or args.output.with_name(args.output.name + ".gt.json")
    io.write_json(gt_path, io.ground_truth_to_dict(gt))
    print(f"wrote {corr.n} correspondences ({len(gt.inliers)} inliers) to {args.output}")
    print(f"ground truth: {gt_path}")
    return EXIT_OK


COMMANDS = {"register": cmd_register, "benchmark": cmd_benchmark, "generate": cmd_generate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, BadSpec, RegistrationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
