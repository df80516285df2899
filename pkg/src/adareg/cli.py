"""Command-line front end: single solves, parameter sweeps, synthetic scenes.

Exit status: 0 on success, 2 on argument errors, 3 on I/O errors and
4 when a solver diverges or a segmentation region degenerates.

All CSV files start with a ``# adareg <kind> v1`` comment line followed by
a fixed header row. Outputs are bitwise reproducible for fixed flags and
seeds; wall-clock times are only recorded with ``--wall-time``.
"""

from __future__ import annotations

import argparse
import csv
import enum
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import __version__
from .admm import DivergenceError, SolverConfig
from .denoise import denoise
from .flow import PyramidConfig, angular_error, endpoint_error, flow_pyramid
from .imgio import (FlowFormatError, ImageFormatError, flow_to_color, read_flo, read_image,
                    write_color_image, write_flo, write_image)
from .metrics import psnr, ssim
from .segment import DegenerateRegionError, f_measure, segment
from .synth import (BiasedNoiseSpec, NoiseProfile, PhantomShape, add_biased_noise,
                    make_piecewise_image, make_texture, make_translation_pair,
                    make_two_level_phantom, make_two_motion_pair)
from .weights import AdaptiveWeightConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SOLVER = 4

TRACE_HEADER = ("iter", "energy", "primal_res", "dual_res", "lambda_mean", "lambda_std")
RESULT_HEADER = ("task", "parameter", "value", "metric", "metric_value", "iterations", "wall_time")

TASK_METRICS = {
    "denoise": ("psnr", "ssim"),
    "segment": ("f",),
    "flow": ("ae", "ee"),
}
SCENES = ("biased", "disk", "blob", "translation", "two-motion")


class UsageError(Exception):
    pass


class SweepAxis(enum.Enum):
    STATIC_LAMBDA = "lambda"
    ADAPTIVE_BETA = "beta"


@dataclass(frozen=True)
class SweepSpec:
    axis: SweepAxis
    values: tuple
    metrics: tuple
    out_dir: str

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if any(not v > 0 for v in self.values):
            raise ValueError("sweep values must be positive")
        if self.axis is SweepAxis.STATIC_LAMBDA and any(v >= 1 for v in self.values):
            raise ValueError("static lambda values must lie in (0, 1)")


class RunRecord(NamedTuple):
    task: str
    parameter: str
    value: float
    metric: str
    metric_value: float
    iterations: int
    wall_time: float | None = None


def fmt(x):
    """Stable text form of a number for CSV and console output."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        fh.write("# adareg trace v1\n")
        w = _csv_writer(fh)
        w.writerow(TRACE_HEADER)
        for row in trace.rows():
            w.writerow([fmt(v) for v in row])


def write_results_csv(path, records, wall_time=False):
    with open(path, "w", newline="") as fh:
        fh.write("# adareg results v1\n")
        w = _csv_writer(fh)
        w.writerow(RESULT_HEADER)
        for r in records:
            w.writerow([r.task, r.parameter, fmt(r.value), r.metric, fmt(r.metric_value),
                        fmt(r.iterations), fmt(r.wall_time) if wall_time else ""])


# -- shared option handling -------------------------------------------------

def _weight_options(p, epsilon_default):
    g = p.add_argument_group("regularization weight")
    g.add_argument("--mode", choices=("static", "adaptive"), default="adaptive")
    g.add_argument("--lambda", dest="lam", type=float, help="static weight in (0, 1)")
    g.add_argument("--beta", type=float, default=1.0, help="adaptive residual scale")
    g.add_argument("--epsilon", type=float, default=epsilon_default,
                   help="weight floor; 0 selects the unsmoothed weight "
                        f"(default {epsilon_default})")
    g.add_argument("--kernel-sigma", type=float, default=1.0,
                   help="Gaussian smoothing of the residual when epsilon > 0")


def _solver_options(p, max_iters=300):
    g = p.add_argument_group("solver")
    g.add_argument("--mu", type=float, default=1.0)
    g.add_argument("--tau", type=float, default=8.0)
    g.add_argument("--max-iters", type=int, default=max_iters)
    g.add_argument("--tol", type=float, default=1e-5, help="relative-change stopping tolerance")
    g.add_argument("--trace", metavar="CSV", help="write the per-iteration trace here")


def _pyramid_options(p):
    g = p.add_argument_group("pyramid")
    g.add_argument("--levels", type=int, help="pyramid levels (default: from image size)")
    g.add_argument("--scale", type=float, default=0.5)
    g.add_argument("--warps", type=int, default=5, help="warps per level")
    g.add_argument("--inner-iters", type=int, default=100, help="ADMM iterations per warp")


def weight_config(mode, lam, beta, epsilon, kernel_sigma):
    """Return ``(wcfg, static_lambda)`` for the chosen weighting mode."""
    if mode == "static":
        if lam is None:
            raise UsageError("--mode static requires --lambda")
        if not 0.0 < lam < 1.0:
            raise UsageError(f"--lambda must lie in (0, 1), got {lam}")
        return None, lam
    if not beta > 0:
        raise UsageError(f"--beta must be positive, got {beta}")
    if not 0.0 <= epsilon < 1.0:
        raise UsageError(f"--epsilon must lie in [0, 1), got {epsilon}")
    if epsilon == 0.0:
        return AdaptiveWeightConfig.plain(beta), None
    if not kernel_sigma > 0:
        raise UsageError(f"--kernel-sigma must be positive, got {kernel_sigma}")
    return AdaptiveWeightConfig.smoothed(beta, epsilon, kernel_sigma), None


def solver_config(args, max_iters=None):
    try:
        return SolverConfig(mu=args.mu, tau=args.tau,
                            max_iters=max_iters if max_iters is not None else args.max_iters,
                            tol_rel_change=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def pyramid_config(args):
    try:
        return PyramidConfig(levels=args.levels, scale=args.scale,
                             warps_per_level=args.warps, inner_iters=args.inner_iters)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# -- synthetic scenes -------------------------------------------------------

def _parse_pair(text, name):
    try:
        a, b = (float(t) for t in str(text).split(","))
    except ValueError:
        raise UsageError(f"{name} must be two comma-separated numbers, got {text!r}") from None
    return a, b


def build_scene(kind, width, height, seed, sigma_max, profile, shift="2,1"):
    """Arrays of a named synthetic scene, keyed by role.

    Noisy scenes hold ``clean`` and ``noisy`` (plus ``mask`` for the
    phantoms). Motion scenes hold ``frame0``, ``frame1`` and ``flow``.
    """
    if width < 8 or height < 8:
        raise UsageError("scene size must be at least 8x8")
    if kind in ("biased", "disk", "blob"):
        if kind == "biased":
            clean, mask = make_piecewise_image(width, height), None
        else:
            ph = make_two_level_phantom(width, height, shape=PhantomShape(kind))
            clean, mask = ph.clean, ph.truth_mask
        noisy = add_biased_noise(clean, BiasedNoiseSpec(sigma_max, NoiseProfile(profile), seed))
        out = {"clean": clean, "noisy": noisy}
        if mask is not None:
            out["mask"] = mask
        return out
    base = make_texture(width, height, seed)
    if kind == "translation":
        sc = make_translation_pair(base, _parse_pair(shift, "--shift"))
    elif kind == "two-motion":
        yy, xx = np.mgrid[0:height, 0:width]
        r = 0.22 * min(width, height)
        mask = (yy - (height - 1) / 2.0) ** 2 + (xx - (width - 1) / 2.0) ** 2 <= r * r
        sc = make_two_motion_pair(base, mask, (1.5, -1.0), (-1.0, 0.5))
    else:
        raise UsageError(f"unknown scene {kind!r}")
    return {"frame0": sc.clean, "frame1": sc.noisy, "flow": sc.truth_flow}


def _scene_options(p):
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-max", type=float, default=0.4)
    p.add_argument("--profile", choices=[e.value for e in NoiseProfile], default="halfplane")
    p.add_argument("--shift", default="2,1", help="translation 'tx,ty' in pixels")


# -- commands ---------------------------------------------------------------

def cmd_denoise(args):
    f = read_image(args.input)
    wcfg, lam = weight_config(args.mode, args.lam, args.beta, args.epsilon, args.kernel_sigma)
    u, trace = denoise(f, wcfg, solver_config(args), static_lambda=lam)
    write_image(args.output, u)
    if args.trace:
        write_trace_csv(args.trace, trace)
    if args.reference:
        ref = read_image(args.reference)
        if ref.shape != u.shape:
            raise UsageError("reference and input sizes differ")
        print(f"psnr={fmt(psnr(u, ref))} ssim={fmt(ssim(u, ref))}")
    return EXIT_OK


def cmd_segment(args):
    f = read_image(args.input)
    wcfg, lam = weight_config(args.mode, args.lam, args.beta, args.epsilon, args.kernel_sigma)
    res = segment(f, wcfg, solver_config(args), theta=args.theta, static_lambda=lam)
    write_image(args.output, res.mask.astype(np.float64))
    if args.trace:
        write_trace_csv(args.trace, res.trace)
    for w in res.trace.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.truth:
        truth = read_image(args.truth) > 0.5
        if truth.shape != f.shape:
            raise UsageError("truth mask and input sizes differ")
        print(f"f={fmt(f_measure(res.mask, truth))}")
    return EXIT_OK


def cmd_flow(args):
    I0, I1 = read_image(args.frame0), read_image(args.frame1)
    if I0.shape != I1.shape:
        raise UsageError("frames differ in size")
    wcfg, lam = weight_config(args.mode, args.lam, args.beta, args.epsilon, args.kernel_sigma)
    start = time.perf_counter()
    flow, trace = flow_pyramid(I0, I1, wcfg, solver_config(args, max_iters=args.inner_iters),
                               pyramid_config(args), static_lambda=lam)
    elapsed = time.perf_counter() - start
    write_flo(args.output, flow)
    if args.trace:
        write_trace_csv(args.trace, trace)
    if args.color:
        write_color_image(args.color, flow_to_color(flow))
    if args.gt_flo:
        gt = read_flo(args.gt_flo)
        if gt.shape != flow.shape:
            raise UsageError("ground-truth flow and frame sizes differ")
        ae, ee = angular_error(flow, gt), endpoint_error(flow, gt)
        print(f"ae={fmt(ae)} ee={fmt(ee)}")
        if args.metrics_csv:
            param, value = ("lambda", lam) if lam is not None else ("beta", args.beta)
            wt = elapsed if args.wall_time else None
            recs = [RunRecord("flow", param, value, "ae", ae, len(trace), wt),
                    RunRecord("flow", param, value, "ee", ee, len(trace), wt)]
            write_results_csv(args.metrics_csv, recs, args.wall_time)
    elif args.metrics_csv:
        raise UsageError("--metrics-csv requires --gt-flo")
    return EXIT_OK


def cmd_synth(args):
    scene = build_scene(args.scene, args.width, args.height, args.seed, args.sigma_max,
                        args.profile, args.shift)
    os.makedirs(args.out_dir, exist_ok=True)
    names = {"clean": "clean.pgm", "noisy": "noisy.pgm", "mask": "mask.pgm",
             "frame0": "frame0.pgm", "frame1": "frame1.pgm", "flow": "truth.flo"}
    for key in sorted(scene):
        path = os.path.join(args.out_dir, names[key])
        if key == "flow":
            write_flo(path, scene[key])
        else:
            write_image(path, scene[key].astype(np.float64))
        print(path)
    return EXIT_OK


# -- sweeps -----------------------------------------------------------------

def _run_one(job):
    """Solve one sweep point; returns its RunRecords (runs in a worker)."""
    task, axis, value, data, params, metrics = job
    if axis is SweepAxis.STATIC_LAMBDA:
        wcfg, lam = None, value
    else:
        wcfg, lam = weight_config("adaptive", None, value, params["epsilon"],
                                  params["kernel_sigma"])
    scfg = params["solver"]
    start = time.perf_counter()
    if task == "denoise":
        u, trace = denoise(data["noisy"], wcfg, scfg, static_lambda=lam)
        values = {"psnr": lambda: psnr(u, data["clean"]), "ssim": lambda: ssim(u, data["clean"])}
    elif task == "segment":
        res = segment(data["noisy"], wcfg, scfg, static_lambda=lam)
        trace = res.trace
        values = {"f": lambda: f_measure(res.mask, data["mask"])}
    else:
        flow, trace = flow_pyramid(data["frame0"], data["frame1"], wcfg, scfg, params["pyramid"],
                                   static_lambda=lam)
        values = {"ae": lambda: angular_error(flow, data["flow"]),
                  "ee": lambda: endpoint_error(flow, data["flow"])}
    elapsed = time.perf_counter() - start
    return [RunRecord(task, axis.value, value, m, values[m](), len(trace), elapsed)
            for m in metrics]


def _parse_values(text, name):
    if text is None or str(text).strip() == "":
        return ()
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of numbers") from None


def _sweep_data(args):
    if args.scene:
        scene = build_scene(args.scene, args.width, args.height, args.seed, args.sigma_max,
                            args.profile, args.shift)
        if args.task == "denoise":
            return {"noisy": scene.get("noisy"), "clean": scene.get("clean")}
        if args.task == "segment":
            if "mask" not in scene:
                raise UsageError(f"scene {args.scene!r} has no ground-truth mask")
            return {"noisy": scene["noisy"], "mask": scene["mask"]}
        if "flow" not in scene:
            raise UsageError(f"scene {args.scene!r} is not a motion scene")
        return scene
    if args.task == "flow":
        if not (args.frame0 and args.frame1 and args.gt_flo):
            raise UsageError("flow sweep needs --scene or --frame0, --frame1 and --gt-flo")
        return {"frame0": read_image(args.frame0), "frame1": read_image(args.frame1),
                "flow": read_flo(args.gt_flo)}
    if not (args.input and args.reference):
        raise UsageError(f"{args.task} sweep needs --scene or --input and --reference")
    f, ref = read_image(args.input), read_image(args.reference)
    if args.task == "denoise":
        return {"noisy": f, "clean": ref}
    return {"noisy": f, "mask": ref > 0.5}


def cmd_sweep(args):
    metrics = tuple(m.strip().lower() for m in args.metrics.split(",")) if args.metrics \
        else TASK_METRICS[args.task]
    bad = [m for m in metrics if m not in TASK_METRICS[args.task]]
    if bad:
        raise UsageError(f"metrics {bad} do not apply to task {args.task!r}")
    specs = []
    try:
        for axis, text in ((SweepAxis.STATIC_LAMBDA, args.static),
                           (SweepAxis.ADAPTIVE_BETA, args.adaptive)):
            values = _parse_values(text, "--" + ("static" if axis is SweepAxis.STATIC_LAMBDA
                                                 else "adaptive"))
            if values:
                specs.append(SweepSpec(axis, values, metrics, args.out_dir))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not specs:
        raise UsageError("nothing to sweep: give --static and/or --adaptive values")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    weight_config("adaptive", None, 1.0, args.epsilon, args.kernel_sigma)  # validate early

    data = _sweep_data(args)
    max_iters = args.inner_iters if args.task == "flow" else args.max_iters
    params = {"solver": solver_config(args, max_iters=max_iters), "epsilon": args.epsilon,
              "kernel_sigma": args.kernel_sigma,
              "pyramid": pyramid_config(args) if args.task == "flow" else None}
    jobs = [(args.task, s.axis, v, data, params, metrics) for s in specs for v in s.values]
    if args.jobs == 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            # map yields in submission order whatever the completion order
            results = list(ex.map(_run_one, jobs))
    records = [r for rs in results for r in rs]

    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "results.csv")
    write_results_csv(path, records, args.wall_time)
    for r in records:
        print(f"{r.task} {r.parameter}={fmt(r.value)} {r.metric}={fmt(r.metric_value)}")
    print(path)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def read_config_file(path):
    """Parse flat ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="adareg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="TV denoising of one image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--reference", help="clean image; prints psnr and ssim")
    _weight_options(p, epsilon_default=0.1)
    _solver_options(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("segment", help="two-phase segmentation of one image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="binary mask image")
    p.add_argument("--truth", help="ground-truth mask; prints the F-measure")
    p.add_argument("--theta", type=float, default=0.5)
    _weight_options(p, epsilon_default=0.1)
    _solver_options(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("flow", help="TV-L1 optical flow between two frames")
    p.add_argument("--frame0", required=True)
    p.add_argument("--frame1", required=True)
    p.add_argument("--output", required=True, help=".flo file")
    p.add_argument("--gt-flo", help="ground-truth flow; prints ae and ee")
    p.add_argument("--color", help="write a color-coded flow PNG")
    p.add_argument("--metrics-csv", help="write ae/ee result rows")
    p.add_argument("--wall-time", action="store_true", help="record wall time in --metrics-csv")
    _weight_options(p, epsilon_default=0.0)
    _solver_options(p)
    _pyramid_options(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("sweep", help="static and adaptive parameter sweeps")
    p.add_argument("--config", help="flat key=value file supplying defaults for these flags")
    p.add_argument("--task", choices=tuple(TASK_METRICS), default="denoise")
    p.add_argument("--static", help="comma-separated static lambda values")
    p.add_argument("--adaptive", help="comma-separated beta values")
    p.add_argument("--metrics", help="comma-separated subset of psnr,ssim,f,ae,ee")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--wall-time", action="store_true", help="record wall time in results.csv")
    p.add_argument("--scene", choices=SCENES)
    p.add_argument("--input")
    p.add_argument("--reference", help="clean image (denoise) or truth mask (segment)")
    p.add_argument("--frame0")
    p.add_argument("--frame1")
    p.add_argument("--gt-flo")
    _scene_options(p)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--kernel-sigma", type=float, default=1.0)
    _solver_options(p)
    _pyramid_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic scene")
    p.add_argument("--scene", choices=SCENES, default="disk")
    p.add_argument("--out-dir", required=True)
    _scene_options(p)
    p.set_defaults(func=cmd_synth)
    parser.subcommands = sub.choices
    return parser


def _apply_config(parser, argv):
    """Let ``sweep --config FILE`` supply defaults that flags then override."""
    if not argv or argv[0] != "sweep":
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return
    sweep = parser.subcommands["sweep"]
    dests = {a.dest: a for a in sweep._actions}
    defaults = {}
    for key, text in read_config_file(known.config).items():
        action = dests.get(key)
        if action is None or key in ("config", "help", "func"):
            raise UsageError(f"{known.config}: unknown key {key!r}")
        if action.const is True:  # store_true flags
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(text) if action.type else text
            if action.choices is not None and defaults[key] not in action.choices:
                raise UsageError(f"{known.config}: invalid value for {key!r}: {text!r}")
    sweep.set_defaults(**defaults)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse reports usage errors this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"adareg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ImageFormatError, FlowFormatError) as exc:
        print(f"adareg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DivergenceError, DegenerateRegionError) as exc:
        print(f"adareg: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"adareg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
