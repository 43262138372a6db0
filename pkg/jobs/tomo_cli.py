"""Main entry point for the dyntomo command-line jobs.

Command-line Usage:
-----------------

1. Simulate an instance:
   python run.py simulate --motion straight-line --n 4 --t 3 --seed 7 --out inst.json --truth truth.json

   Options:
     --motion KIND           : static, straight-line, polynomial, affine-field, crossing, adversarial
     --known-frames LIST     : comma-separated frames whose positions are revealed (default 0)

2. X-rays of point sets:
   python run.py xray points.json --out inst.json

3. Reconstruct every frame from its two X-rays:
   python run.py reconstruct inst.json --out frames.json

   Options:
     --count                 : also count every realization (exponential)
     --enum-bound N          : largest grid the counting oracle enumerates

4. Track particles:
   python run.py track inst.json --algo ilp --out tracks.json [--plot tracks.html]

   Options:
     --algo NAME             : markov, ilp, rolling, pathfit, tomofit, tomopathfit, twoway, displace
     --k N                   : sample size for the fitting heuristics, history length for rolling
     --norm SPEC             : euclid2, max or p:<int>
     --weight-variant NAME   : maxmin, sumsq or avgbest:<m>
     --budget N              : branch-and-bound node budget (overrides DYNTOMO_NODE_BUDGET)
     --max-rounds N          : round cap for two-way fitting
     --speed-bound Q         : nonnegative rational speed bound for two-way fitting

5. Window constraints:
   python run.py windows inst.json [--algo ilp] --out out.json

6. Evaluate against ground truth:
   python run.py eval tracks.json truth.json [--oracle ilp.json] --out report.json

7. Plot:
   python run.py plot inst.json [--tracks tracks.json] --out plot.svg

Exit codes: 0 success, 1 infeasible, 2 input error, 3 budget exhausted.
"""

import argparse
import logging
import time
from fractions import Fraction

from dyntomo import fitting, get_config, static, tracking, windows
from dyntomo.errors import BudgetExhaustedError, InfeasibleError, InputError, InstanceFormatError
from dyntomo.geometry import COORDINATE_DIRECTIONS, LatticeDirection
from dyntomo.models import TomographyInstance
from dyntomo.norms import NormSpec
from jobs.evaluate import evaluate
from jobs.instance_io import (load_instance, load_tracks, parse_point, read_json, save_instance,
                              save_tracks, to_jsonable, write_json)
from jobs.jobs_config import (ALGORITHMS, DEFAULT_BOX, EXIT_BUDGET, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK,
                              MOTIONS, setup_logging)
from jobs.plotting import build_figure, write_figure
from jobs.simulate import Scenario, generate

logger = logging.getLogger(__name__)

WINDOWED_ALGORITHMS = windows.WINDOWED_ALGORITHMS


def _frame_list(text):
    if text is None or text.strip() == "":
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--known-frames expects a comma-separated list of integers, got {text!r}")


def _speed_bound(text):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational such as 3/2, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Dynamic discrete tomography: reconstruction and particle tracking")
    parser.add_argument("--log-level", help="Logging level (defaults to DYNTOMO_LOG_LEVEL)")
    parser.add_argument("--workers", type=int, help="Worker threads for per-frame work")
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    sim = subparsers.add_parser("simulate", help="Generate a seeded instance and its ground truth")
    sim.add_argument("--motion", choices=MOTIONS, default="straight-line")
    sim.add_argument("--n", type=int, default=3, help="Number of particles")
    sim.add_argument("--t", type=int, default=3, help="Number of frames")
    sim.add_argument("--box", type=int, default=DEFAULT_BOX, help="Half-width of the position box")
    sim.add_argument("--degree", type=int, default=2, help="Degree for polynomial motion")
    sim.add_argument("--speed", type=int, default=2, help="Largest velocity component")
    sim.add_argument("--seed", type=int, default=0, help="Random seed (unsigned 64-bit)")
    sim.add_argument("--known-frames", default="0", help="Comma-separated frames to reveal")
    sim.add_argument("--out", required=True, help="Instance file to write")
    sim.add_argument("--truth", help="Ground-truth track file to write")
    sim.add_argument("--plot", help="Plot file (.html or .svg)")

    xr = subparsers.add_parser("xray", help="Compute the X-rays of point sets")
    xr.add_argument("points", help="JSON file with 'frames' (point lists) and optional 'directions'")
    xr.add_argument("--known-frames", default="", help="Comma-separated frames to reveal")
    xr.add_argument("--out", required=True)

    rec = subparsers.add_parser("reconstruct", help="Reconstruct each frame from its X-rays")
    rec.add_argument("instance")
    rec.add_argument("--count", action="store_true", help="Also count all realizations (exponential)")
    rec.add_argument("--enum-bound", type=int, help="Largest grid the counting oracle enumerates")
    rec.add_argument("--out", help="Frames file to write")

    trk = subparsers.add_parser("track", help="Reconstruct frames and couple them into tracks")
    trk.add_argument("instance")
    trk.add_argument("--algo", choices=ALGORITHMS, default="ilp")
    trk.add_argument("--k", type=int, help="Sample size (fitting) or history length (rolling)")
    trk.add_argument("--norm", default=None, help="euclid2, max or p:<int>")
    trk.add_argument("--weight-variant", default="maxmin", help="maxmin, sumsq or avgbest:<m>")
    trk.add_argument("--speed-bound", type=_speed_bound, help="Speed bound for two-way fitting, in step lengths")
    trk.add_argument("--max-rounds", type=int, help="Round cap for two-way fitting")
    trk.add_argument("--budget", type=int, help="Branch-and-bound node budget")
    trk.add_argument("--out", help="Track file to write")
    trk.add_argument("--plot", help="Plot file (.html or .svg)")

    win = subparsers.add_parser("windows", help="Classify and solve window-constrained frames")
    win.add_argument("instance")
    win.add_argument("--algo", choices=WINDOWED_ALGORITHMS, help="Also track with this algorithm")
    win.add_argument("--budget", type=int, help="Branch-and-bound node budget")
    win.add_argument("--out", help="Result file to write")

    ev = subparsers.add_parser("eval", help="Score a track file against ground truth")
    ev.add_argument("result")
    ev.add_argument("truth")
    ev.add_argument("--oracle", help="Track file of an exact solver for the objective gap")
    ev.add_argument("--timings", action="store_true", help="Include load runtimes in the report")
    ev.add_argument("--out", help="Report file (.json or .csv)")

    pl = subparsers.add_parser("plot", help="Plot an instance and optional tracks")
    pl.add_argument("instance")
    pl.add_argument("--tracks", help="Track file to overlay")
    pl.add_argument("--out", required=True, help="Plot file (.html or .svg)")
    return parser


def run_algorithm(instance: TomographyInstance, algo: str, k=None, norm=None, variant="maxmin",
                  budget=None, workers=1, speed_bound=None, max_rounds=None):
    """Dispatch one tracking algorithm; windowed instances go through windowed_tracking."""
    norm = NormSpec.parse(norm) if norm else instance.weights.norm
    variant = fitting.WeightVariant.parse(variant)
    family = fitting.SampleFitFamily(k or 2)
    if instance.windows and algo in WINDOWED_ALGORITHMS:
        options = {}
        if algo in ("tomofit", "tomopathfit"):
            options = {"family": family, "norm": norm, "variant": variant}
        elif algo == "rolling":
            options = {"norm": norm}
        return windows.windowed_tracking(instance, algo, workers, budget, **options)
    if algo == "markov":
        return tracking.trac_markov(instance, workers)
    if algo == "ilp":
        return tracking.tomtrac_ilp(instance, node_budget=budget)
    if algo == "rolling":
        if k and k > 1:
            return fitting.k_rolling_horizon(instance, k, norm)
        return tracking.rolling_horizon(instance, norm, workers)
    if algo == "pathfit":
        return fitting.path_fitting(instance, family, norm, variant=variant)
    if algo == "tomofit":
        return fitting.tomographic_fitting(instance, family, norm, variant)
    if algo == "tomopathfit":
        return fitting.tomographic_path_fitting(instance, family, norm, variant)
    if algo == "twoway":
        return fitting.two_way_fitting(instance, norm, speed_bound=speed_bound, max_rounds=max_rounds)
    if algo == "displace":
        return tracking.tomdisplacetrac(instance, node_budget=budget)
    raise InputError(f"unknown algorithm {algo!r}")


def _simulate(args):
    scenario = Scenario(n=args.n, t=args.t, motion=args.motion, box=args.box, seed=args.seed,
                        degree=args.degree, speed=args.speed, known_frames=_frame_list(args.known_frames))
    instance, truth = generate(scenario)
    save_instance(args.out, instance)
    print(f"💾 Instance written to {args.out}")
    if args.truth:
        save_tracks(args.truth, truth)
        print(f"💾 Ground truth written to {args.truth}")
    if args.plot:
        write_figure(build_figure(instance, truth, title=f"{scenario.motion} scenario, seed {scenario.seed}"), args.plot)


def _xray(args):
    doc = read_json(args.points)
    if not isinstance(doc, dict):
        raise InstanceFormatError("point file must be a JSON object", path=args.points)
    raw_dirs = doc.get("directions")
    try:
        directions = tuple(LatticeDirection(tuple(v)) for v in raw_dirs) if raw_dirs else COORDINATE_DIRECTIONS
    except (TypeError, InputError) as e:
        raise InstanceFormatError(str(e), field="directions", path=args.points)
    raw_frames = doc.get("frames")
    if not isinstance(raw_frames, list):
        raise InstanceFormatError("missing list of point sets", field="frames", path=args.points)
    if not all(isinstance(pts, list) for pts in raw_frames):
        raise InstanceFormatError("each frame must be a list of points", field="frames", path=args.points)
    frames = [[parse_point(p, f"frames[{tau}][{m}]") for m, p in enumerate(pts)] for tau, pts in enumerate(raw_frames)]
    instance = TomographyInstance.from_point_sets(frames, directions, known=list(_frame_list(args.known_frames)))
    save_instance(args.out, instance)
    print(f"💾 X-rays of {instance.t} frames written to {args.out}")


def _reconstruct(args):
    instance = load_instance(args.instance)
    frames, unique, counts = [], [], []
    for tau in range(instance.t):
        f1, f2 = instance.frames[tau][0], instance.frames[tau][1]
        if len(instance.directions) == 2 and tau not in instance.windows:
            result = static.reconstruct_two(f1, f2, count=args.count, bound=args.enum_bound)
            if not result.feasible:
                raise InfeasibleError("no point set realizes the X-rays", frame=tau)
            frames.append(result.solution)
            unique.append(result.unique)
            counts.append(result.count)
        else:
            frames.append(windows.select_frame(instance, tau))
            unique.append(None)
            counts.append(None)
        print(f"🔍 Frame {tau}: {len(frames[-1])} points, unique={unique[-1]}")
    if args.out:
        write_json(args.out, to_jsonable({"frames": frames, "unique": unique, "count": counts}))
        print(f"💾 Frames written to {args.out}")


def _track(args, workers):
    instance = load_instance(args.instance)
    started = time.perf_counter()
    result = run_algorithm(instance, args.algo, args.k, args.norm, args.weight_variant, args.budget, workers,
                           args.speed_bound, args.max_rounds)
    logger.info("%s finished in %.3f s", args.algo, time.perf_counter() - started)
    print(f"📊 {args.algo}: {result.n} tracks over {result.t} frames, objective {to_jsonable(result.objective)}")
    if args.out:
        save_tracks(args.out, result)
        print(f"💾 Tracks written to {args.out}")
    if args.plot:
        write_figure(build_figure(instance, result, title=f"{args.algo} tracks"), args.plot)


def _windows(args, workers):
    instance = load_instance(args.instance)
    solutions = windows.check_frames(instance, workers, args.budget)
    doc = {"frames": {tau: {"class": s.window_class, "points": s.points} for tau, s in solutions.items()}}
    for tau, s in sorted(solutions.items()):
        print(f"🔍 Frame {tau}: {s.window_class.value}, {len(s.points)} points")
    if args.algo:
        result = windows.windowed_tracking(instance, args.algo, workers, args.budget)
        doc["tracks"] = [list(path) for path in result.paths()]
        doc["objective"] = result.objective
    if args.out:
        write_json(args.out, to_jsonable(doc))
        print(f"💾 Window results written to {args.out}")


def _eval(args):
    started = time.perf_counter()
    result, truth = load_tracks(args.result), load_tracks(args.truth)
    oracle = load_tracks(args.oracle).objective if args.oracle else None
    runtimes = {"load": time.perf_counter() - started} if args.timings else None
    report = evaluate(result, truth, oracle, runtimes)
    print(f"📊 Edge accuracy {float(report.edge_accuracy):.3f}, "
          f"frame accuracy {[round(float(a), 3) for a in report.frame_accuracy]}, gap {report.objective_gap}")
    if args.out:
        report.write(args.out)
        print(f"💾 Report written to {args.out}")


def _plot(args):
    instance = load_instance(args.instance)
    result = load_tracks(args.tracks) if args.tracks else None
    write_figure(build_figure(instance, result), args.out)
    print(f"💾 Plot written to {args.out}")


def main(argv=None) -> int:
    """Main entry point for the dyntomo jobs; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad arguments and 0 after --help
        return e.code
    setup_logging(args.log_level)

    if not args.command:
        parser.print_help()
        return EXIT_INPUT

    workers = args.workers or get_config().WORKERS
    print(f"🚀 Starting {args.command}")
    try:
        if args.command == "simulate":
            _simulate(args)
        elif args.command == "xray":
            _xray(args)
        elif args.command == "reconstruct":
            _reconstruct(args)
        elif args.command == "track":
            _track(args, workers)
        elif args.command == "windows":
            _windows(args, workers)
        elif args.command == "eval":
            _eval(args)
        elif args.command == "plot":
            _plot(args)
    except InputError as e:
        print(f"❌ Input error: {e}")
        return EXIT_INPUT
    except InfeasibleError as e:
        print(f"❌ Infeasible: {e}")
        return EXIT_INFEASIBLE
    except BudgetExhaustedError as e:
        print(f"❌ Budget exhausted: {e}")
        return EXIT_BUDGET
    print(f"✅ {args.command} completed successfully")
    return EXIT_OK
