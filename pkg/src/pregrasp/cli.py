"""Command-line front end.

Subcommands decompose / classify / mask / sample / rank each run the pipeline
from the raw cloud up to the named stage and write one JSON run document, so a
later stage's document is a strict superset of an earlier one.  synth writes
procedural test clouds as XYZ text, export-viz turns a run document into a
wireframe OBJ (boxes as 12-edge frames, pre-grasps as 3-segment triads, the
top ranked pose in group "best").

Exit codes: 0 success, 1 runtime failure (I/O, parse, degenerate data),
2 invalid configuration (the offending flag is named on stderr).
"""

import argparse
import logging
import os
import sys

import numpy as np

from .classifier import ClassifierThresholds
from .decomposition import DecompParams, OrientedBox
from .errors import ConfigError, PreGraspError
from .graspeval import EvalParams
from .pipeline import STAGES, RunConfig, run_pipeline
from .pointcloud import SYNTH_KINDS, load_cloud, load_results, save_results, synth_shape
from .sampler import GripperConfig, SamplingParams

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

# corner pairs (indices into OrientedBox.corners()) forming the 12 box edges
_BOX_EDGES = ((0, 1), (0, 2), (0, 4), (1, 3), (1, 5), (2, 3),
              (2, 6), (3, 7), (4, 5), (4, 6), (5, 7), (6, 7))

_SYNTH_DEFAULT_DIMS = {
    "box": {"dx": 0.2, "dy": 0.15, "dz": 0.1},
    "plate": {"dx": 0.2, "dy": 0.15, "dz": 0.01},
    "sphere": {"r": 0.05},
    "cylinder": {"r": 0.03, "length": 0.2},
    "dumbbell": {"length": 0.2, "end_a": 0.08, "end_b": 0.03, "neck": 0.015},
    "lshape": {"leg_a": 0.2, "leg_b": 0.15, "thickness": 0.04},
}
_SYNTH_DIM_ORDER = {
    "box": ("dx", "dy", "dz"),
    "plate": ("dx", "dy", "dz"),
    "sphere": ("r",),
    "cylinder": ("r", "length"),
    "dumbbell": ("length", "end_a", "end_b", "neck"),
    "lshape": ("leg_a", "leg_b", "thickness"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pregrasp",
        description="Decompose a point cloud into boxes and rank three-finger pre-grasps.")
    sub = parser.add_subparsers(dest="command", required=True)

    pipe = argparse.ArgumentParser(add_help=False)
    pipe.add_argument("--input", required=True, help="point cloud file")
    pipe.add_argument("--format", choices=("xyz", "ply", "obj"), default=None,
                      help="input format (default: from extension)")
    pipe.add_argument("--out", default="run.json", help="output JSON document")
    pipe.add_argument("--min-points", type=int, default=500)
    pipe.add_argument("--volume-ratio", type=float, default=0.9)
    pipe.add_argument("--planes-per-axis", type=int, default=16)
    pipe.add_argument("--tau-long", type=float, default=4.0)
    pipe.add_argument("--tau-flat", type=float, default=4.0)
    pipe.add_argument("--s-small", type=float, default=0.04)
    pipe.add_argument("--aperture", type=float, default=0.10)
    pipe.add_argument("--finger-length", type=float, default=0.08)
    pipe.add_argument("--standoff", type=float, default=0.02)
    pipe.add_argument("--angular-step", type=float, default=30.0)
    pipe.add_argument("--axial-step", type=float, default=0.02)
    pipe.add_argument("--mu", type=float, default=0.5)
    pipe.add_argument("--cone-edges", type=int, default=8)
    pipe.add_argument("--quality-dirs", type=int, default=1024)
    pipe.add_argument("--tube-radius", type=float, default=0.005)
    pipe.add_argument("--seed", type=int, default=0)
    for stage in STAGES:
        sub.add_parser(stage, parents=[pipe],
                       help=f"run the pipeline through the {stage} stage")

    synth = sub.add_parser("synth", help="generate a procedural point cloud")
    synth.add_argument("kind", choices=sorted(SYNTH_KINDS))
    synth.add_argument("--n", type=int, default=5000, help="number of surface points")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", default="cloud.xyz")
    for flag in ("dx", "dy", "dz", "r", "length", "end-a", "end-b", "neck",
                 "leg-a", "leg-b", "thickness"):
        synth.add_argument(f"--{flag}", type=float, default=None)

    viz = sub.add_parser("export-viz", help="write a wireframe OBJ of a run document")
    viz.add_argument("--input", required=True, help="run document (JSON)")
    viz.add_argument("--out", default="scene.obj")
    viz.add_argument("--top-k", type=int, default=1,
                     help="how many ranked poses to tag as best groups")
    return parser


# ---------------------------------------------------------------------------
# validation (exit code 2); every message names the offending flag
# ---------------------------------------------------------------------------

def _check(cond, flag, requirement, value):
    if not cond:
        raise ConfigError(flag, f"must be {requirement}, got {value}")

def validate_pipeline_args(ns):
    _check(ns.min_points >= 4, "--min-points", ">= 4", ns.min_points)
    _check(0.0 < ns.volume_ratio <= 1.0, "--volume-ratio", "in (0, 1]", ns.volume_ratio)
    _check(ns.planes_per_axis >= 1, "--planes-per-axis", ">= 1", ns.planes_per_axis)
    _check(ns.tau_long > 1.0, "--tau-long", "> 1", ns.tau_long)
    _check(ns.tau_flat > 1.0, "--tau-flat", "> 1", ns.tau_flat)
    _check(ns.s_small > 0.0, "--s-small", "> 0", ns.s_small)
    _check(ns.aperture > 0.0, "--aperture", "> 0", ns.aperture)
    _check(ns.finger_length > 0.0, "--finger-length", "> 0", ns.finger_length)
    _check(ns.standoff >= 0.0, "--standoff", ">= 0", ns.standoff)
    _check(0.0 < ns.angular_step <= 180.0, "--angular-step", "in (0, 180]", ns.angular_step)
    _check(ns.axial_step > 0.0, "--axial-step", "> 0", ns.axial_step)
    _check(ns.mu >= 0.0, "--mu", ">= 0", ns.mu)
    _check(ns.cone_edges >= 3, "--cone-edges", ">= 3", ns.cone_edges)
    _check(ns.quality_dirs >= 1, "--quality-dirs", ">= 1", ns.quality_dirs)
    _check(ns.tube_radius > 0.0, "--tube-radius", "> 0", ns.tube_radius)

def validate_synth_args(ns):
    _check(ns.n >= 4, "--n", ">= 4", ns.n)
    for name in _SYNTH_DIM_ORDER[ns.kind]:
        value = getattr(ns, name)
        if value is not None:
            _check(value > 0.0, "--" + name.replace("_", "-"), "> 0", value)


def _synth_dims(ns):
    dims = []
    for name in _SYNTH_DIM_ORDER[ns.kind]:
        value = getattr(ns, name)
        dims.append(_SYNTH_DEFAULT_DIMS[ns.kind][name] if value is None else value)
    return tuple(dims)


def _run_config(ns):
    return RunConfig(
        input=ns.input, format=ns.format, out=ns.out,
        decomposition=DecompParams(volume_ratio=ns.volume_ratio,
                                   min_points=ns.min_points,
                                   planes_per_axis=ns.planes_per_axis),
        thresholds=ClassifierThresholds(tau_long=ns.tau_long, tau_flat=ns.tau_flat,
                                        s_small=ns.s_small),
        gripper=GripperConfig(finger_length=ns.finger_length, max_aperture=ns.aperture,
                              standoff=ns.standoff, friction_mu=ns.mu),
        sampling=SamplingParams(angular_step=ns.angular_step, axial_step=ns.axial_step),
        evaluation=EvalParams(cone_edges=ns.cone_edges, quality_dirs=ns.quality_dirs,
                              tube_radius=ns.tube_radius, seed=ns.seed),
    )


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_stage(ns):
    cloud = load_cloud(ns.input, ns.format)
    doc = run_pipeline(cloud, _run_config(ns), upto=ns.command)
    save_results(ns.out, doc)
    print(ns.out)

def _cmd_synth(ns):
    cloud = synth_shape(ns.kind, _synth_dims(ns), ns.n, ns.seed)
    with open(ns.out, "w", encoding="utf-8") as fh:
        fh.write(f"# synth {ns.kind} n={ns.n} seed={ns.seed}\n")
        for x, y, z in cloud.points:
            fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")
    logger.info("wrote %d points to %s", len(cloud.points), ns.out)
    print(ns.out)

def _cmd_export_viz(ns):
    _check(ns.top_k >= 1, "--top-k", ">= 1", ns.top_k)
    doc = load_results(ns.input)
    lines = ["# pregrasp scene export"]
    n_verts = 0

    for node in doc.get("tree", {}).get("nodes", ()):
        box = OrientedBox.from_dict(node["box"])
        lines.append(f"g box_{node['id']}")
        for corner in box.corners():
            lines.append("v " + " ".join(f"{v:.6f}" for v in corner))
        for a, b in _BOX_EDGES:
            lines.append(f"l {n_verts + a + 1} {n_verts + b + 1}")
        n_verts += 8

    best_rank = {}      # pool index -> 1-based rank among the displayed top-k
    ranking = doc.get("ranking", ())
    for r, entry in enumerate(ranking[:ns.top_k], start=1):
        best_rank.setdefault(entry["pool_index"], r)

    for i, pg in enumerate(doc.get("pool", ())):
        rank = best_rank.get(i)
        if rank == 1:
            lines.append("g best")
        elif rank is not None:
            lines.append(f"g best_{rank}")
        else:
            lines.append(f"g grasp_{i}")
        pos = np.asarray(pg["position"])
        approach = np.asarray(pg["approach"])
        closing = np.asarray(pg["closing_dir"])
        third = np.cross(approach, closing)
        for point in (pos, pos + 0.03 * approach, pos + 0.02 * closing,
                      pos + 0.02 * third):
            lines.append("v " + " ".join(f"{v:.6f}" for v in point))
        for end in (2, 3, 4):
            lines.append(f"l {n_verts + 1} {n_verts + end}")
        n_verts += 4

    with open(ns.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.info("wrote OBJ scene to %s", ns.out)
    print(ns.out)


# ---------------------------------------------------------------------------

def main(argv=None):
    ns = build_parser().parse_args(argv)

    log_name = os.environ.get("PREGRASP_LOG", "quiet")
    if log_name not in _LOG_LEVELS:
        print(f"error: PREGRASP_LOG must be one of {', '.join(_LOG_LEVELS)}, "
              f"got {log_name!r}", file=sys.stderr)
        return 2
    logging.basicConfig(stream=sys.stderr, level=_LOG_LEVELS[log_name],
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        if ns.command in STAGES:
            validate_pipeline_args(ns)
            _cmd_stage(ns)
        elif ns.command == "synth":
            validate_synth_args(ns)
            _cmd_synth(ns)
        else:
            _cmd_export_viz(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PreGraspError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
