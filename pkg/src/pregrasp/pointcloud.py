"""Point-cloud loading, synthetic test shapes, and JSON result files.

Loaders accept three plain-text formats:

* ``xyz``  -- whitespace-separated ``x y z`` per line, ``#`` comments allowed
* ``ply``  -- ASCII 1.0, vertex element only (binary PLY is rejected)
* ``obj``  -- ``v`` lines only, everything else ignored

All coordinates are meters.  Point order is preserved from the input file.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import BadDimension, EmptyCloud, ParseError

logger = logging.getLogger(__name__)

MIN_POINTS = 4

SYNTH_KINDS = ("box", "sphere", "cylinder", "plate", "dumbbell", "lshape")


@dataclass
class PointCloud:
    """An (n, 3) float64 array of points plus the name it was loaded under."""

    points: np.ndarray
    source_name: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.points)

    @property
    def centroid(self):
        return self.points.mean(axis=0)

    @property
    def diagonal(self):
        """Length of the axis-aligned bounding-box diagonal."""
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


# ===========================================================================
# Loaders
# ===========================================================================

def load_cloud(path, fmt=None):
    """Read a point cloud from `path`.

    Args:
        path: file to read.
        fmt: 'xyz', 'ply' or 'obj'; inferred from the extension when None.

    Returns:
        PointCloud with at least 4 points.

    Raises:
        FileNotFoundError, ParseError, EmptyCloud.
    """
    if fmt is None:
        fmt = os.path.splitext(str(path))[1].lstrip(".").lower() or "xyz"
    fmt = fmt.lower()
    if fmt not in ("xyz", "ply", "obj"):
        raise ParseError(0, f"unknown format {fmt!r} (expected xyz, ply or obj)")
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        lines = fh.read().splitlines()

    if fmt == "xyz":
        pts = _parse_xyz(lines)
    elif fmt == "ply":
        pts = _parse_ply(lines)
    else:
        pts = _parse_obj(lines)

    if len(pts) < MIN_POINTS:
        raise EmptyCloud(f"{path}: {len(pts)} points, need at least {MIN_POINTS}")
    logger.info("loaded %d points from %s", len(pts), path)
    return PointCloud(np.array(pts, dtype=float), source_name=str(path))


def _parse_float_triple(tokens, line_no):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(line_no, f"bad number: {exc}") from None
    if not all(np.isfinite(vals)):
        raise ParseError(line_no, "non-finite coordinate")
    return vals


def _parse_xyz(lines):
    pts = []
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(i, f"expected 3 values, got {len(tokens)}")
        pts.append(_parse_float_triple(tokens, i))
    return pts


def _parse_ply(lines):
    if not lines or lines[0].strip() != "ply":
        raise ParseError(1, "not a PLY file (missing 'ply' magic)")
    n_vertices = None
    vertex_props = []
    in_vertex_element = False
    data_start = None
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if line.startswith("comment") or not line:
            continue
        if line.startswith("format"):
            if "ascii" not in line:
                raise ParseError(i, "binary PLY is not supported; export ASCII 1.0")
        elif line.startswith("element"):
            parts = line.split()
            in_vertex_element = len(parts) == 3 and parts[1] == "vertex"
            if in_vertex_element:
                try:
                    n_vertices = int(parts[2])
                except ValueError:
                    raise ParseError(i, f"bad vertex count {parts[2]!r}") from None
        elif line.startswith("property") and in_vertex_element:
            vertex_props.append(line.split()[-1])
        elif line == "end_header":
            data_start = i
            break
    if data_start is None:
        raise ParseError(len(lines), "missing end_header")
    if n_vertices is None:
        raise ParseError(data_start, "no vertex element declared")
    try:
        cols = [vertex_props.index(ax) for ax in ("x", "y", "z")]
    except ValueError:
        raise ParseError(data_start, "vertex element lacks x/y/z properties") from None

    pts = []
    row = 0
    for i, raw in enumerate(lines[data_start:], start=data_start + 1):
        if row >= n_vertices:
            break
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < len(vertex_props):
            raise ParseError(i, f"expected {len(vertex_props)} vertex values, got {len(tokens)}")
        pts.append(_parse_float_triple([tokens[c] for c in cols], i))
        row += 1
    if row < n_vertices:
        raise ParseError(len(lines), f"vertex element promised {n_vertices} rows, found {row}")
    return pts


def _parse_obj(lines):
    pts = []
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line.startswith("v ") and line != "v":
            continue
        tokens = line.split()[1:]
        if len(tokens) < 3:
            raise ParseError(i, f"'v' line needs 3 coordinates, got {len(tokens)}")
        pts.append(_parse_float_triple(tokens[:3], i))
    return pts


# ===========================================================================
# Synthetic shapes
# ===========================================================================

def synth_shape(kind, dims, n, seed):
    """Sample `n` points uniformly on the surface of an analytic test shape.

    Kinds and their `dims` tuples (meters):
        box        (dx, dy, dz)
        sphere     (r,)
        cylinder   (r, length)           axis along +z
        plate      (dx, dy, thickness)
        dumbbell   (length, end_a, end_b, neck)   two cubes joined by a neck, axis +x
        lshape     (leg_a, leg_b, thickness)      two orthogonal square-section legs

    Deterministic for a given (kind, dims, n, seed).
    """
    if kind not in SYNTH_KINDS:
        raise BadDimension(f"unknown shape kind {kind!r}")
    if n < MIN_POINTS:
        raise EmptyCloud(f"n={n}, need at least {MIN_POINTS}")
    dims = tuple(float(d) for d in dims)
    if any(d <= 0.0 for d in dims):
        raise BadDimension(f"{kind}: dimensions must be positive, got {dims}")
    rng = np.random.default_rng(seed)

    if kind in ("box", "plate"):
        if len(dims) != 3:
            raise BadDimension(f"{kind} needs (dx, dy, dz), got {len(dims)} values")
        pts = _box_surface(rng, np.array(dims) / 2.0, n)
    elif kind == "sphere":
        if len(dims) != 1:
            raise BadDimension(f"sphere needs (r,), got {len(dims)} values")
        pts = _sphere_surface(rng, dims[0], n)
    elif kind == "cylinder":
        if len(dims) != 2:
            raise BadDimension(f"cylinder needs (r, length), got {len(dims)} values")
        pts = _cylinder_surface(rng, dims[0], dims[1], n)
    elif kind == "dumbbell":
        if len(dims) != 4:
            raise BadDimension(f"dumbbell needs (length, end_a, end_b, neck), got {len(dims)} values")
        pts = _union_of_boxes(rng, _dumbbell_boxes(*dims), n)
    else:
        if len(dims) != 3:
            raise BadDimension(f"lshape needs (leg_a, leg_b, thickness), got {len(dims)} values")
        pts = _union_of_boxes(rng, _lshape_boxes(*dims), n)

    return PointCloud(pts, source_name=f"synth:{kind}")


def _box_surface(rng, half, n):
    areas = np.array([half[1] * half[2], half[0] * half[2], half[0] * half[1]])
    weights = np.repeat(areas, 2) / (2.0 * areas.sum())
    faces = rng.choice(6, size=n, p=weights)
    pts = rng.uniform(-half, half, size=(n, 3))
    axis = faces // 2
    sign = 1.0 - 2.0 * (faces % 2)
    pts[np.arange(n), axis] = sign * half[axis]
    return pts


def _sphere_surface(rng, r, n):
    v = rng.standard_normal((n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return r * v / norms


def _cylinder_surface(rng, r, length, n):
    lateral = 2.0 * np.pi * r * length
    caps = 2.0 * np.pi * r * r
    on_lateral = rng.random(n) < lateral / (lateral + caps)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    pts = np.empty((n, 3))
    pts[:, 0] = np.cos(phi)
    pts[:, 1] = np.sin(phi)
    # lateral: full radius, uniform height; caps: disc point at either end
    z_lat = rng.uniform(-length / 2.0, length / 2.0, n)
    rad_cap = r * np.sqrt(rng.random(n))
    z_cap = np.where(rng.random(n) < 0.5, -length / 2.0, length / 2.0)
    radius = np.where(on_lateral, r, rad_cap)
    pts[:, 0] *= radius
    pts[:, 1] *= radius
    pts[:, 2] = np.where(on_lateral, z_lat, z_cap)
    return pts


def _dumbbell_boxes(length, end_a, end_b, neck):
    if length <= end_a + end_b:
        raise BadDimension(f"dumbbell length {length} must exceed end_a + end_b = {end_a + end_b}")
    half_l = length / 2.0
    return [
        (np.array([-half_l + end_a / 2.0, 0.0, 0.0]), np.array([end_a, end_a, end_a]) / 2.0),
        (np.array([half_l - end_b / 2.0, 0.0, 0.0]), np.array([end_b, end_b, end_b]) / 2.0),
        (np.array([(end_a - end_b) / 2.0, 0.0, 0.0]),
         np.array([length - end_a - end_b, neck, neck]) / 2.0),
    ]


def _lshape_boxes(leg_a, leg_b, t):
    # leg A along +x, leg B along +y sharing a t x t face; recentred on the union box
    shift = np.array([leg_a / 2.0, (t + leg_b) / 2.0, t / 2.0])
    return [
        (np.array([leg_a / 2.0, t / 2.0, t / 2.0]) - shift, np.array([leg_a, t, t]) / 2.0),
        (np.array([t / 2.0, t + leg_b / 2.0, t / 2.0]) - shift, np.array([t, leg_b, t]) / 2.0),
    ]


def _union_of_boxes(rng, boxes, n):
    """Surface-sample a union of axis-aligned boxes, rejecting interior points."""
    areas = np.array([8.0 * (h[0] * h[1] + h[0] * h[2] + h[1] * h[2]) for _, h in boxes])
    weights = areas / areas.sum()
    out = []
    kept = 0
    while kept < n:
        # keep batches in pick order so truncation below stays area-weighted
        batch = max(32, int((n - kept) * 1.5))
        picks = rng.choice(len(boxes), size=batch, p=weights)
        pts = np.empty((batch, 3))
        for b, (center, half) in enumerate(boxes):
            rows = np.flatnonzero(picks == b)
            if len(rows):
                pts[rows] = _box_surface(rng, half, len(rows)) + center
        keep = np.ones(batch, dtype=bool)
        for b, (center, half) in enumerate(boxes):
            inside = np.all(np.abs(pts - center) < half - 1e-12, axis=1)
            keep &= ~(inside & (picks != b))
        out.append(pts[keep])
        kept += int(keep.sum())
    return np.concatenate(out)[:n]


# ===========================================================================
# Result documents
# ===========================================================================

def save_results(path, payload):
    """Write a JSON result document atomically (temp file + rename)."""
    path = str(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".pregrasp-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info("wrote %s", path)


def load_results(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
