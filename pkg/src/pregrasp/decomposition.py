"""Fit-and-split box decomposition of a point cloud.

A cloud is recursively partitioned into a binary tree of oriented boxes:

1. fit an approximate minimum-volume bounding box (PCA axes, then a
   coordinate-descent sweep of small rotations about each box axis),
2. scan a fixed grid of axis-parallel candidate planes through the box,
3. accept the cheapest split when the children's summed volume drops below
   ``volume_ratio`` of the parent volume and both children keep more than
   ``min_points / 2`` points,
4. recurse while a node holds at least ``min_points`` points.

Node ids are assigned breadth-first from 0.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DegenerateInput, EmptySide
from .geom import rotation_about_axis

logger = logging.getLogger(__name__)

# Half-extent floor: keeps boxes of planar/collinear clouds usable downstream.
EXTENT_FLOOR = 1e-4

# Adjacent eigenvalues within this ratio are treated as a tied (degenerate)
# pair; the in-plane orientation is then resolved by a min-area rectangle
# search instead of trusting the arbitrary eigenvector basis.
_TIED_EIGENVALUE_RATIO = 1.25


# ===========================================================================
# Types
# ===========================================================================

@dataclass
class OrientedBox:
    """Box given by center, rotation (columns are the u/v/w axes) and
    half-extents sorted in descending order (u is the longest axis)."""

    center: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)

    @property
    def volume(self):
        return float(8.0 * np.prod(self.half_extents))

    def axis(self, i):
        return self.rotation[:, i]

    def to_local(self, points):
        return (np.asarray(points, dtype=float) - self.center) @ self.rotation

    def contains(self, points, tol=0.0):
        local = np.abs(self.to_local(points))
        return bool(np.all(local <= self.half_extents + tol))

    def corners(self):
        """The 8 corners, sign order (---, --+, -+-, ..., +++)."""
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return self.center + (signs * self.half_extents) @ self.rotation.T

    def as_dict(self):
        return {
            "center": self.center.tolist(),
            "rotation": self.rotation.tolist(),
            "half_extents": self.half_extents.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return OrientedBox(np.array(d["center"]), np.array(d["rotation"]),
                           np.array(d["half_extents"]))


@dataclass
class SplitPlane:
    """Axis-parallel plane: normal = box axis `axis`, passing through
    center + offset * axis (offset in meters along that axis)."""

    axis: int
    offset: float


@dataclass
class SplitEval:
    """Outcome of cutting a node's points with one candidate plane."""

    plane: SplitPlane
    idx_a: np.ndarray        # indices (into the evaluated points) below the plane
    idx_b: np.ndarray        # indices on the non-negative side
    box_a: "OrientedBox"
    box_b: "OrientedBox"
    volume_sum: float


@dataclass
class DecompParams:
    volume_ratio: float = 0.9
    min_points: int = 500
    planes_per_axis: int = 16
    mvbb_refine_steps: int = 3


@dataclass
class DecompNode:
    id: int
    box: OrientedBox
    point_indices: np.ndarray
    parent: Optional[int] = None
    children: Tuple[int, ...] = ()

    @property
    def is_leaf(self):
        return len(self.children) == 0


@dataclass
class DecompTree:
    nodes: List[DecompNode] = field(default_factory=list)

    def node(self, nid):
        return self.nodes[nid]

    def leaf_ids(self):
        return [n.id for n in self.nodes if n.is_leaf]

    def ancestors_of(self, nid):
        out = []
        p = self.nodes[nid].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def descendants_of(self, nid):
        out = []
        stack = list(self.nodes[nid].children)
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(self.nodes[c].children)
        return out


# ===========================================================================
# Minimum-volume box fitting
# ===========================================================================

def _basis_rotation(axis, angle):
    e = np.zeros(3)
    e[axis] = 1.0
    return rotation_about_axis(e, angle)


def _clamped_volume(extents):
    return float(np.prod(np.maximum(extents, 2.0 * EXTENT_FLOOR)))


def _rot2_basis(cos, sin):
    """Stacked 2D rotation rows: first half u = (cos, sin), second half
    v = (-sin, cos), shaped (2k, 2) for a single gemm against (2, n)."""
    k = len(cos)
    basis = np.empty((2 * k, 2))
    basis[:k, 0] = cos
    basis[:k, 1] = sin
    basis[k:, 0] = -sin
    basis[k:, 1] = cos
    return basis


def _min_area_angle(p2, step_deg=3.0):
    """In-plane angle in [0, 90) minimizing the 2D bounding-rectangle area."""
    angles = np.radians(np.arange(0.0, 90.0, step_deg))
    k = len(angles)
    uv = _rot2_basis(np.cos(angles), np.sin(angles)) @ p2.T     # (2k, n)
    spans = np.maximum(uv.max(axis=1) - uv.min(axis=1), 2 * EXTENT_FLOOR)
    return float(angles[int(np.argmin(spans[:k] * spans[k:]))])


def _pca_axes(X):
    """Principal axes (columns, descending eigenvalue), with near-tied
    eigenvalue pairs re-oriented by a min-area rectangle search.

    PCA leaves the basis of a (near-)degenerate eigenspace arbitrary — for a
    square cross-section the returned pair can sit at any in-plane angle, far
    outside the reach of the local refinement sweep, so the tie is resolved
    geometrically here.
    """
    cov = X.T @ X / len(X)
    evals, evecs = np.linalg.eigh(cov)
    lam = np.maximum(evals[::-1], 0.0)
    axes = evecs[:, ::-1].copy()
    for i, j in ((0, 1), (1, 2), (0, 1)):
        if lam[j] <= 0.0 or lam[i] > _TIED_EIGENVALUE_RATIO * lam[j]:
            continue
        p2 = X @ axes[:, (i, j)]
        theta = _min_area_angle(p2)
        c, s = np.cos(theta), np.sin(theta)
        a_new = c * axes[:, i] + s * axes[:, j]
        b_new = -s * axes[:, i] + c * axes[:, j]
        axes[:, i], axes[:, j] = a_new, b_new
    return axes


def fit_obb(points, refine_steps=3):
    """Approximate minimum-volume bounding box of a point set.

    Args:
        points: (n, 3) array-like, n >= 1 (callers normally pass >= 4).
        refine_steps: rounds of the rotation sweep; the +/-10 degree range is
            halved each round.

    Returns:
        OrientedBox containing every input point; half-extents sorted
        descending and floored at EXTENT_FLOOR; rotation right-handed with the
        two dominant axes sign-fixed (largest-magnitude component positive).

    Raises:
        DegenerateInput: all points coincide.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise DegenerateInput("no points")
    mean = pts.mean(axis=0)
    X = pts - mean
    if float(np.abs(X).max(initial=0.0)) < 1e-12:
        raise DegenerateInput("all points coincide")

    R = _pca_axes(X)
    P = X @ R
    ext = P.max(axis=0) - P.min(axis=0)
    best_vol = _clamped_volume(ext)
    for rnd in range(refine_steps):
        half_range = np.radians(10.0) / (2.0 ** rnd)
        angles = np.linspace(-half_range, half_range, 9)
        m = len(angles)
        basis = _rot2_basis(np.cos(angles), np.sin(angles))
        for axis in range(3):
            # rotating about a box axis only mixes the other two projected
            # columns, so the sweep needs no full re-projection
            j, k = (axis + 1) % 3, (axis + 2) % 3
            uv = basis @ P[:, (j, k)].T                  # (2m, n)
            hi, lo = uv.max(axis=1), uv.min(axis=1)
            exts = np.empty((m, 3))
            exts[:, axis] = ext[axis]
            exts[:, j] = hi[:m] - lo[:m]
            exts[:, k] = hi[m:] - lo[m:]
            vols = np.maximum(exts, 2.0 * EXTENT_FLOOR).prod(axis=1)
            kb = int(np.argmin(vols))
            if vols[kb] < best_vol:
                best_vol = float(vols[kb])
                R = R @ _basis_rotation(axis, float(angles[kb]))
                P[:, j], P[:, k] = uv[kb], uv[m + kb]
                ext = exts[kb]

    # canonical form: extents descending, dominant axes sign-fixed, det = +1
    proj = X @ R
    ext = proj.max(axis=0) - proj.min(axis=0)
    R = R[:, np.argsort(-ext, kind="stable")]
    for c in (0, 1):
        col = R[:, c]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            R[:, c] = -col
    R[:, 2] = np.cross(R[:, 0], R[:, 1])
    proj = X @ R
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    center = mean + R @ ((lo + hi) / 2.0)
    half = np.maximum((hi - lo) / 2.0, EXTENT_FLOOR)
    return OrientedBox(center, R, half)


# ===========================================================================
# Split search
# ===========================================================================

def evaluate_split(points, parent_box, plane, refine_steps=3):
    """Cut `points` with `plane` (in the parent box frame) and fit both sides.

    Points are partitioned by signed distance to the plane; ties go to the
    non-negative side.

    Raises:
        EmptySide: one side received no points.
        DegenerateInput: one side's points all coincide.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    d = (pts - parent_box.center) @ parent_box.axis(plane.axis) - plane.offset
    idx_a = np.flatnonzero(d < 0.0)
    idx_b = np.flatnonzero(d >= 0.0)
    if len(idx_a) == 0 or len(idx_b) == 0:
        raise EmptySide(f"plane axis={plane.axis} offset={plane.offset:.6g} "
                        f"left {len(idx_a)}/{len(idx_b)} points")
    box_a = fit_obb(pts[idx_a], refine_steps)
    box_b = fit_obb(pts[idx_b], refine_steps)
    return SplitEval(plane, idx_a, idx_b, box_a, box_b, box_a.volume + box_b.volume)


def candidate_offsets(half_extent, planes_per_axis):
    """Uniformly spaced plane offsets in the open interval (-h, +h)."""
    k = np.arange(1, planes_per_axis + 1, dtype=float)
    return -half_extent + k * (2.0 * half_extent) / (planes_per_axis + 1)


def _best_split_eval(node, cloud, params):
    """Minimum summed-child-volume candidate, or None if the best one fails
    the acceptance test (volume ratio + per-child point minimum)."""
    pts = cloud.points[node.point_indices]
    best = None
    for axis in range(3):
        for offset in candidate_offsets(node.box.half_extents[axis], params.planes_per_axis):
            try:
                ev = evaluate_split(pts, node.box, SplitPlane(axis, float(offset)),
                                    params.mvbb_refine_steps)
            except (EmptySide, DegenerateInput):
                continue
            if best is None or ev.volume_sum < best.volume_sum:
                best = ev
    if best is None:
        return None
    if best.volume_sum > params.volume_ratio * node.box.volume:
        return None
    # strictly more than min_points/2 per child; the boundary count is rejected
    if min(len(best.idx_a), len(best.idx_b)) <= params.min_points / 2.0:
        return None
    return best


def best_split(node, cloud, params=None):
    """The accepted split plane for `node`, or None when the node stays whole.

    Candidates: `planes_per_axis` offsets per box axis; ties on summed volume
    resolve to the lowest axis index, then the smallest offset.
    """
    params = params or DecompParams()
    ev = _best_split_eval(node, cloud, params)
    return None if ev is None else ev.plane


def decompose(cloud, params=None):
    """Build the box-decomposition tree of a cloud.

    Recursion stops at nodes holding fewer than `min_points` points or whose
    best candidate split is rejected.  Deterministic for identical input.
    """
    params = params or DecompParams()
    root_box = fit_obb(cloud.points, params.mvbb_refine_steps)
    tree = DecompTree([DecompNode(0, root_box, np.arange(len(cloud.points)))])
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        node = tree.nodes[nid]
        if len(node.point_indices) < params.min_points:
            continue
        ev = _best_split_eval(node, cloud, params)
        if ev is None:
            continue
        ida, idb = len(tree.nodes), len(tree.nodes) + 1
        tree.nodes.append(DecompNode(ida, ev.box_a, node.point_indices[ev.idx_a], nid))
        tree.nodes.append(DecompNode(idb, ev.box_b, node.point_indices[ev.idx_b], nid))
        node.children = (ida, idb)
        queue.extend((ida, idb))
        logger.debug("split node %d (%d pts) -> %d (%d pts) + %d (%d pts), ratio %.3f",
                     nid, len(node.point_indices), ida, len(ev.idx_a), idb, len(ev.idx_b),
                     ev.volume_sum / node.box.volume)
    logger.info("decomposition: %d nodes, %d leaves", len(tree.nodes), len(tree.leaf_ids()))
    return tree
