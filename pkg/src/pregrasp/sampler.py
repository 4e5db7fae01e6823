"""Pre-grasp sampling on enclosing surfaces of selected tree nodes.

A node is selected when it is a leaf (or has a small-object child, so the
parent is graspable as a whole) and its second-largest dimension fits the
gripper aperture; too-big nodes defer to their children.  Each selected node
is wrapped in an enclosing surface matched to its grasp type — sphere
(Spherical / TwoFingertip), cylinder (Cylindrical) or circle (ThreeFingertip)
— and the surface regions whose sub-faces are free are sampled at fixed
angular / axial intervals.  Every sample faces the box: the approach ray
points back through the node's box.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .classifier import GraspType, ShapeCategory
from .facemask import FaceId, cells_containing, face_frame, subfaces
from .geom import unit

logger = logging.getLogger(__name__)

_PRESHAPES = {
    GraspType.CYLINDRICAL: (0.0, False),
    GraspType.SPHERICAL: (30.0, False),
    GraspType.THREE_FINGERTIP: (0.0, True),
    GraspType.TWO_FINGERTIP: (90.0, True),
}


@dataclass
class GripperConfig:
    finger_length: float = 0.08
    max_aperture: float = 0.10
    standoff: float = 0.02
    friction_mu: float = 0.5


@dataclass
class SamplingParams:
    angular_step: float = 30.0   # degrees
    axial_step: float = 0.02     # meters


@dataclass
class Preshape:
    spread_angle: float          # degrees
    fingertip_mode: bool


@dataclass
class PreGrasp:
    position: np.ndarray
    approach: np.ndarray         # unit, points at the box
    closing_dir: np.ndarray      # unit, orthogonal to approach
    grasp_type: GraspType
    preshape: Preshape
    source_node: int
    source_subface: Tuple[int, int]   # (FaceId, cell)


def preshape_for(grasp_type):
    spread, tips = _PRESHAPES[GraspType(grasp_type)]
    return Preshape(spread, tips)


# ===========================================================================
# Node selection
# ===========================================================================

def select_nodes(tree, classes, gripper):
    """Ids of tree nodes to sample, in depth-first discovery order.

    A node is selected iff (it is a leaf OR one of its children is a small
    3D object) AND its second-largest dimension fits inside max_aperture.
    Selected subtrees are not descended; oversized nodes defer to children.
    """
    selected = []

    def visit(nid):
        node = tree.node(nid)
        fits = 2.0 * node.box.half_extents[1] <= gripper.max_aperture + 1e-12
        small_child = any(
            classes[c][0] == ShapeCategory.THREE_DIMENSIONAL_SMALL for c in node.children)
        if (node.is_leaf or small_child) and fits:
            selected.append(nid)
            return
        for c in node.children:
            visit(c)

    visit(0)
    return selected


# ===========================================================================
# Surface grids
# ===========================================================================

def _angle_steps(span_deg, step_deg, inclusive):
    n = int(np.floor(span_deg / step_deg + 1e-9))
    return [k * step_deg for k in range(n + 1 if inclusive else n)]


def _first_free_cell(face_cells, face_order, locate):
    """First free (face, cell) whose closed rect contains the projected point.

    `locate(face)` returns the face-local (lr, du) coordinates; boundary ties
    are closed, so a point on a shared edge counts for every touching cell.
    """
    for face in face_order:
        lr, du = locate(face)
        for sf in cells_containing(face_cells[int(face)], lr, du):
            if sf.free:
                return int(face), sf.cell
    return None


def _exit_faces(d_local, half):
    """Faces pierced by the ray from the box center along d_local (ties kept)."""
    t = np.full(3, np.inf)
    for axis in range(3):
        if abs(d_local[axis]) > 1e-15:
            t[axis] = half[axis] / abs(d_local[axis])
    tmin = float(t.min())
    faces = []
    for axis in range(3):
        if t[axis] <= tmin * (1.0 + 1e-9):
            faces.append(FaceId(2 * axis + (0 if d_local[axis] > 0 else 1)))
    return faces, tmin


def _closing_from_axis(preferred, fallback, approach):
    c = preferred - (preferred @ approach) * approach
    if np.linalg.norm(c) < 1e-8:
        c = fallback - (fallback @ approach) * approach
    return unit(c)


def sample_spherical(node, mask, gripper, sampling, grasp_type=GraspType.SPHERICAL):
    """Samples on the node's enclosing sphere (Spherical / TwoFingertip).

    A lat-lon direction grid at angular_step spacing (poles once) is projected
    radially onto the box; a direction is kept iff it lands on a free sub-face.
    The approach ray of every sample passes through the box center.
    """
    box = node.box
    radius = float(np.linalg.norm(box.half_extents)) + gripper.standoff
    cells = [subfaces(f, mask, grasp_type, box) for f in FaceId]
    buckets = {}
    step = sampling.angular_step
    phis = _angle_steps(360.0, step, inclusive=False)
    for theta in _angle_steps(180.0, step, inclusive=True):
        polar = theta < 1e-9 or abs(theta - 180.0) < 1e-9
        for phi in ([0.0] if polar else phis):
            th, ph = np.radians(theta), np.radians(phi)
            d_local = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            faces, tmin = _exit_faces(d_local, box.half_extents)
            p = d_local * tmin

            def locate(face, p=p):
                lr_axis, du_axis = face_frame(face)
                return p[lr_axis], p[du_axis]

            hit = _first_free_cell(cells, faces, locate)
            if hit is None:
                continue
            d_world = box.rotation @ d_local
            approach = -d_world
            closing = _closing_from_axis(box.axis(0), box.axis(1), approach)
            buckets.setdefault(hit, []).append(PreGrasp(
                box.center + radius * d_world, approach, closing,
                GraspType(grasp_type), preshape_for(grasp_type),
                node.id, hit))
    return _drain(buckets)


def sample_cylindrical(node, mask, gripper, sampling):
    """Samples on the node's enclosing cylinder (axis = longest box axis).

    Lateral free strips are sampled at angular_step around the axis and
    axial_step along it (approach = inward radial); each free cap contributes
    one sample at the flat-end center (approach = inward axial).
    """
    box = node.box
    hu = float(box.half_extents[0])
    axis_u = box.axis(0)
    radius = float(np.hypot(box.half_extents[1], box.half_extents[2])) + gripper.standoff
    length = 2.0 * hu + 2.0 * gripper.standoff
    cells = [subfaces(f, mask, GraspType.CYLINDRICAL, box) for f in FaceId]
    buckets = {}

    for face in (FaceId.PLUS_U, FaceId.MINUS_U):
        cap = cells[int(face)][0]
        if cap.free:
            sign = 1.0 if face == FaceId.PLUS_U else -1.0
            buckets.setdefault((int(face), 0), []).append(PreGrasp(
                box.center + sign * axis_u * (length / 2.0), -sign * axis_u,
                box.axis(1).copy(), GraspType.CYLINDRICAL,
                preshape_for(GraspType.CYLINDRICAL), node.id, (int(face), 0)))

    n_stations = int(np.floor(length / sampling.axial_step + 1e-9)) + 1
    stations = (np.arange(n_stations) - (n_stations - 1) / 2.0) * sampling.axial_step
    for z in stations:
        for phi in _angle_steps(360.0, sampling.angular_step, inclusive=False):
            ph = np.radians(phi)
            d_local = np.array([0.0, np.cos(ph), np.sin(ph)])
            faces, tmin = _exit_faces(d_local, box.half_extents)
            p = d_local * tmin
            p[0] = z

            def locate(face, p=p):
                lr_axis, du_axis = face_frame(face)
                return p[lr_axis], p[du_axis]

            hit = _first_free_cell(cells, faces, locate)
            if hit is None:
                continue
            radial = box.rotation @ d_local
            approach = -radial
            closing = unit(np.cross(axis_u, approach))
            buckets.setdefault(hit, []).append(PreGrasp(
                box.center + axis_u * z + radial * radius, approach, closing,
                GraspType.CYLINDRICAL, preshape_for(GraspType.CYLINDRICAL),
                node.id, hit))
    return _drain(buckets)


def sample_circle(node, mask, gripper, sampling):
    """Samples on the enclosing circle in the plane of the two largest extents
    (ThreeFingertip).  A sample survives iff its nearest in-plane face (by
    outward-normal alignment) is free; the hand approaches radially with the
    fingers closing across the thin dimension."""
    box = node.box
    radius = float(np.hypot(box.half_extents[0], box.half_extents[1])) + gripper.standoff
    cells = [subfaces(f, mask, GraspType.THREE_FINGERTIP, box) for f in FaceId]
    in_plane = (FaceId.PLUS_U, FaceId.MINUS_U, FaceId.PLUS_V, FaceId.MINUS_V)
    buckets = {}
    for phi in _angle_steps(360.0, sampling.angular_step, inclusive=False):
        ph = np.radians(phi)
        d_local = np.array([np.cos(ph), np.sin(ph), 0.0])
        align = {f: (d_local[int(f) // 2] * (1.0 if int(f) % 2 == 0 else -1.0))
                 for f in in_plane}
        best = max(align.values())
        hit = None
        for face in in_plane:
            if align[face] >= best - 1e-12 and cells[int(face)][0].free:
                hit = (int(face), 0)
                break
        if hit is None:
            continue
        d_world = box.rotation @ d_local
        approach = -d_world
        buckets.setdefault(hit, []).append(PreGrasp(
            box.center + radius * d_world, approach, box.axis(2).copy(),
            GraspType.THREE_FINGERTIP, preshape_for(GraspType.THREE_FINGERTIP),
            node.id, hit))
    return _drain(buckets)


def _drain(buckets):
    """Flatten (face, cell) buckets in (face, cell, sample index) order."""
    out = []
    for key in sorted(buckets):
        out.extend(buckets[key])
    return out


# ===========================================================================
# Pool assembly
# ===========================================================================

_SAMPLERS = {
    GraspType.CYLINDRICAL: sample_cylindrical,
    GraspType.THREE_FINGERTIP: sample_circle,
}


def generate_pool(tree, classes, masks, gripper, sampling):
    """All pre-grasps of the selected nodes, ordered by
    (node id, face, cell, sample index).  Deterministic."""
    pool: List[PreGrasp] = []
    for nid in sorted(select_nodes(tree, classes, gripper)):
        grasp_type = classes[nid][1]
        node, mask = tree.node(nid), masks[nid]
        sampler = _SAMPLERS.get(grasp_type)
        if sampler is not None:
            samples = sampler(node, mask, gripper, sampling)
        else:
            samples = sample_spherical(node, mask, gripper, sampling, grasp_type)
        logger.debug("node %d (%s): %d samples", nid, GraspType(grasp_type).value, len(samples))
        pool.extend(samples)
    logger.info("pre-grasp pool: %d candidates", len(pool))
    return pool
