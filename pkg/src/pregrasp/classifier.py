"""PCA shape categories and the grasp type each one maps to.

Eigenvalue ratios of the point covariance separate elongated, flat and blocky
parts; blocky parts are then split by absolute size against the gripper scale.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInput


class ShapeCategory(str, Enum):
    ONE_DIMENSIONAL = "OneDimensional"
    TWO_DIMENSIONAL = "TwoDimensional"
    THREE_DIMENSIONAL_SMALL = "ThreeDimensionalSmall"
    THREE_DIMENSIONAL_LARGE = "ThreeDimensionalLarge"


class GraspType(str, Enum):
    CYLINDRICAL = "Cylindrical"
    SPHERICAL = "Spherical"
    THREE_FINGERTIP = "ThreeFingertip"
    TWO_FINGERTIP = "TwoFingertip"


CATEGORY_TO_GRASP = {
    ShapeCategory.ONE_DIMENSIONAL: GraspType.CYLINDRICAL,
    ShapeCategory.TWO_DIMENSIONAL: GraspType.THREE_FINGERTIP,
    ShapeCategory.THREE_DIMENSIONAL_SMALL: GraspType.TWO_FINGERTIP,
    ShapeCategory.THREE_DIMENSIONAL_LARGE: GraspType.SPHERICAL,
}


@dataclass
class ClassifierThresholds:
    tau_long: float = 4.0    # lambda1/lambda2 at or above this -> elongated
    tau_flat: float = 4.0    # lambda2/lambda3 at or above this -> flat
    s_small: float = 0.04    # blocky parts with max extent below this (m) -> small


@dataclass
class PcaResult:
    centroid: np.ndarray
    eigenvalues: np.ndarray   # descending, >= 0
    eigenvectors: np.ndarray  # columns matched to eigenvalues, det = +1


def pca(points):
    """Principal component analysis of a point set (n >= 4).

    Eigenvalues are returned descending and clamped at zero.  Each of the two
    dominant eigenvectors is sign-fixed so its largest-magnitude component is
    positive; the third is flipped if needed to keep the basis right-handed.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    centroid = pts.mean(axis=0)
    X = pts - centroid
    if float(np.abs(X).max(initial=0.0)) < 1e-12:
        raise DegenerateInput("all points coincide")
    cov = X.T @ X / len(X)
    evals, evecs = np.linalg.eigh(cov)
    lam = np.maximum(evals[::-1], 0.0)
    axes = evecs[:, ::-1].copy()
    for c in range(3):
        col = axes[:, c]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            axes[:, c] = -col
    if np.linalg.det(axes) < 0.0:
        axes[:, 2] = -axes[:, 2]
    return PcaResult(centroid, lam, axes)


def classify(pca_result, extents, thresholds=None):
    """Assign a shape category and grasp type.

    Args:
        pca_result: PcaResult of the node's points.
        extents: full box dimensions (3,), meters.
        thresholds: ClassifierThresholds (defaults used when None).

    Rules, in order: elongated (lambda1/lambda2 >= tau_long) -> Cylindrical;
    flat (lambda2/lambda3 >= tau_flat) -> ThreeFingertip; small blocky
    (max extent < s_small) -> TwoFingertip; otherwise -> Spherical.
    """
    t = thresholds or ClassifierThresholds()
    l1, l2, l3 = pca_result.eigenvalues
    ratio_12 = l1 / l2 if l2 > 0.0 else np.inf
    ratio_23 = l2 / l3 if l3 > 0.0 else (np.inf if l2 > 0.0 else 1.0)
    if ratio_12 >= t.tau_long:
        cat = ShapeCategory.ONE_DIMENSIONAL
    elif ratio_23 >= t.tau_flat:
        cat = ShapeCategory.TWO_DIMENSIONAL
    elif float(np.max(extents)) < t.s_small:
        cat = ShapeCategory.THREE_DIMENSIONAL_SMALL
    else:
        cat = ShapeCategory.THREE_DIMENSIONAL_LARGE
    return cat, CATEGORY_TO_GRASP[cat]
