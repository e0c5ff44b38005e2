"""
This module provides the ambient-space vector algebra and curve containers shared by all
solvers: points and directions in R^n, sampled curves with first and second derivatives,
perpendicular components and best-fit planes.

Key Features:
- Validates ambient vectors (dimension and finiteness) as float64 NumPy arrays.
- Stores sampled curves in the immutable `CurveSample` container.
- Computes the component of a vector orthogonal to a unit tangent.
- Fits the least-squares plane through a sampled curve with scikit-learn's PCA and
  reports maximum and RMS distances to it.
- Measures deviation from unit speed and bundles per-sample equation residuals.

Usage:
- Build a `CurveSample(params, positions, d1, d2)` from arrays of shape (m,) and (m, n).
- Call `fit_plane(curve)` to get a `PlaneFit`; `max_residual` is the planarity witness.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.decomposition import PCA

from errors import PreconditionError
from settings import DEFAULT_SETTINGS


def as_vec(values, dim=None):
    """
    Converts a sequence of numbers into an ambient vector (1-D float64 array).

    Args:
        values (array_like): Components of the vector.
        dim (int, optional): Required dimension. Checked when given.

    Returns:
        numpy.ndarray: The validated vector.
    """
    vec = np.asarray(values, dtype=float)
    if vec.ndim != 1 or vec.size < 2:
        raise PreconditionError(f"An ambient vector needs at least 2 components, got shape {vec.shape}")
    if dim is not None and vec.size != dim:
        raise PreconditionError(f"Expected a vector of dimension {dim}, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise PreconditionError(f"Vector components must be finite, got {vec}")
    return vec


def _as_block(values, name, rows, dim=None):
    block = np.array(values, dtype=float)
    if block.ndim != 2 or block.shape[0] != rows:
        raise PreconditionError(f"{name} must have shape ({rows}, n), got {block.shape}")
    if dim is not None and block.shape[1] != dim:
        raise PreconditionError(f"{name} has dimension {block.shape[1]}, expected {dim}")
    if block.shape[1] < 2:
        raise PreconditionError(f"{name} must live in R^n with n >= 2")
    if not np.all(np.isfinite(block)):
        raise PreconditionError(f"{name} contains non-finite values")
    return block


@dataclass(frozen=True, eq=False)
class CurveSample:
    """
    A discretised curve: parameter values with position, first and second derivative.

    Attributes:
        params (numpy.ndarray): Strictly increasing parameter values, shape (m,).
        positions (numpy.ndarray): Points gamma(t_i), shape (m, n).
        d1 (numpy.ndarray): gamma'(t_i), shape (m, n).
        d2 (numpy.ndarray): gamma''(t_i), shape (m, n).
    """

    params: np.ndarray
    positions: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        params = np.array(self.params, dtype=float)
        if params.ndim != 1 or params.size < 2:
            raise PreconditionError("A curve sample needs at least 2 parameter values")
        if not np.all(np.diff(params) > 0):
            raise PreconditionError("Curve parameters must be strictly increasing")
        m = params.size
        positions = _as_block(self.positions, "positions", m)
        dim = positions.shape[1]
        d1 = _as_block(self.d1, "d1", m, dim)
        d2 = _as_block(self.d2, "d2", m, dim)
        # Frozen dataclass: normalised arrays are stored through object.__setattr__
        for name, value in (("params", params), ("positions", positions), ("d1", d1), ("d2", d2)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dimension(self):
        return self.positions.shape[1]

    def __len__(self):
        return self.params.size

    def diameter(self):
        """Largest distance between the bounding-box corners of the samples."""
        return float(np.linalg.norm(self.positions.max(axis=0) - self.positions.min(axis=0)))

    def embed(self, dim):
        """Returns the same curve with zero coordinates appended up to dimension `dim`."""
        if dim < self.dimension:
            raise PreconditionError(f"Cannot embed a curve of dimension {self.dimension} into R^{dim}")
        pad = ((0, 0), (0, dim - self.dimension))
        return CurveSample(self.params, np.pad(self.positions, pad), np.pad(self.d1, pad), np.pad(self.d2, pad))


@dataclass(frozen=True, eq=False)
class PlaneFit:
    """Least-squares 2-plane through a point cloud and the distances of the points to it."""

    basepoint: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray
    max_residual: float
    rms_residual: float
    distances: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Per-sample residuals of a named equation with their max and RMS norms."""

    name: str
    per_sample: np.ndarray = field(repr=False)
    max_residual: float
    rms_residual: float
    skipped: int = 0

    @classmethod
    def from_values(cls, name, values, skipped=0):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls(name, values, 0.0, 0.0, skipped)
        return cls(name, values, float(np.max(values)), float(np.sqrt(np.mean(values ** 2))), skipped)


def perp_component(p, tangent, settings=DEFAULT_SETTINGS):
    """
    Component of `p` orthogonal to a unit tangent: p - <p, tangent> tangent.

    Args:
        p (array_like): Vector to project.
        tangent (array_like): Unit vector of the same dimension.
        settings (Settings): Source of the unit-length tolerance.

    Returns:
        numpy.ndarray: The orthogonal component.
    """
    p = as_vec(p)
    tangent = as_vec(tangent, p.size)
    if abs(np.linalg.norm(tangent) - 1.0) > settings.unit_tol:
        raise PreconditionError(f"Tangent must have unit length, got |tangent| = {np.linalg.norm(tangent)!r}")
    return p - np.dot(p, tangent) * tangent


def perp_components(points, tangents):
    """Row-wise p_i - <p_i, t_i> t_i for arrays of points and (unit) tangents."""
    points = np.asarray(points, dtype=float)
    tangents = np.asarray(tangents, dtype=float)
    return points - np.einsum("ij,ij->i", points, tangents)[:, None] * tangents


def fit_plane(curve):
    """
    Fits the least-squares plane through the sample positions of a curve.

    The plane passes through the centroid and is spanned by the two leading principal
    directions of the second-moment matrix. A collinear cloud yields some plane containing
    the line; residuals remain valid.

    Args:
        curve (CurveSample or numpy.ndarray): Curve, or an (m, n) array of points.

    Returns:
        PlaneFit: Basepoint, orthonormal basis and distance statistics.
    """
    points = curve.positions if isinstance(curve, CurveSample) else np.asarray(curve, dtype=float)
    if points.ndim != 2 or points.shape[0] < 3:
        raise PreconditionError("fit_plane needs at least 3 sample points")
    if points.shape[1] == 2:
        # A planar cloud already is its own plane.
        zeros = np.zeros(points.shape[0])
        return PlaneFit(points.mean(axis=0), np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.0, 0.0, zeros)

    pca = PCA(n_components=2, svd_solver="full")
    pca.fit(points)
    basis1, basis2 = pca.components_
    # Distances to the plane: what the two principal components do not reproduce
    reproduced = pca.inverse_transform(pca.transform(points))
    distances = np.linalg.norm(points - reproduced, axis=1)
    return PlaneFit(
        basepoint=pca.mean_.copy(),
        basis1=basis1.copy(),
        basis2=basis2.copy(),
        max_residual=float(distances.max()),
        rms_residual=float(np.sqrt(np.mean(distances ** 2))),
        distances=distances,
    )


def arc_length_defect(curve):
    """Largest deviation of |gamma'| from 1 over the samples."""
    speeds = np.linalg.norm(curve.d1, axis=1)
    return float(np.max(np.abs(speeds - 1.0)))


def distance_to_span(points, vectors, origin=None):
    """
    Distances from points to the affine span of `origin` and the given direction vectors.

    Args:
        points (numpy.ndarray): (m, n) array.
        vectors (Sequence[array_like]): Directions spanning the subspace. Dependent or
            zero vectors are allowed; the span is computed from an SVD.
        origin (array_like, optional): Base point, default the origin of R^n.

    Returns:
        numpy.ndarray: (m,) distances.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if origin is not None:
        points = points - as_vec(origin, points.shape[1])
    spanning = np.atleast_2d(np.asarray(vectors, dtype=float))
    u, sing, vt = np.linalg.svd(spanning, full_matrices=False)
    rank_tol = max(spanning.shape) * np.finfo(float).eps * (sing[0] if sing.size else 0.0)
    basis = vt[sing > rank_tol]
    if basis.size == 0:
        return np.linalg.norm(points, axis=1)
    return np.linalg.norm(points - (points @ basis.T) @ basis, axis=1)


# Self-similar kinds: gamma'' = -sign * gamma^perp
KIND_SIGN = {"shrinker": 1.0, "expander": -1.0}


def kind_sign(kind):
    try:
        return KIND_SIGN[kind]
    except KeyError:
        raise PreconditionError(f"kind must be 'shrinker' or 'expander', got {kind!r}") from None


def soliton_acceleration(kind, positions, d1):
    """
    Right-hand side of the self-similarity equation for arc-length parametrised curves.

    Shrinkers satisfy gamma'' = <gamma, gamma'> gamma' - gamma, expanders the negative of it.
    Works row-wise on (m, n) arrays as well as on single vectors.
    """
    sign = kind_sign(kind)
    positions = np.asarray(positions, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    if positions.ndim == 1:
        return -sign * (positions - np.dot(positions, d1) * d1)
    return -sign * perp_components(positions, d1)


@dataclass(frozen=True, eq=False)
class LineSoliton:
    """
    The straight line t -> t * direction through the origin.

    Lines through the origin solve both the shrinker and the expander equation with
    gamma'' = gamma^perp = 0, so they are kept out of the polar reduction (which needs
    alpha > 0 away from one point).
    """

    direction: np.ndarray

    def __post_init__(self):
        direction = as_vec(self.direction)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            raise PreconditionError("A line needs a non-zero direction")
        object.__setattr__(self, "direction", direction / norm)

    def sample(self, params):
        params = np.asarray(params, dtype=float)
        positions = np.outer(params, self.direction)
        d1 = np.tile(self.direction, (params.size, 1))
        return CurveSample(params, positions, d1, np.zeros_like(d1))
