"""Discrete conformal metrics (vertex scaling) and their curvature.

A metric is a set of base edge lengths together with per-vertex log scale
factors ``u``; edge ``ij`` has length ``exp((u_i + u_j) / 2) * l0_ij``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, TriMesh


class GeometryError(ValueError):
    pass


class TriangleInequalityError(GeometryError):
    """Induced edge lengths of some face violate the strict triangle inequality."""

    def __init__(self, face, lengths=None):
        self.face = int(face)
        msg = f"triangle inequality violated on face {self.face}"
        if lengths is not None:
            msg += " (lengths %.6g, %.6g, %.6g)" % tuple(lengths)
        super().__init__(msg)


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    mesh: TriMesh
    base_lengths: np.ndarray
    u: np.ndarray = None

    def __post_init__(self):
        base = np.array(self.base_lengths, dtype=float)
        if base.shape != (self.mesh.n_edges,):
            raise GeometryError("base_lengths must have one entry per edge")
        if not np.all(base > 0) or not np.all(np.isfinite(base)):
            raise GeometryError("base lengths must be finite and strictly positive")
        u = np.zeros(self.mesh.n_vertices) if self.u is None else np.array(self.u, dtype=float)
        if u.shape != (self.mesh.n_vertices,):
            raise GeometryError("u must have one entry per vertex")
        base.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "base_lengths", base)
        object.__setattr__(self, "u", u)

    def with_u(self, u) -> ConformalMetric:
        return ConformalMetric(self.mesh, self.base_lengths, u)

    def edge_lengths(self) -> np.ndarray:
        e = self.mesh.edges
        return np.exp(0.5 * (self.u[e[:, 0]] + self.u[e[:, 1]])) * self.base_lengths

    def face_lengths(self) -> np.ndarray:
        """(F, 3) array; column k is the length opposite corner k."""
        return self.edge_lengths()[self.mesh.face_edges]

    def total_area(self) -> float:
        return float(heron_area(self.face_lengths()).sum())


def check_triangles(lengths):
    """Raise `TriangleInequalityError` naming the first face that fails."""
    a, b, c = lengths[:, 0], lengths[:, 1], lengths[:, 2]
    bad = (a >= b + c) | (b >= a + c) | (c >= a + b) | ~np.isfinite(a + b + c)
    if bad.any():
        f = int(np.flatnonzero(bad)[0])
        raise TriangleInequalityError(f, lengths[f])


def heron_area(lengths):
    """Triangle areas from side lengths, Kahan's cancellation-safe form."""
    s = -np.sort(-np.asarray(lengths, dtype=float), axis=-1)
    a, b, c = s[..., 0], s[..., 1], s[..., 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


def _angles_from_lengths(lengths):
    a, b, c = lengths[..., 0], lengths[..., 1], lengths[..., 2]
    cos_a = (b * b + c * c - a * a) / (2 * b * c)
    cos_b = (a * a + c * c - b * b) / (2 * a * c)
    cos_c = (a * a + b * b - c * c) / (2 * a * b)
    cos = np.stack([cos_a, cos_b, cos_c], axis=-1)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def face_angles(metric: ConformalMetric, lengths=None) -> np.ndarray:
    """(F, 3) corner angles; column k is the angle at corner k."""
    if lengths is None:
        lengths = metric.face_lengths()
    check_triangles(lengths)
    return _angles_from_lengths(lengths)


def corner_angles(metric: ConformalMetric, face: int) -> np.ndarray:
    """Corner angles of one face by the law of cosines."""
    lengths = metric.face_lengths()[face][None, :]
    try:
        check_triangles(lengths)
    except TriangleInequalityError:
        raise TriangleInequalityError(face, lengths[0]) from None
    return _angles_from_lengths(lengths)[0]


def triangle_angles(a: float, b: float, c: float) -> np.ndarray:
    """Angles opposite sides ``a``, ``b``, ``c`` of a single triangle."""
    lengths = np.array([[a, b, c]], dtype=float)
    check_triangles(lengths)
    return _angles_from_lengths(lengths)[0]


def corner_cotangents(lengths) -> np.ndarray:
    """(F, 3) cotangents of the corner angles, computed from side lengths."""
    a2, b2, c2 = (np.asarray(lengths) ** 2).T
    area4 = 4 * heron_area(lengths)
    return np.column_stack([b2 + c2 - a2, a2 + c2 - b2, a2 + b2 - c2]) / area4[:, None]


def dual_areas(mesh: TriMesh, lengths) -> np.ndarray:
    """Circumcentric dual area of every vertex.

    Corner ``i`` of a face with neighbours ``j``, ``k`` receives
    ``(l_ij^2 cot k + l_ik^2 cot j) / 8``. These areas sum to the total area
    and satisfy ``A_i = 0.5 * d(total area)/du_i`` under vertex scaling; on
    equilateral faces they coincide with barycentric thirds. Obtuse faces
    make negative contributions.
    """
    l2 = np.asarray(lengths) ** 2
    cot = corner_cotangents(lengths)
    nxt, prv = [1, 2, 0], [2, 0, 1]
    # side from corner k to corner k+1 is opposite corner k+2, and vice versa
    part = (l2[:, prv] * cot[:, prv] + l2[:, nxt] * cot[:, nxt]) / 8
    return np.bincount(mesh.faces.ravel(), weights=part.ravel(), minlength=mesh.n_vertices)


def vertex_areas(metric: ConformalMetric, lengths=None) -> np.ndarray:
    """Dual vertex areas; raises `GeometryError` if any is nonpositive."""
    if lengths is None:
        lengths = metric.face_lengths()
    check_triangles(lengths)
    A = dual_areas(metric.mesh, lengths)
    if not np.all(A > 0):
        i = int(np.flatnonzero(~(A > 0))[0])
        raise GeometryError(f"nonpositive dual area {A[i]:.3g} at vertex {i}")
    return A


@dataclass(frozen=True)
class CurvatureState:
    """Angle defects, dual vertex areas and scalar curvature of a metric.

    ``R = 2 K / A`` pointwise, and ``r = 4 pi chi / total_area`` is the
    average scalar curvature.
    """

    K: np.ndarray
    A: np.ndarray
    total_area: float
    R: np.ndarray
    r: float
    min_angle: float

    @property
    def max_dev(self) -> float:
        return float(np.max(np.abs(self.R - self.r)))


def _defects(mesh, angles):
    return 2 * math.pi - np.bincount(mesh.faces.ravel(), weights=angles.ravel(),
                                     minlength=mesh.n_vertices)


def angle_defects(metric: ConformalMetric) -> np.ndarray:
    """``K_i = 2 pi - (sum of corner angles at i)``; needs only valid triangles."""
    return _defects(metric.mesh, face_angles(metric))


def curvature_state(metric: ConformalMetric) -> CurvatureState:
    mesh = metric.mesh
    lengths = metric.face_lengths()
    angles = face_angles(metric, lengths)
    K = _defects(mesh, angles)
    A = vertex_areas(metric, lengths)
    total = float(A.sum())
    R = 2 * K / A
    r = 4 * math.pi * mesh.euler_characteristic() / total
    return CurvatureState(K, A, total, R, r, float(angles.min()))


def metric_from_positions(mesh: TriMesh) -> ConformalMetric:
    """Euclidean edge lengths of the embedding, with ``u = 0``."""
    if mesh.positions is None:
        raise GeometryError("mesh has no positions")
    p = mesh.positions
    lengths = np.linalg.norm(p[mesh.edges[:, 0]] - p[mesh.edges[:, 1]], axis=1)
    if np.any(lengths <= 0):
        e = mesh.edges[int(np.flatnonzero(lengths <= 0)[0])]
        raise GeometryError(f"zero-length edge ({e[0]}, {e[1]})")
    metric = ConformalMetric(mesh, lengths)
    check_triangles(metric.face_lengths())
    return metric


def rescale_to_area(metric: ConformalMetric, target_area: float) -> ConformalMetric:
    """Shift ``u`` by a constant so the total area equals ``target_area``."""
    if not target_area > 0:
        raise GeometryError("target_area must be positive")
    c = 0.5 * math.log(target_area / metric.total_area())
    return metric.with_u(metric.u + c)


def perturb(metric: ConformalMetric, amplitude: float, seed: int) -> ConformalMetric:
    """Add seeded uniform noise in ``[-amplitude, amplitude]`` to ``u``."""
    if not amplitude >= 0:
        raise GeometryError("amplitude must be nonnegative")
    if amplitude == 0:
        return metric
    rng = np.random.default_rng(seed)
    delta = rng.uniform(-amplitude, amplitude, size=metric.mesh.n_vertices)
    out = metric.with_u(metric.u + delta)
    check_triangles(out.face_lengths())
    return out


__all__ = [
    "ConformalMetric", "CurvatureState", "GeometryError", "MeshError",
    "TriangleInequalityError", "angle_defects", "corner_angles", "corner_cotangents", "curvature_state",
    "dual_areas", "face_angles", "heron_area", "metric_from_positions", "perturb",
    "rescale_to_area", "triangle_angles", "vertex_areas",
]
