"""Closed oriented triangle meshes: construction, OFF ingestion and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components


class MeshError(ValueError):
    """Base class for mesh construction failures."""


class OffParseError(MeshError):
    """The OFF text is malformed."""


class MeshValidationError(MeshError):
    """The triangulation is not a closed, oriented, connected surface."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Combinatorics of a closed oriented triangulated surface.

    Parameters
    ----------
    vertex_count : int
        Number of vertices.
    faces : (F, 3) int array
        Counterclockwise vertex triples.
    positions : (V, 3) float array or None
        Embedding, when the mesh came from an embedded builder or a file.

    Notes
    -----
    The derived edge table is sorted lexicographically by ``(min, max)``
    vertex index. ``edge_faces[e]`` and ``edge_opposite[e]`` hold the two
    incident faces and the vertex opposite the edge in each, and
    ``face_edges[f, k]`` is the edge opposite corner ``k`` of face ``f``.
    Construction validates the mesh; instances are never mutated.
    """

    vertex_count: int
    faces: np.ndarray
    positions: np.ndarray | None = None
    edges: np.ndarray = field(init=False, repr=False)
    edge_faces: np.ndarray = field(init=False, repr=False)
    edge_opposite: np.ndarray = field(init=False, repr=False)
    face_edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
            raise MeshValidationError("faces must be a nonempty (F, 3) array")
        if self.vertex_count <= 0:
            raise MeshValidationError("vertex_count must be positive")
        if faces.min() < 0 or faces.max() >= self.vertex_count:
            raise MeshValidationError("face index out of range")
        if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
                  | (faces[:, 0] == faces[:, 2])):
            raise MeshValidationError("face with a repeated vertex")
        positions = self.positions
        if positions is not None:
            positions = np.array(positions, dtype=float)
            if positions.shape != (self.vertex_count, 3):
                raise MeshValidationError("positions must have shape (V, 3)")
            positions.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "positions", positions)
        for name, value in zip(("edges", "edge_faces", "edge_opposite", "face_edges"),
                               _derive_connectivity(self.vertex_count, faces)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_vertices(self) -> int:
        return self.vertex_count

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def __repr__(self):
        return (f"TriMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces}, "
                f"chi={self.euler_characteristic()})")


def _derive_connectivity(nv, faces):
    nf = len(faces)
    # half-edge k of face f runs from corner k+1 to corner k+2, opposite corner k
    tail = faces[:, [1, 2, 0]].ravel()
    head = faces[:, [2, 0, 1]].ravel()
    opp = faces.ravel()
    hface = np.repeat(np.arange(nf), 3)

    directed = tail * nv + head
    order = np.argsort(directed, kind="stable")
    dup = np.flatnonzero(np.diff(directed[order]) == 0)
    if len(dup):
        h = order[dup[0]]
        raise MeshValidationError(
            f"inconsistent orientation or non-manifold edge ({tail[h]}, {head[h]})")

    lo = np.minimum(tail, head)
    hi = np.maximum(tail, head)
    key = lo * nv + hi
    order = np.lexsort((tail > head, key))
    skey = key[order]
    uniq, start, counts = np.unique(skey, return_index=True, return_counts=True)
    if np.any(counts != 2):
        bad = np.flatnonzero(counts != 2)[0]
        e = (int(uniq[bad] // nv), int(uniq[bad] % nv))
        kind = "boundary" if counts[bad] == 1 else "non-manifold"
        raise MeshValidationError(f"{kind} edge {e}")

    first = order[start]
    second = order[start + 1]
    edges = np.column_stack([lo[first], hi[first]])
    edge_faces = np.column_stack([hface[first], hface[second]])
    edge_opposite = np.column_stack([opp[first], opp[second]])

    face_edges = np.empty(3 * nf, dtype=np.int64)
    edge_ids = np.arange(len(uniq))
    face_edges[first] = edge_ids
    face_edges[second] = edge_ids
    face_edges = face_edges.reshape(nf, 3)

    adj = sparse.coo_matrix((np.ones(len(uniq)), (edge_faces[:, 0], edge_faces[:, 1])),
                            shape=(nf, nf))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise MeshValidationError(f"disconnected: {ncomp} components")
    used = np.zeros(nv, dtype=bool)
    used[faces.ravel()] = True
    if not used.all():
        raise MeshValidationError(f"isolated vertex {int(np.flatnonzero(~used)[0])}")

    chi = nv - len(uniq) + nf
    if chi > 2 or chi % 2:
        raise MeshValidationError(f"Euler characteristic {chi} is not an even integer <= 2")
    return edges, edge_faces, edge_opposite, face_edges


def euler_characteristic(mesh: TriMesh) -> int:
    """Return ``V - E + F``."""
    return mesh.euler_characteristic()


def load_off(text: str) -> TriMesh:
    """Parse an OFF document of triangles into a validated `TriMesh`.

    Lines starting with ``#`` and blank lines are skipped. The edge count in
    the header is ignored.

    Raises
    ------
    OffParseError
        Bad header, counts, coordinates or indices, or a non-triangle face.
    MeshValidationError
        The faces do not form a closed, consistently oriented, connected
        surface.
    """
    lines = [ln.strip() for ln in text.replace("\r\n", "\n").split("\n")]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != "OFF":
        raise OffParseError("first line must be the token OFF")
    try:
        counts = [int(tok) for tok in lines[1].split()]
    except (IndexError, ValueError):
        raise OffParseError("missing or malformed 'V F E' count line") from None
    if len(counts) != 3 or counts[0] <= 0 or counts[1] <= 0 or counts[2] < 0:
        raise OffParseError("count line must be three nonnegative integers 'V F E'")
    nv, nf = counts[0], counts[1]
    body = lines[2:]
    if len(body) < nv + nf:
        raise OffParseError(f"expected {nv} vertex and {nf} face lines, got {len(body)} lines")
    if len(body) > nv + nf:
        raise OffParseError("trailing content after the face block")

    positions = np.empty((nv, 3))
    for i, ln in enumerate(body[:nv]):
        toks = ln.split()
        if len(toks) != 3:
            raise OffParseError(f"vertex {i}: expected 3 coordinates, got {len(toks)}")
        try:
            positions[i] = [float(t) for t in toks]
        except ValueError:
            raise OffParseError(f"vertex {i}: malformed coordinate") from None
    if not np.all(np.isfinite(positions)):
        raise OffParseError("non-finite vertex coordinate")

    faces = np.empty((nf, 3), dtype=np.int64)
    for f, ln in enumerate(body[nv:]):
        try:
            toks = [int(t) for t in ln.split()]
        except ValueError:
            raise OffParseError(f"face {f}: malformed index") from None
        if not toks or toks[0] != 3 or len(toks) != 4:
            raise OffParseError(f"face {f}: only triangles ('3 i j k') are supported")
        if min(toks[1:]) < 0 or max(toks[1:]) >= nv:
            raise OffParseError(f"face {f}: vertex index out of range")
        faces[f] = toks[1:]
    return TriMesh(nv, faces, positions)


def read_off(path) -> TriMesh:
    with open(path, encoding="ascii", newline="") as fh:
        return load_off(fh.read())


def to_off(mesh: TriMesh) -> str:
    """Serialize an embedded mesh as OFF text (round-trips through `load_off`)."""
    if mesh.positions is None:
        raise MeshError("mesh has no positions to write")
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}"]
    out += [" ".join(repr(float(x)) for x in p) for p in mesh.positions]
    out += ["3 %d %d %d" % tuple(f) for f in mesh.faces]
    return "\n".join(out) + "\n"


_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def build_icosphere(subdivisions: int, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron with every vertex projected onto a sphere.

    Each subdivision splits a triangle into four at the edge midpoints, so
    the result has ``10 * 4**subdivisions + 2`` vertices.
    """
    if not 0 <= subdivisions <= 7 or int(subdivisions) != subdivisions:
        raise ValueError("subdivisions must be an integer in [0, 7]")
    if not radius > 0:
        raise ValueError("radius must be positive")
    phi = (1 + math.sqrt(5)) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = _ICO_FACES.tolist()
    for _ in range(int(subdivisions)):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = refined
    return TriMesh(len(verts), np.array(faces), radius * np.array(verts))


def build_flat_torus(m: int, n: int, width: float = 1.0, height: float = 1.0):
    """Flat torus from an ``m x n`` periodic grid on ``[0, width] x [0, height]``.

    Every cell is cut by its lower-left to upper-right diagonal. The mesh has
    no embedding; the intrinsic edge lengths come back as a
    `~riccilab.geometry.ConformalMetric` with ``u = 0``.

    Returns
    -------
    mesh : TriMesh
    metric : ConformalMetric
    """
    from .geometry import ConformalMetric

    if int(m) != m or int(n) != n or m < 3 or n < 3:
        raise ValueError("flat torus needs integer m, n >= 3")
    if not (width > 0 and height > 0):
        raise ValueError("width and height must be positive")
    m, n = int(m), int(n)
    i, j = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    i, j = i.ravel(), j.ravel()

    def vid(a, b):
        return (a % m) * n + (b % n)

    v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    faces = np.concatenate([np.column_stack([v00, v10, v11]),
                            np.column_stack([v00, v11, v01])])
    mesh = TriMesh(m * n, faces)

    # an edge's grid step (di, dj) in {0, 1}^2 identifies its kind
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    di = (b // n - a // n) % m
    dj = (b % n - a % n) % n
    di = np.minimum(di, m - di)
    dj = np.minimum(dj, n - dj)
    hx, hy = width / m, height / n
    lengths = np.hypot(di * hx, dj * hy)
    return mesh, ConformalMetric(mesh, lengths)
